"""Tests for target motion models, escape headings and the capture shut-off."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.environment import Environment
from src.geometry import TWO_PI, unit
from src.target_models import (
    EncapsulationRing,
    MotionModel,
    MotionVariant,
    PatternKind,
    TargetState,
    TargetSurroundings,
    apply_move,
    escape_arc,
    escape_heading,
    intruders_of,
    on_capture,
    target_step,
)

ARENA = Environment.rectangle(60.0, 60.0)
TARGET = TargetState(position=(30.0, 30.0), heading=0.0, radius=1.0, max_step=0.65, escape_radius=3.894)


def surroundings(robots=(), others=(), margin=7.1, spacing=26.0):
    return TargetSurroundings(
        ARENA,
        np.asarray(robots, dtype=float).reshape(-1, 2),
        np.asarray(others, dtype=float).reshape(-1, 2),
        margin,
        spacing,
    )


class TestEscape:

    def test_intruders_inclusive(self):
        robots = np.array([[33.0, 30.0], [35.0, 30.0], [30.0 + 3.894, 30.0]])
        assert len(intruders_of(TARGET, robots)) == 2

    def test_single_intruder_half_plane(self):
        low, high = escape_arc(np.zeros(2), np.array([[-1.0, 0.0]]))
        assert (low, high) == pytest.approx((-np.pi / 2, np.pi / 2))

    def test_two_intruders_quarter(self):
        low, high = escape_arc(np.zeros(2), np.array([[-1.0, 0.0], [0.0, -1.0]]))
        assert (low, high) == pytest.approx((0.0, np.pi / 2))

    def test_surrounded_has_no_arc(self):
        ring = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        assert escape_arc(np.zeros(2), ring) is None

    @given(
        st.lists(st.floats(min_value=0.0, max_value=np.pi * 0.9), min_size=1, max_size=4),
        st.floats(min_value=0.0, max_value=TWO_PI),
        st.integers(min_value=0, max_value=10 ** 6),
    )
    @settings(max_examples=100)
    def test_heading_moves_away_from_every_intruder(self, spread, rotation, seed):
        """Intruders within a half-plane leave an arc; the chosen heading opens every gap."""
        bearings = rotation + np.asarray(spread)
        intruders = TARGET.center + 2.0 * unit(bearings)
        heading = escape_heading(TARGET, intruders, np.random.default_rng(seed))
        away = TARGET.center - intruders
        assert np.all(away @ unit(heading) >= -1e-9)

    def test_surrounded_heading_maximizes_clearance(self):
        intruders = TARGET.center + np.array([[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -3.0]])
        heading = escape_heading(TARGET, intruders, np.random.default_rng(0))
        assert 0.0 <= heading < TWO_PI
        assert np.sin(heading) < 0

    def test_needs_intruders(self):
        with pytest.raises(ValueError):
            escape_heading(TARGET, np.empty((0, 2)), np.random.default_rng(0))


class TestMotion:

    def test_captured_targets_stay(self):
        move = target_step(replace(TARGET, captured=True), MotionModel(), surroundings([[31.0, 30.0]]),
                           np.random.default_rng(0))
        assert move.step == 0.0

    @given(st.integers(min_value=0, max_value=10 ** 6))
    @settings(max_examples=50)
    def test_random_walk_bounds(self, seed):
        model = MotionModel(MotionVariant.RANDOM)
        move = target_step(TARGET, model, surroundings(), np.random.default_rng(seed))
        assert 0.0 <= move.step <= TARGET.max_step
        assert not move.escaping
        moved = apply_move(TARGET, move)
        assert ARENA.distance_to_boundary(moved.center) >= 7.1

    def test_random_target_ignores_robots(self):
        model = MotionModel(MotionVariant.RANDOM)
        move = target_step(TARGET, model, surroundings([[31.0, 30.0]]), np.random.default_rng(0))
        assert not move.escaping

    def test_escape_at_full_speed(self):
        move = target_step(TARGET, MotionModel(), surroundings([[27.0, 30.0]]), np.random.default_rng(0))
        assert move.escaping
        assert move.step == pytest.approx(TARGET.max_step)
        assert np.cos(move.heading) >= 0

    def test_random_escape_without_intruders_wanders(self):
        move = target_step(TARGET, MotionModel(), surroundings([[20.0, 30.0]]), np.random.default_rng(0))
        assert not move.escaping
        assert move.step <= TARGET.max_step

    def test_boundary_margin_respected_near_wall(self):
        near_wall = replace(TARGET, position=(7.2, 30.0))
        for seed in range(20):
            move = target_step(near_wall, MotionModel(MotionVariant.RANDOM), surroundings(),
                               np.random.default_rng(seed))
            assert ARENA.distance_to_boundary(apply_move(near_wall, move).center) >= 7.1

    def test_spacing_pairs_only_separate(self):
        """A target already too close to another may not move closer."""
        others = [[40.0, 30.0]]
        for seed in range(20):
            move = target_step(TARGET, MotionModel(MotionVariant.RANDOM), surroundings(others=others),
                               np.random.default_rng(seed))
            moved = apply_move(TARGET, move)
            assert np.hypot(*(moved.center - others[0])) >= 10.0 - 1e-12

    @pytest.mark.slow
    def test_random_walk_has_no_drift(self):
        """A million draws of the random model average out to zero displacement."""
        model = MotionModel(MotionVariant.RANDOM)
        rng = np.random.default_rng(5)
        open_space = surroundings()
        samples = 1_000_000
        moves = np.empty((samples, 2))
        for i in range(samples):
            move = target_step(TARGET, model, open_space, rng)
            moves[i] = move.step * unit(move.heading)
        mean = moves.mean(axis=0)
        stderr = moves.std(axis=0, ddof=1) / np.sqrt(samples)
        assert np.all(np.abs(mean) <= 4 * stderr)


class TestPatterns:

    def test_constant_velocity_keeps_heading(self):
        model = MotionModel(MotionVariant.PATTERN_ESCAPE, PatternKind.CONSTANT_VELOCITY, cruise_step=0.3)
        move = target_step(replace(TARGET, heading=0.7), model, surroundings(), np.random.default_rng(0))
        assert move.heading == pytest.approx(0.7)
        assert move.step == pytest.approx(0.3)
        assert not move.escaping

    def test_circle_turns_by_arc_angle(self):
        model = MotionModel(MotionVariant.PATTERN_ESCAPE, PatternKind.CIRCLE, cruise_step=0.3, turn_radius=6.0)
        move = target_step(TARGET, model, surroundings(), np.random.default_rng(0))
        assert move.turn == pytest.approx(0.05)
        assert move.step == pytest.approx(0.3)

    def test_waypoints_advance(self):
        model = MotionModel(MotionVariant.PATTERN_ESCAPE, PatternKind.WAYPOINTS, cruise_step=0.5,
                            waypoints=((30.2, 30.0), (30.0, 40.0)))
        move = target_step(TARGET, model, surroundings(), np.random.default_rng(0))
        assert move.step == pytest.approx(0.2)
        assert move.waypoint_index == 1
        moved = apply_move(TARGET, move)
        assert moved.center == pytest.approx([30.2, 30.0])
        assert moved.waypoint_index == 1

    def test_pattern_target_still_escapes(self):
        model = MotionModel(MotionVariant.PATTERN_ESCAPE, cruise_step=0.3)
        move = target_step(TARGET, model, surroundings([[30.0, 27.0]]), np.random.default_rng(0))
        assert move.escaping
        assert move.step == pytest.approx(TARGET.max_step)

    @pytest.mark.parametrize("kwargs", [
        {"variant": MotionVariant.PATTERN_ESCAPE, "pattern": PatternKind.CIRCLE},
        {"variant": MotionVariant.PATTERN_ESCAPE, "pattern": PatternKind.WAYPOINTS},
        {"cruise_step": -1.0},
    ])
    def test_invalid_models(self, kwargs):
        with pytest.raises(ValueError):
            MotionModel(**kwargs)


class TestCapture:

    RING = EncapsulationRing(safe_radius=3.0, outer_radius=5.0, robots_required=4)

    def test_freezes_ring_members_only(self):
        robots = TARGET.center + np.array([[2.0, 0.0], [4.0, 0.0], [0.0, 5.0], [-6.0, 0.0], [0.0, -3.0]])
        captured, frozen = on_capture(TARGET, robots, {3}, self.RING)
        assert captured.captured
        assert frozen == frozenset({1, 2, 3})

    def test_idempotent(self):
        robots = TARGET.center + np.array([[4.0, 0.0]])
        captured, frozen = on_capture(TARGET, robots, (), self.RING)
        again, frozen_again = on_capture(captured, robots + 10.0, frozen, self.RING)
        assert again == captured
        assert frozen_again == frozen
