"""Tests for arena geometry, placement and boundary sensing."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.environment import Environment
from src.signal_model import SignalKind, SignalProfile, line_response

BOUNDARY = SignalProfile(SignalKind.ENVIRONMENT, 3.0)


class TestRectangle:

    def test_signed_distance(self):
        arena = Environment.rectangle(60.0, 40.0)
        assert arena.distance_to_boundary([1.0, 20.0]) == pytest.approx(1.0)
        assert arena.distance_to_boundary([30.0, 39.0]) == pytest.approx(1.0)
        assert arena.distance_to_boundary([-1.0, 20.0]) == pytest.approx(-1.0)
        np.testing.assert_allclose(arena.distance_to_boundary([[30.0, 20.0], [5.0, 5.0]]), [20.0, 5.0])

    def test_contains_with_margin(self):
        arena = Environment.rectangle(10.0, 10.0)
        assert list(arena.contains(np.array([[1.0, 5.0], [2.0, 5.0]]), margin=1.5)) == [False, True]

    def test_inward_normal_and_reflection(self):
        arena = Environment.rectangle(60.0, 60.0)
        np.testing.assert_allclose(arena.inward_normal([0.5, 30.0]), [1.0, 0.0])
        reflected = arena.reflect_heading([0.5, 30.0], np.pi)
        assert np.cos(reflected) == pytest.approx(1.0)
        assert arena.reflect_heading([0.5, 30.0], np.pi / 2) == pytest.approx(np.pi / 2)

    def test_edges(self):
        assert len(Environment.rectangle(3.0, 4.0).edges()) == 4
        with pytest.raises(ValueError):
            Environment.disk(5.0).edges()

    def test_invalid_dimensions(self):
        with pytest.raises(ValueError):
            Environment.rectangle(0.0, 5.0)
        with pytest.raises(ValueError):
            Environment.disk(-1.0)


class TestDisk:

    def test_default_center_and_distance(self):
        arena = Environment.disk(10.0)
        assert arena.center == (10.0, 10.0)
        assert arena.distance_to_boundary([10.0, 10.0]) == pytest.approx(10.0)
        assert arena.distance_to_boundary([10.0, 19.0]) == pytest.approx(1.0)
        assert arena.bounds == (0.0, 0.0, 20.0, 20.0)

    def test_inward_normal_points_to_center(self):
        np.testing.assert_allclose(Environment.disk(10.0).inward_normal([19.0, 10.0]), [-1.0, 0.0])

    def test_whole_circle_inside_influence(self):
        """A sensor at the center of a small disk integrates the full circumference."""
        arena = Environment.disk(2.0)
        reading = arena.line_readings(np.array([[2.0, 2.0]]), BOUNDARY.strength, 3.0)[0]
        assert reading == pytest.approx(2 * np.pi * 2.0 * (1.0 - 2.0 / 3.0))


class TestPlacement:

    @pytest.mark.parametrize("arena", [Environment.rectangle(30.0, 20.0), Environment.disk(12.0)])
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1), margin=st.floats(min_value=0.0, max_value=5.0))
    @settings(max_examples=50)
    def test_samples_respect_margin(self, arena, seed, margin):
        point = arena.sample_point(np.random.default_rng(seed), margin)
        assert arena.distance_to_boundary(point) >= margin - 1e-9

    def test_no_room(self):
        with pytest.raises(ValueError):
            Environment.rectangle(60.0, 60.0).sample_point(np.random.default_rng(0), margin=30.0)
        with pytest.raises(ValueError):
            Environment.disk(5.0).sample_point(np.random.default_rng(0), margin=5.0)


class TestLineReadings:

    def test_far_sensor_reads_nothing(self):
        arena = Environment.rectangle(60.0, 60.0)
        assert arena.line_readings(np.array([[30.0, 30.0]]), BOUNDARY.strength, 3.0)[0] == 0.0

    @pytest.mark.parametrize("height", [0.2, 1.0, 2.0, 2.9])
    def test_mid_wall_matches_straight_line_table(self, height):
        """Away from corners a rectangle reads like an infinite straight boundary."""
        arena = Environment.rectangle(60.0, 60.0)
        reading = arena.line_readings(np.array([[30.0, height]]), BOUNDARY.strength, 3.0)[0]
        assert reading == pytest.approx(line_response(BOUNDARY).value(height), rel=1e-3, abs=1e-6)

    def test_corner_reads_more_than_one_wall(self):
        arena = Environment.rectangle(60.0, 60.0)
        corner, wall = arena.line_readings(np.array([[1.0, 1.0], [30.0, 1.0]]), BOUNDARY.strength, 3.0)
        assert corner > wall
