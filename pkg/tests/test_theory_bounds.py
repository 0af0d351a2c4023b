"""Tests for closed-form bounds, config validation, parameter fitting and drift statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.experiment_config import ExperimentConfig, with_overrides
from src.theory_bounds import (
    DriftAccumulator,
    InfeasibleConfigError,
    alpha_angle,
    beta_r_interval,
    bounds_summary,
    derive_parameters,
    drive_factor,
    drift_diagnostics,
    escape_bound_table,
    lambda_escape,
    lambda_pattern,
    lambda_random,
    lambda_surface,
    max_ring_robots,
    max_robot_step,
    min_encap_radius,
    validate_config,
)


class TestCollisionBounds:

    def test_robot_step_four_sensors(self):
        assert max_robot_step(3.0, 1.0, 4) == pytest.approx(0.65386, abs=1e-4)

    def test_robot_step_seven_sensors(self):
        assert max_robot_step(3.0, 1.0, 7) == pytest.approx(0.87878, abs=1e-4)

    def test_robot_step_needs_three_sensors(self):
        with pytest.raises(InfeasibleConfigError):
            max_robot_step(3.0, 1.0, 2)

    @given(st.integers(min_value=3, max_value=64))
    def test_finer_arrays_allow_longer_steps(self, p):
        assert max_robot_step(3.0, 1.0, p + 1) > max_robot_step(3.0, 1.0, p)

    def test_beta_interval(self):
        low, high = beta_r_interval(3.0, 1.0, 7, 0.6)
        assert low == pytest.approx(3.3434, abs=1e-4)
        assert high == pytest.approx(3.90097, abs=1e-4)

    def test_beta_interval_empty(self):
        with pytest.raises(InfeasibleConfigError):
            beta_r_interval(3.0, 1.0, 7, 1.0)

    def test_min_encap_radius(self):
        assert min_encap_radius(5.0, 1.0, 6, 0.5) == pytest.approx(0.5 + 1.0 + 4.164102, abs=1e-6)

    def test_ring_capacity(self):
        capacity = max_ring_robots(3.6, 1.0, 5.0)
        assert capacity.value == pytest.approx(6.5726, abs=1e-3)
        assert capacity.floor == 6

    def test_ring_too_small(self):
        with pytest.raises(InfeasibleConfigError):
            max_ring_robots(10.0, 1.0, 5.0)


class TestStepRatios:

    def test_alpha(self):
        assert math.cos(alpha_angle(2.5, 0.5, 4.0)) == pytest.approx(1 - 9 / 32)
        assert alpha_angle(2.5, 0.5, 4.0) == pytest.approx(0.7688, abs=1e-3)

    def test_alpha_needs_room(self):
        with pytest.raises(InfeasibleConfigError):
            alpha_angle(10.0, 1.0, 3.0)

    def test_escape_ratio_known_value(self):
        ratio = lambda_escape(math.pi / 6, math.pi / 2)
        assert ratio.value == pytest.approx(1.29904, abs=1e-5)
        assert ratio.tangential == pytest.approx(ratio.radial)

    def test_reference_escape_ratio(self):
        alpha = alpha_angle(3.6, 1.0, 3.894)
        assert alpha == pytest.approx(1.2635, abs=1e-3)
        assert lambda_escape(math.pi / 7, alpha).value == pytest.approx(1.1548, abs=1e-3)

    def test_too_few_sensors_gives_zero(self):
        assert lambda_escape(math.pi / 2, 1.0).value == 0.0
        assert lambda_pattern(math.pi / 2, 1.0)[0] == 0.0

    def test_fine_sensing_limit(self):
        """With many sensors and a fully dispersed pair the ratio tends to pi/2."""
        assert lambda_escape(1e-4, math.pi).value == pytest.approx(math.pi / 2, abs=1e-3)

    def test_cruise_ratio(self):
        cruise, _ = lambda_pattern(math.pi / 7, 1.0)
        assert cruise == pytest.approx(0.871026, abs=1e-5)

    def test_random_ratio(self):
        assert lambda_random(10, 3.6, 1.0, 3.8) == pytest.approx(1 / 7)
        assert lambda_random(3, 3.6, 1.0, 3.8) == 1.0

    def test_surface_shape(self):
        surface = lambda_surface([3, 7, 12], np.linspace(0.2, 3.0, 5))
        assert surface.shape == (3, 5)
        assert np.all(surface >= 0)

    def test_escape_table(self):
        """The admissible ratio never grows with the escape radius; p < 3 rows are zero."""
        radii = [3.0 + 0.25 * i for i in range(12)]
        rows = escape_bound_table([2, 7], radii)
        assert len(rows) == 24
        assert all(row["lambda"] == 0.0 for row in rows if row["sensors"] == 2)
        seven = [row["lambda"] for row in rows if row["sensors"] == 7]
        assert np.all(np.diff(seven) <= 1e-12)

    def test_ratio_grows_with_sensor_count(self):
        """Finer sensing never lowers the admissible escape ratio."""
        surface = lambda_surface(list(range(3, 65)), np.linspace(0.2, math.pi, 9))
        assert np.all(np.diff(surface, axis=0) >= -1e-12)
        assert np.all(surface[-1] > surface[0])

    def test_drive_factor_matches_sampled_headings(self):
        """Headings drawn uniformly from a symmetric cone advance the robot by sin(phi)/phi per unit step on average."""
        rng = np.random.default_rng(3)
        phi, step, samples = math.pi / 7, 0.6, 1_000_000
        theta = rng.uniform(-phi, phi, samples)
        moves = step * np.column_stack([np.cos(theta), np.sin(theta)])
        mean = moves.mean(axis=0)
        stderr = moves.std(axis=0, ddof=1) / math.sqrt(samples)
        assert abs(mean[0] - step * drive_factor(phi)) <= 4 * stderr[0]
        assert abs(mean[1]) <= 4 * stderr[1]


class TestValidation:

    def test_reference_passes(self, reference):
        report = validate_config(reference)
        assert report.passed, report.format_text()
        names = {check.name for check in report.checks}
        assert {"robot-step", "robot-influence", "ring-capacity", "inner-orbit",
                "encapsulation-radius", "target[0].step-ratio"} <= names

    def test_step_too_long(self, reference):
        report = validate_config(with_overrides(reference, {"robots.max_step": 0.9}))
        assert not report.passed
        assert not report.check("robot-step").passed

    def test_strict_raises(self, reference):
        with pytest.raises(InfeasibleConfigError, match="robot-step"):
            validate_config(with_overrides(reference, {"robots.max_step": 0.9}), strict=True)

    def test_ring_overflow_advisory(self, reference):
        report = validate_config(with_overrides(reference, {"encapsulation.robots_required": 7}))
        assert not report.check("ring-capacity").passed
        assert any("dynamic equilibrium" in advisory for advisory in report.advisories)

    def test_fast_target_rejected(self, reference):
        report = validate_config(with_overrides(reference, {"targets.0.max_step": 0.8}))
        assert not report.check("target[0].step-ratio").passed

    def test_two_sensors_reported_not_raised(self, reference):
        report = validate_config(with_overrides(reference, {"robots.sensors.count": 2}))
        assert not report.check("sensor-count").passed
        assert not report.check("robot-step").passed

    def test_report_serializes(self, reference):
        document = validate_config(reference).to_dict()
        assert document["passed"] is True
        assert document["config_hash"] == reference.digest

    def test_bounds_summary(self, reference):
        summary = bounds_summary(reference)
        assert summary["max_robot_step"] == pytest.approx(0.87878, abs=1e-4)
        assert summary["lambda_random"] == pytest.approx(1 / 7)
        assert summary["ring_capacity_floor"] == 6

    def test_bounds_summary_tolerates_infeasible(self, reference):
        summary = bounds_summary(with_overrides(reference, {"robots.sensors.count": 2}))
        assert summary["max_robot_step"] is None


class TestDerive:

    @pytest.mark.parametrize("count", [3, 4, 7, 10])
    def test_fitted_configs_pass(self, reference, count):
        fitted = derive_parameters(with_overrides(reference, {"robots.sensors.count": count}))
        report = validate_config(fitted)
        assert report.passed, report.format_text()
        assert fitted.robots.max_step < max_robot_step(3.0, 1.0, count)

    def test_static_targets_stay_static(self, reference):
        static = with_overrides(reference, {"targets.0.motion.model": "random", "targets.0.max_step": 0.0})
        assert derive_parameters(static).targets[0].max_step == 0.0

    def test_needs_three_sensors(self, reference):
        with pytest.raises(InfeasibleConfigError):
            derive_parameters(with_overrides(reference, {"robots.sensors.count": 2}))


def _record(robot_post, robot_step, target_post, behavior="approach-target", captured=False):
    return {
        "robots": [{"position": list(robot_post), "heading": 0.0, "step": robot_step, "behavior": behavior}],
        "targets": [{"position": list(target_post), "heading": 0.0, "step": 0.0, "captured": captured}],
    }


class TestDrift:

    def test_approach_step_statistics(self):
        """A robot closing 0.5 on a static target 5 away lowers the squared distance by 4.75."""
        records = [_record((0.5, 0.0), 0.5, (5.0, 0.0)) for _ in range(2)]
        stats = drift_diagnostics(records, min_samples=2)
        assert stats.delta_v.count == 2
        assert stats.delta_v.mean == pytest.approx(-4.75)
        assert stats.delta_v.stderr == pytest.approx(0.0, abs=1e-9)
        assert stats.radial["approach-target"].mean == pytest.approx(-0.5)
        assert stats.tangential["approach-target"].mean == pytest.approx(0.0)
        assert not stats.partial

    def test_partial_report(self):
        stats = drift_diagnostics([_record((0.5, 0.0), 0.5, (5.0, 0.0))], min_samples=1000)
        assert stats.partial
        assert stats.to_dict()["delta_v"]["stderr"] is None

    def test_frozen_and_captured_are_skipped(self):
        accumulator = DriftAccumulator(min_samples=1)
        accumulator.add(_record((0.0, 0.0), 0.0, (5.0, 0.0), behavior="frozen"))
        accumulator.add(_record((0.5, 0.0), 0.5, (5.0, 0.0), captured=True))
        accumulator.add(_record((1.0, 0.0), 0.5, (5.0, 0.0), captured=True))
        stats = accumulator.result()
        assert stats.delta_v.count == 1
        assert "frozen" not in stats.radial
