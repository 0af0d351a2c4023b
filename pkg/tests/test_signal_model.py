"""Tests for signal profiles, sensor arrays, sensing and distance inference."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.environment import Environment
from src.geometry import Pose, TWO_PI
from src.signal_model import (
    DegenerateGeometryError,
    NoiseSpec,
    ReadingSet,
    SensorArray,
    SignalField,
    SignalFamily,
    SignalKind,
    SignalProfile,
    infer_distance,
    line_response,
    sample_noise_factors,
    sense,
    signal_strength,
    virtual_source_distance,
)

LINEAR = SignalProfile(SignalKind.TARGET, 12.0)
INVERSE_SQUARE = SignalProfile(SignalKind.TARGET, 12.0, SignalFamily.INVERSE_SQUARE, amplitude=2.0, core=0.5)


class TestProfiles:

    def test_linear_values(self):
        assert signal_strength(LINEAR, 0.0) == pytest.approx(1.0)
        assert signal_strength(LINEAR, 6.0) == pytest.approx(0.5)
        assert signal_strength(LINEAR, 12.0) == 0.0
        assert signal_strength(LINEAR, 30.0) == 0.0

    def test_inverse_square_peak_and_cutoff(self):
        assert INVERSE_SQUARE.strength(0.0) == pytest.approx(2.0)
        assert INVERSE_SQUARE.strength(12.0) == 0.0

    @pytest.mark.parametrize("profile", [LINEAR, INVERSE_SQUARE])
    def test_strictly_decreasing_inside_influence(self, profile):
        values = profile.strength(np.linspace(0.0, 11.9, 200))
        assert np.all(np.diff(values) < 0)

    @pytest.mark.parametrize("profile", [LINEAR, INVERSE_SQUARE])
    @given(distance=st.floats(min_value=0.0, max_value=11.9))
    def test_inverse_recovers_distance(self, profile, distance):
        """Inverting a single-source reading gives back the distance."""
        assert profile.inverse(profile.strength(distance)) == pytest.approx(distance, abs=1e-6)

    def test_inverse_edge_cases(self):
        assert LINEAR.inverse(0.0) == 12.0
        assert LINEAR.inverse(5.0) == 0.0

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            signal_strength(LINEAR, -0.1)

    @pytest.mark.parametrize("kwargs", [{"influence_radius": 0.0}, {"influence_radius": 1.0, "amplitude": 0.0}])
    def test_invalid_profiles(self, kwargs):
        with pytest.raises(ValueError):
            SignalProfile(SignalKind.ROBOT, **kwargs)


class TestSensorArray:

    def test_evenly_spaced(self):
        sensors = SensorArray.evenly_spaced(4, 1.0)
        assert sensors.angles == pytest.approx((0.0, np.pi / 2, np.pi, 1.5 * np.pi))
        assert sensors.half_angle == pytest.approx(np.pi / 4)
        np.testing.assert_allclose(sensors.half_gaps, np.pi / 4)

    def test_asymmetric_half_gaps(self):
        """Each sensor's half-gap is half the wider of its two neighboring gaps."""
        sensors = SensorArray.from_angles([0.0, 1.0, 4.0], 1.0)
        np.testing.assert_allclose(sensors.gaps, [1.0, 3.0, TWO_PI - 4.0])
        np.testing.assert_allclose(sensors.half_gaps, [(TWO_PI - 4.0) / 2, 1.5, 1.5])
        assert sensors.half_angle == pytest.approx(1.5)

    def test_from_angles_wraps_and_sorts(self):
        sensors = SensorArray.from_angles([-0.5, 1.0], 1.0)
        assert sensors.angles == pytest.approx((1.0, TWO_PI - 0.5))

    def test_unsorted_angles_rejected(self):
        with pytest.raises(ValueError):
            SensorArray(angles=(1.0, 0.5), mount_radius=1.0)

    def test_sensor_positions_follow_heading(self):
        sensors = SensorArray.evenly_spaced(4, 2.0)
        positions = sensors.sensor_positions(Pose(1.0, 1.0, np.pi / 2))
        np.testing.assert_allclose(positions[0], [1.0, 3.0], atol=1e-12)

    def test_bracketing(self):
        sensors = SensorArray.evenly_spaced(4, 1.0)
        lower, upper = sensors.bracketing([0.3, 6.0])
        assert list(lower) == [0, 3]
        assert list(upper) == [1, 0]


class TestVirtualSource:

    def test_known_value(self):
        expected = np.cos(np.pi / 4) + np.sqrt(25.0 - 0.5)
        assert virtual_source_distance(5.0, 1.0, np.pi / 4) == pytest.approx(expected)

    def test_degenerate_geometry(self):
        with pytest.raises(DegenerateGeometryError):
            virtual_source_distance(0.1, 1.0, np.pi / 4)

    @given(
        st.floats(min_value=2.0, max_value=10.0),
        st.floats(min_value=-1.0, max_value=1.0),
        st.integers(min_value=3, max_value=16),
    )
    def test_never_overestimates(self, distance, fraction, p):
        """A source anywhere in the sensor's cone is at least as far as the estimate."""
        phi = np.pi / p
        source = distance * np.array([np.cos(fraction * phi), np.sin(fraction * phi)])
        d_sensor = np.hypot(*(source - np.array([1.0, 0.0])))
        assert virtual_source_distance(d_sensor, 1.0, phi) <= distance + 1e-9

    @pytest.mark.slow
    def test_bulk_clusters_never_overestimate(self, reference):
        """A hundred thousand random clusters of one to four sources inside one sensor's cone."""
        rng = np.random.default_rng(11)
        sensors, profile = reference.sensor_array, reference.target_profile
        reach = profile.influence_radius - sensors.mount_radius
        silent = np.zeros(sensors.count)
        for _ in range(100_000):
            heading = float(rng.uniform(0.0, TWO_PI))
            k = int(rng.integers(sensors.count))
            count = int(rng.integers(1, 5))
            half = float(sensors.half_gaps[k]) * (1.0 - 1e-9)
            bearings = heading + sensors.angles[k] + rng.uniform(-half, half, count)
            ranges = rng.uniform(sensors.mount_radius + 0.5, reach, count)
            sources = ranges[:, None] * np.column_stack([np.cos(bearings), np.sin(bearings)])
            points = sensors.sensor_positions(Pose(0.0, 0.0, heading))
            z = np.asarray(profile.strength(np.hypot(*(points[:, None, :] - sources[None, :, :]).transpose(2, 0, 1))))
            estimate = infer_distance(ReadingSet(target=z.sum(axis=1), robot=silent, environment=silent),
                                      profile, sensors)
            assert estimate is not None
            assert estimate.distance <= ranges.min() + 1e-9


class TestSensing:

    def test_silent_world(self, read_scene):
        readings = read_scene()
        assert not readings.target.any()
        assert not readings.robot.any()
        assert not readings.environment.any()

    def test_own_signal_excluded(self, read_scene):
        """A robot never senses itself, only its neighbors."""
        readings = read_scene(neighbors=[(3.0, 0.0)])
        assert readings.robot.max() > 0
        assert readings.robot.argmax() == 0

    def test_readings_sum_sources(self, reference, read_scene):
        single = read_scene(targets=[(5.0, 0.0)]).target
        double = read_scene(targets=[(5.0, 0.0), (-5.0, 0.0)]).target
        assert np.all(double >= single)

    @given(
        st.floats(min_value=2.0, max_value=10.0),
        st.floats(min_value=0.0, max_value=TWO_PI),
        st.floats(min_value=0.0, max_value=TWO_PI),
    )
    @settings(max_examples=100, deadline=None)
    def test_target_estimate_is_conservative(self, reference, read_scene, distance, bearing, heading):
        """The inferred target range never exceeds the true range."""
        offset = distance * np.array([np.cos(bearing), np.sin(bearing)])
        readings = read_scene(heading=heading, targets=[offset])
        estimate = infer_distance(readings, reference.target_profile, reference.sensor_array)
        assert estimate is not None
        assert estimate.distance <= distance + 1e-6

    def test_nothing_sensed_gives_none(self, reference):
        estimate = infer_distance(ReadingSet.silent(7), reference.target_profile, reference.sensor_array)
        assert estimate is None

    @given(st.floats(min_value=1.6, max_value=3.5), st.floats(min_value=0.0, max_value=TWO_PI))
    @settings(max_examples=40, deadline=None)
    def test_boundary_estimate_is_conservative(self, reference, height, heading):
        """Mid-wall boundary distance estimates stay below the true distance."""
        arena = Environment.rectangle(60.0, 60.0)
        field = SignalField(
            target_profile=reference.target_profile,
            robot_profile=reference.robot_profile,
            environment_profile=reference.environment_profile,
            target_sources=np.empty((0, 2)),
            robot_sources=np.array([[30.0, height]]),
            environment=arena,
        )
        readings = sense(Pose(30.0, height, heading), reference.sensor_array, field, NoiseSpec(), self_index=0)
        estimate = infer_distance(readings, reference.environment_profile, reference.sensor_array)
        assert estimate is not None
        assert estimate.distance <= height + 1e-3


class TestNoise:

    def test_inactive_noise_is_zero(self):
        factors = sample_noise_factors(NoiseSpec(0.3, enabled=False), np.random.default_rng(0), 5)
        assert not factors.any()

    def test_factors_truncated_at_one(self):
        factors = sample_noise_factors(NoiseSpec(2.0), np.random.default_rng(1), 2000)
        assert factors.max() <= 1.0

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(-0.1)

    def test_noisy_sensing_needs_stream(self, reference, open_field):
        field = SignalField(
            reference.target_profile, reference.robot_profile, reference.environment_profile,
            np.array([[103.0, 100.0]]), np.array([[100.0, 100.0]]), open_field,
        )
        with pytest.raises(ValueError):
            sense(Pose(100.0, 100.0, 0.0), reference.sensor_array, field, NoiseSpec(0.2), self_index=0)

    def test_noisy_readings_stay_non_negative(self, reference, open_field):
        field = SignalField(
            reference.target_profile, reference.robot_profile, reference.environment_profile,
            np.array([[103.0, 100.0]]), np.array([[100.0, 100.0]]), open_field,
        )
        readings = sense(Pose(100.0, 100.0, 0.0), reference.sensor_array, field, NoiseSpec(0.5),
                         rng=np.random.default_rng(3), self_index=0)
        assert readings.target.min() >= 0.0


class TestLineResponse:

    def test_table_is_decreasing(self, reference):
        table = line_response(reference.environment_profile)
        assert table.heights[0] == 0.0
        assert table.values[-1] == 0.0
        assert np.all(np.diff(table.values) <= 0)

    @given(st.floats(min_value=0.0, max_value=2.9))
    def test_inverse_rounds_down(self, reference, height):
        table = line_response(reference.environment_profile)
        assert table.inverse(table.value(height)) <= height + 1e-12
