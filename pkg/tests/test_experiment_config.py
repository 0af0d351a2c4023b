"""Tests for config parsing, overrides, hashing and presets."""

import json

import pytest

from src.experiment_config import (
    ConfigError,
    ExperimentConfig,
    SweepSpec,
    load_config,
    load_sweep,
    with_overrides,
)
from src.presets import CONFIG_PRESETS, SWEEP_ALIASES, SWEEP_PRESETS, get_preset, get_sweep, list_presets
from src.theory_bounds import validate_config


class TestParsing:

    def test_round_trip(self, reference):
        assert ExperimentConfig.from_dict(reference.to_dict()) == reference
        assert ExperimentConfig.from_dict(reference.to_dict()).digest == reference.digest

    def test_partial_document_uses_defaults(self):
        config = ExperimentConfig.from_dict({"robots": {"count": 6}})
        assert config.robots.count == 6
        assert config.robots.max_step == 0.6

    def test_unknown_key_names_full_path(self):
        with pytest.raises(ConfigError, match="robots.cout"):
            ExperimentConfig.from_dict({"robots": {"cout": 3}})

    @pytest.mark.parametrize("document,message", [
        ({"robots": {"count": "ten"}}, "robots.count"),
        ({"robots": {"count": True}}, "robots.count"),
        ({"robots": {"count": 2.5}}, "robots.count"),
        ({"controller": {"refine_los": 1}}, "controller.refine_los"),
        ({"targets": {"radius": 1.0}}, "targets"),
    ])
    def test_wrong_types(self, document, message):
        with pytest.raises(ConfigError, match=message):
            ExperimentConfig.from_dict(document)

    @pytest.mark.parametrize("document", [
        {"targets": [{"motion": {"model": "teleport"}}]},
        {"targets": [{"motion": {"model": "pattern_escape", "pattern": "circle"}}]},
        {"environment": {"shape": "hexagon"}},
        {"signals": {"robot": {"influence": 0.0}}},
        {"robots": {"sensors": {"count": 3, "angles": [0.0, 1.0]}}},
        {"initializer": {"min_range": 9.0, "max_range": 8.0}},
        {"simulation": {"t_max": -1}},
    ])
    def test_invalid_values(self, document):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(document)

    def test_integers_accepted_for_floats(self):
        config = ExperimentConfig.from_dict({"environment": {"width": 80}})
        assert config.environment.width == 80.0
        assert isinstance(config.environment.width, float)

    def test_disk_environment(self):
        config = ExperimentConfig.from_dict({"environment": {"shape": "disk", "radius": 25}})
        assert config.environment.build().center == (25.0, 25.0)

    def test_asymmetric_sensors(self):
        config = ExperimentConfig.from_dict({"robots": {"sensors": {"count": 3, "angles": [0.0, 2.0, 4.0]}}})
        assert config.sensor_array.count == 3
        assert not config.sensor_array.symmetric


class TestDerivedModels:

    def test_noise_inflates_ring_and_margin(self, reference):
        noisy = with_overrides(reference, {"noise.sigma": 0.2})
        params = noisy.robot_params()
        assert params.sensing_margin == pytest.approx(1.2)
        assert not params.refine_los
        assert noisy.orbit_set().inner0 == pytest.approx(3.8 * 1.2)

    def test_noiseless_params(self, reference):
        params = reference.robot_params()
        assert params.sensing_margin == 1.0
        assert params.refine_los
        assert params.target_max_step == pytest.approx(0.65)
        assert reference.orbit_set().inner0 == 3.8

    def test_placement_margins(self, reference):
        assert reference.target_boundary_margin == pytest.approx(5.0 + 1.5 + 0.6)
        assert reference.target_spacing == pytest.approx(2 * 12.0 + 2 * 1.0)

    def test_encapsulation_ring(self, reference):
        ring = reference.encapsulation_ring()
        assert (ring.safe_radius, ring.outer_radius, ring.robots_required) == (3.0, 5.0, 4)


class TestOverrides:

    def test_nested_and_list_paths(self, reference):
        changed = with_overrides(reference, {"robots.sensors.count": 5, "targets.0.max_step": 0.3})
        assert changed.sensor_array.count == 5
        assert changed.targets[0].max_step == 0.3
        assert changed.digest != reference.digest
        assert reference.robots.sensors.count == 7

    @pytest.mark.parametrize("path", ["robots.speed", "targets.3.max_step", "robots.count.value"])
    def test_bad_paths(self, reference, path):
        with pytest.raises(ConfigError):
            with_overrides(reference, {path: 1})

    def test_overrides_are_validated(self, reference):
        with pytest.raises(ConfigError):
            with_overrides(reference, {"noise.sigma": -0.5})


class TestHashing:

    def test_digest_is_stable(self):
        assert ExperimentConfig().digest == ExperimentConfig().digest
        assert len(ExperimentConfig().digest) == 64

    def test_digest_tracks_content(self, reference):
        assert with_overrides(reference, {"robots.count": 11}).digest != reference.digest


class TestLoading:

    def test_preset(self, reference):
        assert load_config("preset:reference") == reference

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="available"):
            load_config("preset:nope")

    def test_file(self, tmp_path, reference):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(reference.to_dict()))
        assert load_config(str(path)) == reference

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(str(tmp_path / "missing.json"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_sweep_file_is_not_a_config(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps({"name": "s", "base": "preset:reference", "axes": {}}))
        with pytest.raises(ConfigError, match="sweep"):
            load_config(str(path))


class TestSweepSpec:

    def test_round_trip(self):
        spec = SweepSpec(name="s", base="preset:reference", axes=(("robots.count", (4, 8)),), seeds=3)
        assert SweepSpec.from_dict(spec.to_dict()) == spec

    def test_file(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps({"name": "s", "base": "preset:reference", "axes": {"noise.sigma": [0.0, 0.1]}}))
        spec = load_sweep(str(path))
        assert spec.axes == (("noise.sigma", (0.0, 0.1)),)

    @pytest.mark.parametrize("document", [
        {"name": "s"},
        {"name": "s", "base": "preset:reference", "colour": 1},
        {"name": "s", "base": "preset:reference", "axes": {"robots.count": 4}},
        {"name": "s", "base": "preset:reference", "mode": "dream"},
        {"name": "s", "base": "preset:reference", "seeds": 0},
    ])
    def test_invalid_specs(self, document):
        with pytest.raises(ConfigError):
            SweepSpec.from_dict(document)


class TestPresets:

    @pytest.mark.parametrize("name", sorted(CONFIG_PRESETS))
    def test_config_presets_are_feasible(self, name):
        report = validate_config(get_preset(name))
        assert report.passed, report.format_text()

    @pytest.mark.parametrize("name", sorted(SWEEP_PRESETS))
    def test_sweep_presets_load(self, name):
        spec = load_sweep(f"preset:{name}")
        assert spec.name == name
        load_config(spec.base)

    def test_listing(self):
        kinds = {kind for _, kind, _ in list_presets()}
        assert kinds == {"config", "sweep"}
        assert len(list_presets()) == len(CONFIG_PRESETS) + len(SWEEP_PRESETS) + len(SWEEP_ALIASES)

    @pytest.mark.parametrize("alias,name", sorted(SWEEP_ALIASES.items()))
    def test_sweep_aliases(self, alias, name):
        assert load_sweep(f"preset:{alias}") == get_sweep(name)
        assert (alias, "sweep", f"alias of {name}") in list_presets()

    def test_unknown_sweep(self):
        with pytest.raises(ConfigError):
            get_sweep("fig13")
