"""
Shipped experiment presets.

Config presets are built from the reference configuration with dotted-path
overrides; sweep presets point at config presets. Absolute encapsulation
times depend on the chosen signal profiles and geometry, so the presets aim
at trends rather than specific numbers.
"""

from typing import Callable, Dict, List, Tuple

from src.experiment_config import ConfigError, ExperimentConfig, SweepSpec, with_overrides


def _reference() -> ExperimentConfig:
    # p = 7, escape step ratio 1.1549 (alpha ~ 1.2635 rad at escape radius 3.894)
    return ExperimentConfig(name="reference")


def _random_target() -> ExperimentConfig:
    # Random-walk step ratio at n = 10: 1 / (10 - 4 + 1) = 1/7 of the robot step
    return with_overrides(_reference(), {
        "name": "random-target",
        "targets.0.motion.model": "random",
        "targets.0.max_step": 0.08,
    })


def _pattern_target() -> ExperimentConfig:
    return with_overrides(_reference(), {
        "name": "pattern-target",
        "targets.0.motion.model": "pattern_escape",
        "targets.0.motion.pattern": "constant_velocity",
        "targets.0.motion.cruise_step": 0.3,
        "targets.0.heading": 0.7,
        "noise.inner_ring_gain": 0.2,
    })


def _static_target() -> ExperimentConfig:
    return with_overrides(_reference(), {
        "name": "static-target",
        "targets.0.motion.model": "random",
        "targets.0.max_step": 0.0,
    })


def _scale() -> ExperimentConfig:
    base = with_overrides(_reference(), {
        "name": "scale",
        "environment.width": 200.0,
        "environment.height": 200.0,
        "robots.count": 120,
        "initializer.kind": "uniform",
    })
    document = base.to_dict()
    document["targets"] = [dict(document["targets"][0]) for _ in range(15)]
    return ExperimentConfig.from_dict(document)


CONFIG_PRESETS: Dict[str, Tuple[Callable[[], ExperimentConfig], str]] = {
    "reference": (_reference, "desk-scale reference: p=7, 10 robots, escaping target"),
    "random-target": (_random_target, "reference with a randomly moving target"),
    "pattern-target": (_pattern_target, "reference with a constant-velocity escaping target"),
    "static-target": (_static_target, "reference with a stationary target"),
    "scale": (_scale, "120 robots, 15 targets, 200 x 200 arena"),
}


def _sensor_sweep(name: str, base: str) -> SweepSpec:
    return SweepSpec(
        name=name,
        base=f"preset:{base}",
        axes=(("robots.sensors.count", tuple(range(3, 13))),),
        derive=True,
        plots=True,
    )


SWEEP_PRESETS: Dict[str, Tuple[Callable[[], SweepSpec], str]] = {
    "escape-bound-grid": (
        lambda: SweepSpec(
            name="escape-bound-grid",
            base="preset:reference",
            axes=(
                ("robots.sensors.count", (3, 4, 5, 7, 10, 16, 32)),
                ("targets.0.escape_radius", tuple(round(3.0 + 0.25 * i, 2) for i in range(20))),
            ),
            derive=True,
            mode="theory",
        ),
        "step-ratio bound versus escape radius for several sensor counts (no simulation)",
    ),
    "sensor-sweep-random": (lambda: _sensor_sweep("sensor-sweep-random", "random-target"),
                            "sensor count 3..12, random target"),
    "sensor-sweep-escape": (lambda: _sensor_sweep("sensor-sweep-escape", "reference"),
                            "sensor count 3..12, escaping target"),
    "sensor-sweep-pattern": (lambda: _sensor_sweep("sensor-sweep-pattern", "pattern-target"),
                             "sensor count 3..12, pattern target"),
    "noise-sweep": (
        lambda: SweepSpec(
            name="noise-sweep",
            base="preset:pattern-target",
            axes=(("noise.sigma", (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.55, 0.6, 0.7)),),
            plots=True,
        ),
        "sensor noise 0..0.7, pattern target",
    ),
    "baseline-comparison": (
        lambda: SweepSpec(
            name="baseline-comparison",
            base="preset:static-target",
            axes=(("robots.sensors.count", (4, 6, 8, 10)), ("robots.baseline_mode", (False, True))),
            derive=True,
            plots=True,
        ),
        "static target with and without orbiting, sensor count 4..10",
    ),
}


# Short names for the sweep presets
SWEEP_ALIASES: Dict[str, str] = {
    "fig9": "escape-bound-grid",
    "fig10a": "sensor-sweep-random",
    "fig10b": "sensor-sweep-escape",
    "fig10c": "sensor-sweep-pattern",
    "fig11": "noise-sweep",
    "fig12": "baseline-comparison",
}


def get_preset(name: str) -> ExperimentConfig:
    """
    Build a config preset by name.

    Raises:
        ConfigError: If no such preset exists
    """
    if name not in CONFIG_PRESETS:
        raise ConfigError(f"Unknown preset '{name}' (available: {', '.join(sorted(CONFIG_PRESETS))})")
    return CONFIG_PRESETS[name][0]()


def get_sweep(name: str) -> SweepSpec:
    """
    Build a sweep preset by name or short alias.

    Raises:
        ConfigError: If no such sweep preset exists
    """
    name = SWEEP_ALIASES.get(name, name)
    if name not in SWEEP_PRESETS:
        available = sorted(SWEEP_PRESETS) + sorted(SWEEP_ALIASES)
        raise ConfigError(f"Unknown sweep preset '{name}' (available: {', '.join(available)})")
    return SWEEP_PRESETS[name][0]()


def list_presets() -> List[Tuple[str, str, str]]:
    """All presets as (name, kind, description) rows."""
    rows = [(name, "config", text) for name, (_, text) in CONFIG_PRESETS.items()]
    rows += [(name, "sweep", text) for name, (_, text) in SWEEP_PRESETS.items()]
    rows += [(alias, "sweep", f"alias of {name}") for alias, name in SWEEP_ALIASES.items()]
    return rows
