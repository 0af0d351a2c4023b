"""
Experiment configuration schema.

Configs are JSON documents parsed into frozen dataclasses. Every section has
defaults matching the desk-scale reference setup, unknown keys are rejected
with the dotted path of the offending key, and each config has a canonical
SHA-256 hash carried on every summary and table row.
"""

import copy
import math
from dataclasses import asdict, dataclass, fields, is_dataclass
from typing import Any, Dict, Optional, Tuple, Union, get_args, get_origin, get_type_hints

from config import ARGMAX_CANDIDATES, DEFAULT_T_MAX, SEEDS_PER_POINT
from src.environment import Environment, EnvironmentShape
from src.robot_controller import OrbitSet, RobotParams
from src.signal_model import SensorArray, SignalFamily, SignalKind, SignalProfile
from src.target_models import EncapsulationRing, MotionModel, MotionVariant, PatternKind
from utils import config_hash as hash_document
from utils import load_json, validate_input_path

PRESET_PREFIX = "preset:"


class ConfigError(ValueError):
    """Raised for malformed experiment configs and sweep specs."""
    pass


def _choice(value: str, allowed, what: str) -> None:
    options = [item.value for item in allowed] if hasattr(allowed, "__members__") else list(allowed)
    if value not in options:
        raise ConfigError(f"Unknown {what} '{value}' (expected one of: {', '.join(options)})")


@dataclass(frozen=True)
class EnvironmentConfig:
    shape: str = "rectangle"
    width: float = 60.0
    height: float = 60.0
    radius: float = 30.0
    center: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        _choice(self.shape, EnvironmentShape, "environment shape")

    def build(self) -> Environment:
        if self.shape == EnvironmentShape.DISK.value:
            return Environment.disk(self.radius, self.center)
        return Environment.rectangle(self.width, self.height)


@dataclass(frozen=True)
class SignalConfig:
    influence: float
    family: str = "linear"
    amplitude: float = 1.0
    core: float = 1.0

    def __post_init__(self):
        _choice(self.family, SignalFamily, "signal family")
        if self.influence <= 0:
            raise ConfigError(f"Influence radius must be positive, got {self.influence}")

    def profile(self, kind: SignalKind) -> SignalProfile:
        return SignalProfile(kind, self.influence, SignalFamily(self.family), self.amplitude, self.core)


@dataclass(frozen=True)
class SignalsConfig:
    target: SignalConfig = SignalConfig(influence=12.0)
    robot: SignalConfig = SignalConfig(influence=3.6)
    environment: SignalConfig = SignalConfig(influence=3.0)


@dataclass(frozen=True)
class SensorConfig:
    count: int = 7
    angles: Optional[Tuple[float, ...]] = None
    mount_radius: Optional[float] = None

    def __post_init__(self):
        if self.angles is None and self.count < 1:
            raise ConfigError(f"Sensor count must be positive, got {self.count}")
        if self.angles is not None and len(self.angles) != self.count:
            raise ConfigError(f"sensors.count is {self.count} but {len(self.angles)} angles were given")

    def array(self, robot_radius: float) -> SensorArray:
        mount = robot_radius if self.mount_radius is None else self.mount_radius
        if self.angles is None:
            return SensorArray.evenly_spaced(self.count, mount)
        return SensorArray.from_angles(self.angles, mount)


@dataclass(frozen=True)
class RobotsConfig:
    count: int = 10
    radius: float = 1.0
    max_step: float = 0.6
    target_safe: float = 3.0
    robot_safe: float = 3.0
    environment_safe: float = 1.5
    sensors: SensorConfig = SensorConfig()
    baseline_mode: bool = False

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError(f"Robot count must be non-negative, got {self.count}")
        if self.radius < 0 or self.max_step < 0:
            raise ConfigError("Robot radius and max_step must be non-negative")


@dataclass(frozen=True)
class MotionConfig:
    model: str = "random_escape"
    pattern: str = "constant_velocity"
    cruise_step: float = 0.3
    turn_radius: float = 0.0
    waypoints: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        _choice(self.model, MotionVariant, "motion model")
        _choice(self.pattern, PatternKind, "motion pattern")
        try:
            self.build()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def build(self) -> MotionModel:
        return MotionModel(
            variant=MotionVariant(self.model),
            pattern=PatternKind(self.pattern),
            cruise_step=self.cruise_step,
            turn_radius=self.turn_radius,
            waypoints=self.waypoints,
        )


@dataclass(frozen=True)
class TargetConfig:
    radius: float = 1.0
    max_step: float = 0.65
    escape_radius: float = 3.894
    motion: MotionConfig = MotionConfig()
    center: Optional[Tuple[float, float]] = None
    heading: Optional[float] = None

    def __post_init__(self):
        if self.max_step < 0:
            raise ConfigError(f"Target max_step must be non-negative, got {self.max_step}")


@dataclass(frozen=True)
class OrbitConfig:
    inner: float = 3.8
    width: float = 2.0


@dataclass(frozen=True)
class EncapsulationConfig:
    radius: float = 5.0
    robots_required: int = 4


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = 0.0
    inner_ring_gain: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"Noise sigma must be non-negative, got {self.sigma}")

    @property
    def inflation(self) -> float:
        """Factor (1 + c*sigma) applied to the inner ring and the safety triggers."""
        return 1.0 + self.inner_ring_gain * self.sigma


@dataclass(frozen=True)
class InitializerConfig:
    kind: str = "sector"
    sector_angle: float = math.pi / 4
    min_range: float = 7.0
    max_range: float = 20.0

    def __post_init__(self):
        _choice(self.kind, ("sector", "uniform"), "initializer")
        if self.kind == "sector" and not 0 < self.min_range < self.max_range:
            raise ConfigError(f"Initializer needs 0 < min_range < max_range, got {self.min_range}, {self.max_range}")


@dataclass(frozen=True)
class ControllerConfig:
    argmax_candidates: int = ARGMAX_CANDIDATES
    refine_los: bool = True


@dataclass(frozen=True)
class SimulationConfig:
    t_max: int = DEFAULT_T_MAX
    halt_on_violation: bool = False
    midpoint_check: bool = False

    def __post_init__(self):
        if self.t_max < 0:
            raise ConfigError(f"t_max must be non-negative, got {self.t_max}")


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete, validated experiment description."""
    name: str = "reference"
    environment: EnvironmentConfig = EnvironmentConfig()
    signals: SignalsConfig = SignalsConfig()
    robots: RobotsConfig = RobotsConfig()
    targets: Tuple[TargetConfig, ...] = (TargetConfig(),)
    orbits: OrbitConfig = OrbitConfig()
    encapsulation: EncapsulationConfig = EncapsulationConfig()
    noise: NoiseConfig = NoiseConfig()
    initializer: InitializerConfig = InitializerConfig()
    controller: ControllerConfig = ControllerConfig()
    simulation: SimulationConfig = SimulationConfig()

    # -- serialization ---------------------------------------------------

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Parse a plain dictionary.

        Raises:
            ConfigError: On unknown keys, wrong types or invalid values
        """
        return _build(cls, data, "")

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    @property
    def digest(self) -> str:
        return hash_document(self.to_dict())

    # -- derived model objects -------------------------------------------

    @property
    def sensor_array(self) -> SensorArray:
        return self.robots.sensors.array(self.robots.radius)

    @property
    def half_angle(self) -> float:
        return self.sensor_array.half_angle

    @property
    def target_profile(self) -> SignalProfile:
        return self.signals.target.profile(SignalKind.TARGET)

    @property
    def robot_profile(self) -> SignalProfile:
        return self.signals.robot.profile(SignalKind.ROBOT)

    @property
    def environment_profile(self) -> SignalProfile:
        return self.signals.environment.profile(SignalKind.ENVIRONMENT)

    @property
    def max_target_step(self) -> float:
        return max((t.max_step for t in self.targets), default=0.0)

    @property
    def target_boundary_margin(self) -> float:
        """Closest a target center may come to the boundary."""
        return self.encapsulation.radius + self.robots.environment_safe + self.robots.max_step

    @property
    def target_spacing(self) -> float:
        """Closest two target centers may come to each other."""
        return 2 * self.signals.target.influence + 2 * self.robots.radius

    def robot_params(self) -> RobotParams:
        """Controller parameters, with noise compensation applied."""
        robots = self.robots
        return RobotParams(
            radius=robots.radius,
            max_step=robots.max_step,
            target_safe=robots.target_safe,
            robot_safe=robots.robot_safe,
            environment_safe=robots.environment_safe,
            sensors=self.sensor_array,
            target_profile=self.target_profile,
            robot_profile=self.robot_profile,
            environment_profile=self.environment_profile,
            target_max_step=self.max_target_step,
            baseline_mode=robots.baseline_mode,
            argmax_candidates=self.controller.argmax_candidates,
            refine_los=self.controller.refine_los and self.noise.sigma == 0,
            sensing_margin=self.noise.inflation,
        )

    def orbit_set(self) -> OrbitSet:
        """Orbits with the noise-inflated inner ring."""
        base = OrbitSet(self.orbits.inner, self.encapsulation.radius, self.orbits.width)
        return base.inflated(self.noise.inflation) if self.noise.sigma > 0 else base

    def encapsulation_ring(self) -> EncapsulationRing:
        return EncapsulationRing(
            safe_radius=self.robots.target_safe,
            outer_radius=self.encapsulation.radius,
            robots_required=self.encapsulation.robots_required,
        )


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown key '{_join(path, unknown[0])}'")
    kwargs = {name: _coerce(hints[name], value, _join(path, name)) for name, value in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError as e:
        raise ConfigError(f"{path or 'config'}: {e}") from e
    except TypeError as e:
        raise ConfigError(f"{path or 'config'}: {e}") from e


def _coerce(tp, value: Any, path: str) -> Any:
    origin = get_origin(tp)
    args = get_args(tp)

    if is_dataclass(tp):
        return _build(tp, value, path)
    if origin is Union:
        if value is None and type(None) in args:
            return None
        inner = [arg for arg in args if arg is not type(None)]
        return _coerce(inner[0], value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {type(value).__name__}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], item, f"{path}.{i}") for i, item in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{path}: expected {len(args)} items, got {len(value)}")
        return tuple(_coerce(arg, item, f"{path}.{i}") for i, (arg, item) in enumerate(zip(args, value)))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _set_path(document: Dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node: Any = document
    for depth, part in enumerate(parts):
        last = depth == len(parts) - 1
        where = ".".join(parts[:depth + 1])
        if isinstance(node, list):
            if not part.isdigit() or int(part) >= len(node):
                raise ConfigError(f"Override path '{dotted}': no list item '{where}'")
            if last:
                node[int(part)] = value
            else:
                node = node[int(part)]
        elif isinstance(node, dict):
            if part not in node:
                raise ConfigError(f"Override path '{dotted}': unknown key '{where}'")
            if last:
                node[part] = value
            else:
                if node[part] is None:
                    raise ConfigError(f"Override path '{dotted}': '{where}' is not set")
                node = node[part]
        else:
            raise ConfigError(f"Override path '{dotted}': '{where}' is not a section")


def with_overrides(config: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Copy a config with dotted-path overrides applied.

    Paths address sections and list items, e.g. ``robots.sensors.count`` or
    ``targets.0.max_step``.

    Raises:
        ConfigError: If a path does not exist or the result is invalid
    """
    document = copy.deepcopy(config.to_dict())
    for dotted, value in overrides.items():
        _set_path(document, dotted, value)
    return ExperimentConfig.from_dict(document)


def load_config(reference: str) -> ExperimentConfig:
    """
    Load a config from a JSON file or a shipped preset (``preset:NAME``).

    Raises:
        ConfigError: If the document is invalid or the preset is unknown
        FileNotFoundError: If the file does not exist
    """
    if reference.startswith(PRESET_PREFIX):
        from src.presets import get_preset
        return get_preset(reference[len(PRESET_PREFIX):])
    path = validate_input_path(reference)
    try:
        data = load_json(path)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if isinstance(data, dict) and "axes" in data:
        raise ConfigError(f"{reference} is a sweep spec; use the sweep command")
    return ExperimentConfig.from_dict(data)


@dataclass(frozen=True)
class SweepSpec:
    """
    A parameter grid over a base config.

    Attributes:
        name: Label used for output files
        base: Config reference (path or ``preset:NAME``)
        axes: Ordered (dotted path, values) pairs; the grid is their product
        seeds: Seeds per grid point
        first_seed: First seed of every point's seed range
        t_max: Step cap (None keeps the base config's)
        derive: Refit step sizes and radii to the bounds at every grid point
        plots: Also write SVG box plots
        mode: ``simulation`` runs batches; ``theory`` tabulates bounds only
    """
    name: str
    base: str
    axes: Tuple[Tuple[str, Tuple[Any, ...]], ...] = ()
    seeds: int = SEEDS_PER_POINT
    first_seed: int = 0
    t_max: Optional[int] = None
    derive: bool = False
    plots: bool = False
    mode: str = "simulation"

    def __post_init__(self):
        _choice(self.mode, ("simulation", "theory"), "sweep mode")
        if self.seeds < 1:
            raise ConfigError(f"Sweep needs at least one seed per point, got {self.seeds}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepSpec":
        if not isinstance(data, dict):
            raise ConfigError("Sweep spec must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown key '{unknown[0]}' in sweep spec")
        for required in ("name", "base"):
            if required not in data:
                raise ConfigError(f"Sweep spec is missing '{required}'")
        axes = data.get("axes", {})
        if not isinstance(axes, dict) or not all(isinstance(v, list) for v in axes.values()):
            raise ConfigError("Sweep axes must map dotted paths to lists of values")
        values = dict(data)
        values["axes"] = tuple((path, tuple(items)) for path, items in axes.items())
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        document = asdict(self)
        document["axes"] = {path: list(items) for path, items in self.axes}
        return document


def load_sweep(reference: str) -> SweepSpec:
    """Load a sweep spec from a JSON file or a shipped preset (``preset:NAME``)."""
    if reference.startswith(PRESET_PREFIX):
        from src.presets import get_sweep
        return get_sweep(reference[len(PRESET_PREFIX):])
    path = validate_input_path(reference)
    try:
        data = load_json(path)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return SweepSpec.from_dict(data)
