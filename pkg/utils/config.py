import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from flow.energy import DEFAULT_EPSILON2, FlowParams
from flow.flow_engine import StepPolicy, StopSpec
from flow.remesh import RemeshPolicy
from geometry.analytic_surfaces import KINDS
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_ROOT = "outputs"
SURFACE_KINDS = KINDS + ("obj",)


def output_root():
    """WILLMORE_OUTPUT_ROOT overrides the default output root."""
    return Path(os.environ.get("WILLMORE_OUTPUT_ROOT", DEFAULT_OUTPUT_ROOT))


# =========================================================
# 📄 CONFIG SECTIONS
# =========================================================
@dataclass(frozen=True)
class SurfaceSpec:
    kind: str = "sphere"
    resolution: int = 4
    radius: float = 1.0
    epsilon: float = 0.0
    a: float = 1.0
    c: float = 1.0
    major: float = 2.0
    minor: float = 1.0
    path: str = None
    noise: float = 0.0

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise ConfigError(f"surface.kind must be one of {SURFACE_KINDS}, got {self.kind!r}")
        if self.kind == "obj":
            if not self.path:
                raise ConfigError("surface.path is required for kind 'obj'")
            if not Path(self.path).is_file():
                raise ConfigError(f"surface.path does not exist: {self.path}")
        if self.noise < 0:
            raise ConfigError(f"surface.noise must be >= 0, got {self.noise}")

    def analytic_parameters(self):
        return {k: getattr(self, k) for k in ("kind", "radius", "epsilon", "a", "c", "major", "minor")}


@dataclass(frozen=True)
class DiagnosticsSpec:
    record_every: int = 10
    radii: tuple = (0.25, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if self.record_every < 1:
            raise ConfigError(f"diagnostics.record_every must be >= 1, got {self.record_every}")
        if any(not r > 0 for r in self.radii):
            raise ConfigError(f"diagnostics.radii must be positive, got {list(self.radii)}")


@dataclass(frozen=True)
class SnapshotSpec:
    every: int = None

    def __post_init__(self):
        if self.every is not None and self.every < 1:
            raise ConfigError(f"snapshots.every must be >= 1 or null, got {self.every}")


def _section(cls, data, prefix):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown field(s) in {prefix}: {unknown}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"{prefix}: {e}") from e


def _policy_from_dict(data):
    data = dict(data or {})
    remesh = _section(RemeshPolicy, data.pop("remesh", None), "policy.remesh")
    policy = _section(StepPolicy, data, "policy")
    return StepPolicy(cfl=policy.cfl, dt_max=policy.dt_max, remesh_every=policy.remesh_every, remesh=remesh)


def _stop_from_dict(data):
    data = dict(data or {})
    if data.get("t_max") is None:
        data["t_max"] = math.inf
    return _section(StopSpec, data, "stop")


# =========================================================
# 🧪 EXPERIMENT CONFIG
# =========================================================
@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    surface: SurfaceSpec = field(default_factory=SurfaceSpec)
    params: FlowParams = field(default_factory=FlowParams)
    policy: StepPolicy = field(default_factory=StepPolicy)
    stop: StopSpec = field(default_factory=StopSpec)
    diagnostics: DiagnosticsSpec = field(default_factory=DiagnosticsSpec)
    snapshots: SnapshotSpec = field(default_factory=SnapshotSpec)
    output_dir: str = None
    seed: int = 0
    theorem_mode: bool = True
    epsilon2: float = DEFAULT_EPSILON2

    def __post_init__(self):
        if not self.name:
            raise ConfigError("name must be a non-empty string")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not self.epsilon2 > 0:
            raise ConfigError(f"epsilon2 must be > 0, got {self.epsilon2}")
        if self.theorem_mode:
            self.params.check_theorem_mode()

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown top-level field(s): {unknown}")
        top = {k: data[k] for k in ("name", "output_dir", "seed", "theorem_mode", "epsilon2") if k in data}
        return cls(
            surface=_section(SurfaceSpec, data.get("surface"), "surface"),
            params=_section(FlowParams, data.get("params"), "params"),
            policy=_policy_from_dict(data.get("policy")),
            stop=_stop_from_dict(data.get("stop")),
            diagnostics=_section(DiagnosticsSpec, data.get("diagnostics"), "diagnostics"),
            snapshots=_section(SnapshotSpec, data.get("snapshots"), "snapshots"),
            **top,
        )

    def to_dict(self):
        stop = asdict(self.stop)
        if math.isinf(stop["t_max"]):
            stop["t_max"] = None
        diagnostics = asdict(self.diagnostics)
        diagnostics["radii"] = list(self.diagnostics.radii)
        return {
            "name": self.name,
            "surface": asdict(self.surface),
            "params": asdict(self.params),
            "policy": asdict(self.policy),
            "stop": stop,
            "diagnostics": diagnostics,
            "snapshots": asdict(self.snapshots),
            "output_dir": self.output_dir,
            "seed": self.seed,
            "theorem_mode": self.theorem_mode,
            "epsilon2": self.epsilon2,
        }

    def resolved_output_dir(self):
        """Relative output dirs (default: the config name) live under the output root."""
        target = Path(self.output_dir or self.name)
        root = os.environ.get("WILLMORE_OUTPUT_ROOT")
        if target.is_absolute():
            return Path(root) / target.name if root else target
        return output_root() / target


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON ({path}): {e}") from e
    config = ExperimentConfig.from_dict(data)
    logger.debug("loaded config %s from %s", config.name, path)
    return config


def save_config(config, path):
    Path(path).write_text(json.dumps(config.to_dict(), indent=2), encoding="utf-8")
    return path
