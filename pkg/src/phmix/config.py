"""Run configuration: nested dataclass blocks, JSON (de)serialization and
validation.  The material and time-stepping blocks reuse the library's own
dataclasses, so constructing a config validates the physical parameters."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigurationError, MaterialError
from .fluid import FluidMaterial
from .heat import HeatMaterial
from .simulate import SCENARIOS, SimConfig


@dataclass(frozen=True)
class GeometryConfig:
    a: float = 0.0
    b: float = 1.0
    circumference: float = 0.5
    depth: float = 0.05
    n_ax: int = 16
    n_az: int = 8
    n_th: int = 4
    n_fluid: int = 16


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    heat: HeatMaterial = field(default_factory=lambda: HeatMaterial(
        rho=10.0, c=10.0, conductivity=5.0, t_ref=300.0))
    fluid: FluidMaterial = field(default_factory=lambda: FluidMaterial(
        r_gas=0.4, c_v=1.0, friction=0.1, phi_ref=1.0, s_ref=0.0,
        t_ref=300.0))
    sim: SimConfig = field(default_factory=lambda: SimConfig(
        dt=2.5e-4, t_end=5e-2, newton_tol=1e-12, newton_max_iters=40,
        output_every=20))
    scenario: str = "hot-wall-cooldown"
    seed: int = 0
    output_dir: str = "out"
    coupling_scale: float = 1.0
    quad_degree: int = 3
    scenario_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(
                f"unknown scenario {self.scenario!r}; valid: "
                f"{', '.join(SCENARIOS)}")
        if self.geometry.n_ax != self.geometry.n_fluid:
            raise ConfigurationError(
                f"geometry.n_ax ({self.geometry.n_ax}) must equal "
                f"geometry.n_fluid ({self.geometry.n_fluid}): the solid axial "
                f"mesh and the channel mesh must coincide node-for-node")
        if self.quad_degree < 2:
            raise ConfigurationError(
                f"quad_degree must be >= 2, got {self.quad_degree}")
        if self.coupling_scale <= 0:
            raise ConfigurationError(
                f"coupling_scale must be positive, got {self.coupling_scale}")


# JSON key "lambda" is friendlier than the dataclass field name
_HEAT_KEY_MAP = {"lambda": "conductivity"}


def _block_from_dict(cls, data: dict, section: str, base, key_map=None):
    """Build a config block, overriding the defaults field by field."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {section!r} must be an object")
    key_map = key_map or {}
    kwargs = {f.name: getattr(base, f.name) for f in fields(cls)}
    for key, value in data.items():
        name = key_map.get(key, key)
        if name not in kwargs:
            raise ConfigurationError(
                f"unknown key {section}.{key} (valid: "
                f"{', '.join(sorted(kwargs))})")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (MaterialError, ConfigurationError) as exc:
        raise ConfigurationError(f"section {section!r}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"section {section!r}: {exc}") from exc


_TOP_LEVEL = ("geometry", "heat", "fluid", "sim", "scenario", "seed",
              "output_dir", "coupling_scale", "quad_degree", "scenario_params")


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a (possibly partial) nested dict; unknown
    keys are rejected with the offending path."""
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")
    for key in data:
        if key not in _TOP_LEVEL:
            raise ConfigurationError(
                f"unknown top-level key {key!r} (valid: {', '.join(_TOP_LEVEL)})")
    base = RunConfig()
    kwargs = {}
    if "geometry" in data:
        kwargs["geometry"] = _block_from_dict(GeometryConfig, data["geometry"],
                                              "geometry", base.geometry)
    if "heat" in data:
        kwargs["heat"] = _block_from_dict(HeatMaterial, data["heat"], "heat",
                                          base.heat, _HEAT_KEY_MAP)
    if "fluid" in data:
        kwargs["fluid"] = _block_from_dict(FluidMaterial, data["fluid"],
                                           "fluid", base.fluid)
    if "sim" in data:
        kwargs["sim"] = _block_from_dict(SimConfig, data["sim"], "sim",
                                         base.sim)
    for key in ("scenario", "seed", "output_dir", "coupling_scale",
                "quad_degree", "scenario_params"):
        if key in data:
            kwargs[key] = data[key]
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def config_to_dict(cfg: RunConfig) -> dict:
    out = asdict(cfg)
    out["heat"] = {("lambda" if k == "conductivity" else k): v
                   for k, v in out["heat"].items()}
    return out


def load_config(path) -> RunConfig:
    """Read a JSON config file; parse errors carry line/column."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(data)


def default_config(**overrides) -> RunConfig:
    return config_from_dict(overrides) if overrides else RunConfig()
