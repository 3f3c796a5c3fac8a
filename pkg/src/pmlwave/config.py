"""Simulation configuration: JSON in, validated dataclass out.

Keys mirror the field names below, snake_case, unknown keys rejected. An
empty file is a valid config and yields the default homogeneous setup:
domain [-6,6]^2, layer width 0.6, h = 0.3, Q2, dt = 0.01, Gaussian pulse at
the origin. t_end defaults depend on the experiment kind (10 for the error
experiments, 14 for the layered medium, 150 for the long-time run) unless
set explicitly.
"""

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .assembly import GaussianPulse
from .errors import ConfigError
from .mesh import MaterialField, homogeneous_material, layered_material
from .pml import PmlConfig, damping_strength, tolerance

EXPERIMENTS = ("simulate", "pml-error", "longtime", "convergence", "laplace-verify")


@dataclass(frozen=True)
class SimulationConfig:
    domain: tuple = (-6.0, 6.0, -6.0, 6.0)
    reference_domain: tuple = (-12.0, 12.0, -12.0, 12.0)
    delta_pml: float = 0.6
    h: float = 0.3
    p: int = 2
    r: float = -1.0
    material: str = "homogeneous"
    wave_speed: float = 1.0
    layer_speeds: tuple = (1.25, 1.0, 0.75)
    interfaces: tuple = (-2.4, 2.4)
    rho: float = 1.0
    dt: float = 0.01
    t_end: float | None = None
    forcing_amplitude: float = 1.0
    forcing_sigma: float = 0.25
    forcing_t0: float = 1.0
    forcing_tau: float = 0.25
    c0: float = 2.0
    pml_exponent: int = 3
    d0: float | None = None
    output_dir: str = "out"
    energy_stride: int = 10
    amplitude_stride: int = 1
    snapshot_times: tuple = ()
    experiment: str = "simulate"
    h_values: tuple | None = None
    p_values: tuple | None = None

    # ---- derived quantities ----

    def effective_t_end(self) -> float:
        if self.t_end is not None:
            return self.t_end
        if self.experiment == "longtime":
            return 150.0
        return 14.0 if self.material == "layered" else 10.0

    def inner_box(self, domain=None) -> tuple:
        x0, x1, y0, y1 = domain if domain is not None else self.domain
        d = self.delta_pml
        return (x0 + d, x1 - d, y0 + d, y1 - d)

    def material_field(self) -> MaterialField:
        if self.material == "homogeneous":
            return homogeneous_material(c=self.wave_speed, rho=self.rho)
        return layered_material(speeds=self.layer_speeds,
                                interfaces=self.interfaces, rho=self.rho)

    def gaussian_pulse(self) -> GaussianPulse:
        return GaussianPulse(amplitude=self.forcing_amplitude,
                             sigma=self.forcing_sigma,
                             t0=self.forcing_t0, tau=self.forcing_tau)

    def pml_config(self) -> PmlConfig:
        """Layer config for the damped domain; strengths per axis.

        Each axis uses the fastest wave speed found in its own strips, which
        is the conservative choice when layers cross the absorbing region.
        """
        x0, x1, y0, y1 = self.domain
        xi0, xi1, yi0, yi1 = self.inner_box()
        mat = self.material_field()
        if self.d0 is not None:
            d0x = d0y = float(self.d0)
        else:
            tol = tolerance(self.c0, self.delta_pml, self.h, self.p)
            ys_all = np.linspace(y0, y1, 257)
            c_x = float(np.max(mat.wave_speed(np.zeros_like(ys_all), ys_all)))
            ys_strip = np.concatenate([np.linspace(y0, yi0, 65), np.linspace(yi1, y1, 65)])
            c_y = float(np.max(mat.wave_speed(np.zeros_like(ys_strip), ys_strip)))
            d0x = damping_strength(c_x, self.delta_pml, tol)
            d0y = damping_strength(c_y, self.delta_pml, tol)
        return PmlConfig(delta=self.delta_pml, x_inner=xi1, y_inner=yi1,
                         d0_x=d0x, d0_y=d0y, exponent=self.pml_exponent, c0=self.c0)


_DEFAULTS = SimulationConfig()
_TUPLE_FIELDS = {"domain", "reference_domain", "layer_speeds", "interfaces",
                 "snapshot_times", "h_values", "p_values"}


def _as_items(value, key):
    try:
        return list(value)
    except TypeError as exc:
        raise ConfigError(f"configuration key {key} must be a list of numbers") from exc


def config_from_dict(data: dict, experiment: str | None = None) -> SimulationConfig:
    """Build and validate a config from a plain dict of JSON values."""
    known = {f.name for f in fields(SimulationConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    values = dict(data)
    for key in _TUPLE_FIELDS:
        if values.get(key) is not None:
            # strings are iterable but never a valid value for these keys
            if isinstance(values[key], str) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool)
                for v in _as_items(values[key], key)
            ):
                raise ConfigError(f"configuration key {key} must be a list of numbers")
            values[key] = tuple(values[key])
    if experiment is not None:
        values["experiment"] = experiment
    cfg = SimulationConfig(**values)
    _validate(cfg)
    return cfg


def validate_config(cfg: SimulationConfig) -> None:
    """Re-run all config invariant checks (for programmatic edits)."""
    _validate(cfg)


def _validate(cfg: SimulationConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    if cfg.material not in ("homogeneous", "layered"):
        raise ConfigError(f"material must be 'homogeneous' or 'layered', got {cfg.material!r}")
    if not 1 <= int(cfg.p) <= 8:
        raise ConfigError(f"p must be in 1..8, got {cfg.p}")
    if not -1.0 <= cfg.r <= 1.0:
        raise ConfigError(f"r must lie in [-1, 1], got {cfg.r}")
    if cfg.dt <= 0:
        raise ConfigError(f"dt must be positive, got {cfg.dt}")
    if cfg.t_end is not None and cfg.t_end <= 0:
        raise ConfigError(f"t_end must be positive, got {cfg.t_end}")
    if cfg.delta_pml <= 0:
        raise ConfigError(f"delta_pml must be positive, got {cfg.delta_pml}")
    if cfg.h <= 0:
        raise ConfigError(f"h must be positive, got {cfg.h}")
    if cfg.c0 <= 0:
        raise ConfigError(f"c0 must be positive, got {cfg.c0}")
    if cfg.d0 is not None and cfg.d0 < 0:
        raise ConfigError(f"d0 must be nonnegative, got {cfg.d0}")
    if cfg.energy_stride < 0 or cfg.amplitude_stride < 1:
        raise ConfigError("energy_stride must be >= 0 and amplitude_stride >= 1")

    for name, dom in (("domain", cfg.domain), ("reference_domain", cfg.reference_domain)):
        if len(dom) != 4:
            raise ConfigError(f"{name} must be [x0, x1, y0, y1]")
        x0, x1, y0, y1 = dom
        if x1 <= x0 or y1 <= y0:
            raise ConfigError(f"{name} is degenerate: {dom}")
        for side, length in (("x", x1 - x0), ("y", y1 - y0)):
            n = round(length / cfg.h)
            if n < 1 or abs(n * cfg.h - length) > 1e-9 * length:
                raise ConfigError(
                    f"{name} side {side} (length {length}) is not an integer "
                    f"multiple of h={cfg.h}"
                )
    xi0, xi1, yi0, yi1 = cfg.inner_box()
    if xi1 <= xi0 or yi1 <= yi0:
        raise ConfigError("delta_pml leaves no interior: the layer covers the whole domain")

    for ts in cfg.snapshot_times:
        k = round(ts / cfg.dt)
        if abs(k * cfg.dt - ts) > 1e-9:
            raise ConfigError(f"snapshot time {ts} is not a multiple of dt={cfg.dt}")

    if cfg.material == "layered":
        if len(cfg.layer_speeds) != len(cfg.interfaces) + 1:
            raise ConfigError("layer_speeds must have one more entry than interfaces")
        y0 = cfg.domain[2]
        for yv in cfg.interfaces:
            k = round((yv - y0) / cfg.h)
            if abs((y0 + k * cfg.h) - yv) > 1e-9 * cfg.h:
                raise ConfigError(
                    f"material interface y={yv} does not align with the mesh of h={cfg.h}"
                )

    if cfg.h_values is not None and any(h <= 0 for h in cfg.h_values):
        raise ConfigError("h_values must be positive")
    if cfg.p_values is not None and any(not 1 <= p <= 8 for p in cfg.p_values):
        raise ConfigError("p_values must be in 1..8")


def parse_config(path, experiment: str | None = None) -> SimulationConfig:
    """Read a JSON config file; an empty file means 'all defaults'."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    text = text.strip()
    if not text:
        data = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return config_from_dict(data, experiment=experiment)


def serialize_config(cfg: SimulationConfig) -> dict:
    """Effective values as a JSON-ready dict; parse(serialize(c)) == c."""
    out = {}
    for f in fields(SimulationConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def save_config(cfg: SimulationConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(serialize_config(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
