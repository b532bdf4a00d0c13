"""Plain key = value run configuration.

One flat namespace, '#' comments, unknown keys rejected, later assignments
win (the CLI appends its overrides below the file's text).  Scenario-specific
requirements are validated when the config is turned into solver parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .solver import Params
from .spectral import GridSpec

SCENARIOS = ("simulate", "sweep_mass", "rate_fit", "check")
CHECK_SUITES = ("elliptic", "poincare", "loghls", "gns", "identities", "all")


class ConfigError(ValueError):
    """Invalid or missing configuration; the message names the key."""


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_list(s: str) -> tuple[float, ...]:
    return tuple(float(p) for p in s.replace(",", " ").split())


def _parse_optional_float(s: str):
    return None if s.strip().lower() in ("none", "") else float(s)


@dataclass
class RunConfig:
    scenario: str = "simulate"
    dim: int = 2
    nx: int = 64
    ny: int = 64
    nz: int = 0
    A: float = 1.0
    enable_shear: bool = True
    enable_chemotaxis: bool = True
    enable_velocity: bool | None = None   # defaults to (dim == 3)
    phi_axis: str = "x"
    t_end: float = 10.0
    dt_max: float = 0.05
    cfl: float = 0.4
    fixed_dt: float | None = None
    dt_min: float = 1e-12
    dealias: bool = True
    a_weight: float = 0.05
    b_weight: float = 0.08
    positivity_tol: float = 1e-8
    monitor_positivity: bool = True
    linf_factor: float = 100.0
    growth_confirm: float = 2.0
    tail_ratio_max: float = 1e-4
    monitor_tail: bool = True
    drop_tol: float = 1e-6
    track_decomposition: bool | None = None  # defaults to velocity runs
    track_energies: bool = True
    output_every: float = 0.5
    checkpoint_every: float = 0.0            # 0 disables periodic checkpoints
    out_dir: str = "out"

    # initial density
    init_kind: str = "gaussian"
    mass: float = 0.0
    init_width: float = 0.5
    init_center: tuple[float, ...] = ()
    init_seed: int = 0
    init_slope: float = 2.0
    init_amplitude: float = 1.0
    init_file: str = ""

    # initial velocity
    u_kind: str = "none"
    u_eps: float = 0.0
    u_seed: int = 1
    u_slope: float = 3.0
    u_amplitude: float = 0.0   # non-zero-mode scale

    # sweep / rate / check scenario knobs
    masses: tuple[float, ...] = ()
    a_values: tuple[float, ...] = ()
    workers: int = 1
    suite: str = "all"
    samples: int = 100
    loghls_mass: float = 4.0 * np.pi


_CONVERTERS = {
    str: lambda s: s.strip(),
    int: int,
    float: float,
    bool: _parse_bool,
}


def _converter_for(f):
    if f.name in ("masses", "a_values", "init_center"):
        return _parse_float_list
    if f.name in ("fixed_dt",):
        return _parse_optional_float
    if f.name in ("enable_velocity", "track_decomposition"):
        return _parse_bool
    return _CONVERTERS[f.type if isinstance(f.type, type) else type(f.default)]


def parse_config(text: str) -> RunConfig:
    """Parse key = value lines into a validated RunConfig."""
    known = {f.name: f for f in fields(RunConfig)}
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _converter_for(known[key])(value))
        except (ValueError, TypeError) as err:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {err}") from err
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig):
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {cfg.scenario!r}")
    if cfg.dim not in (2, 3):
        raise ConfigError(f"dim must be 2 or 3, got {cfg.dim}")
    sizes = [("nx", cfg.nx), ("ny", cfg.ny)] + ([("nz", cfg.nz)] if cfg.dim == 3 else [])
    for name, n in sizes:
        if n < 8 or n % 2 != 0:
            raise ConfigError(f"{name}: n_modes must be even and >= 8, got {n}")
    if cfg.A < 1.0:
        raise ConfigError(f"A: shear amplitude must be >= 1, got {cfg.A}")
    if not (0.0 < cfg.a_weight < cfg.b_weight < 2.0 * cfg.a_weight):
        raise ConfigError(
            f"a_weight/b_weight: requires 0 < a < b < 2a, "
            f"got a = {cfg.a_weight}, b = {cfg.b_weight}"
        )
    if cfg.phi_axis != "x":
        raise ConfigError("phi_axis: only 'x' is supported")
    if cfg.scenario in ("simulate", "sweep_mass") and cfg.init_kind == "gaussian":
        if cfg.scenario == "simulate" and cfg.mass <= 0:
            raise ConfigError("mass: required positive for simulate runs")
    if cfg.scenario == "sweep_mass" and not cfg.masses:
        raise ConfigError("masses: sweep_mass needs a nonempty mass list")
    if cfg.scenario == "rate_fit" and not cfg.a_values:
        raise ConfigError("a_values: rate_fit needs a nonempty amplitude list")
    if cfg.scenario == "check" and cfg.suite not in CHECK_SUITES:
        raise ConfigError(f"suite: must be one of {CHECK_SUITES}, got {cfg.suite!r}")
    if cfg.init_kind not in ("gaussian", "random", "file"):
        raise ConfigError(f"init_kind: unknown kind {cfg.init_kind!r}")
    if cfg.init_kind == "file" and not cfg.init_file:
        raise ConfigError("init_file: required when init_kind = file")
    if cfg.u_kind not in ("none", "zero_mode", "random"):
        raise ConfigError(f"u_kind: unknown kind {cfg.u_kind!r}")
    if cfg.workers < 1:
        raise ConfigError("workers: must be >= 1")


def grid_of(cfg: RunConfig) -> GridSpec:
    shape = (cfg.nx, cfg.ny) if cfg.dim == 2 else (cfg.nx, cfg.ny, cfg.nz)
    return GridSpec(shape)


def params_of(cfg: RunConfig) -> Params:
    velocity = cfg.enable_velocity if cfg.enable_velocity is not None else cfg.dim == 3
    track_dec = cfg.track_decomposition if cfg.track_decomposition is not None else velocity
    try:
        return Params(
            grid=grid_of(cfg),
            amplitude=cfg.A,
            enable_shear=cfg.enable_shear,
            enable_chemotaxis=cfg.enable_chemotaxis,
            enable_velocity=velocity,
            phi_axis=cfg.phi_axis,
            t_end=cfg.t_end,
            dt_max=cfg.dt_max,
            cfl=cfg.cfl,
            fixed_dt=cfg.fixed_dt,
            dt_min=cfg.dt_min,
            dealias=cfg.dealias,
            a_weight=cfg.a_weight,
            b_weight=cfg.b_weight,
            positivity_tol=cfg.positivity_tol,
            monitor_positivity=cfg.monitor_positivity,
            linf_factor=cfg.linf_factor,
            growth_confirm=cfg.growth_confirm,
            tail_ratio_max=cfg.tail_ratio_max,
            monitor_tail=cfg.monitor_tail,
            drop_tol=cfg.drop_tol,
            track_decomposition=track_dec and velocity,
            track_energies=cfg.track_energies,
            output_every=cfg.output_every,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err
