"""Initial states for simulation runs, built from a RunConfig."""

from __future__ import annotations

import numpy as np

from .config import ConfigError, RunConfig, grid_of
from .modes import split_x
from .sampling import (
    fluctuation_only,
    gaussian_bump,
    positive_density,
    random_smooth,
    solenoidal_zero_mode,
)
from .shear import ShearFrame
from .solver import State
from .spectral import GridSpec, SpectralField, hermitize, leray_project, sobolev_norm, zeros


def _strip_nyquist(F: SpectralField) -> SpectralField:
    """Zero the lone k = -n/2 rows; odd-in-k operators are undefined there."""
    out = F.coeffs.copy()
    lead = out.ndim - F.grid.dim
    for axis, n in enumerate(F.grid.shape):
        idx = [slice(None)] * out.ndim
        idx[lead + axis] = n // 2
        out[tuple(idx)] = 0.0
    return SpectralField(F.grid, out)


def build_density(cfg: RunConfig, grid: GridSpec) -> SpectralField:
    if cfg.init_kind == "gaussian":
        center = cfg.init_center if cfg.init_center else None
        n = gaussian_bump(grid, cfg.init_width, center=center, mass=cfg.mass)
    elif cfg.init_kind == "random":
        n = positive_density(grid, seed=cfg.init_seed, mass=cfg.mass,
                             slope=cfg.init_slope, contrast=cfg.init_amplitude)
    elif cfg.init_kind == "file":
        from .seriesio import read_checkpoint

        state, _ = read_checkpoint(cfg.init_file)
        if state.n.grid.shape != grid.shape:
            raise ConfigError("init_file: checkpoint grid does not match config grid")
        n = state.n
    else:
        raise ConfigError(f"init_kind: unknown kind {cfg.init_kind!r}")
    return _strip_nyquist(hermitize(n))


def scaled_zero_mode_velocity(grid: GridSpec, seed: int, slope: float,
                              eps: float) -> SpectralField:
    """Solenoidal x-independent (u2, u3) with ||u2_0||_H2 + ||u3_0||_H1 = eps."""
    u = solenoidal_zero_mode(grid, seed=seed, slope=slope)
    u2_0 = split_x(u.component(1))[0]
    u3_0 = split_x(u.component(2))[0]
    size = sobolev_norm(u2_0, 2) + sobolev_norm(u3_0, 1)
    if size > 0 and eps > 0:
        u.coeffs *= eps / size
    elif eps == 0:
        u.coeffs *= 0.0
    return u


def build_velocity(cfg: RunConfig, grid: GridSpec) -> SpectralField:
    u = zeros(grid, components=3)
    if cfg.u_kind in ("zero_mode", "random") and cfg.u_eps > 0:
        u.coeffs += scaled_zero_mode_velocity(grid, cfg.u_seed, cfg.u_slope,
                                              cfg.u_eps).coeffs
    if cfg.u_kind == "random" and cfg.u_amplitude > 0:
        fluct = fluctuation_only(random_smooth(grid, seed=cfg.u_seed + 1000,
                                               slope=cfg.u_slope, components=3))
        fluct = leray_project(fluct)
        norm = np.sqrt(grid.volume * np.sum(np.abs(fluct.coeffs) ** 2))
        if norm > 0:
            u.coeffs += cfg.u_amplitude / norm * fluct.coeffs
    return _strip_nyquist(hermitize(leray_project(u)))


def build_initial_state(cfg: RunConfig) -> State:
    grid = grid_of(cfg)
    n = build_density(cfg, grid)
    u = None
    velocity = cfg.enable_velocity if cfg.enable_velocity is not None else cfg.dim == 3
    if velocity:
        if cfg.init_kind == "file":
            from .seriesio import read_checkpoint

            state, _ = read_checkpoint(cfg.init_file)
            u = state.u if state.u is not None else zeros(grid, components=3)
        else:
            u = build_velocity(cfg, grid)
    return State(t=0.0, n=n, u=u, frame=ShearFrame())
