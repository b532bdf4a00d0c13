"""Pseudo-spectral Keller-Segel / Navier-Stokes bench with Couette shear."""

from .spectral import (
    ContractViolation,
    GridSpec,
    RealField,
    SpectralField,
    dealias,
    derivative,
    forward_transform,
    inverse_transform,
    laplacian,
    leray_project,
    solve_chemo,
)
from .shear import ShearFrame, exact_scalar_evolve, integrating_factor, remap

__all__ = [
    "ContractViolation",
    "GridSpec",
    "RealField",
    "SpectralField",
    "ShearFrame",
    "dealias",
    "derivative",
    "exact_scalar_evolve",
    "forward_transform",
    "integrating_factor",
    "inverse_transform",
    "laplacian",
    "leray_project",
    "remap",
    "solve_chemo",
]
