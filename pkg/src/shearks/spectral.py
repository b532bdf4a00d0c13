"""Fourier representation and calculus on the periodic torus [0, 2*pi)^d.

Fields are stored as full complex spectra (no half-spectrum packing) with the
normalization f = sum_k fhat(k) e^{i k.x}, i.e. the forward transform divides
by the number of grid points so that fhat(k) = |T|^-d * integral f e^{-i k.x}.
Real fields are kept Hermitian-symmetric; products are formed in physical
space with 2/3-rule dealiasing (cutoff floor(n/3) per axis).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


class ContractViolation(ValueError):
    """An operation was called outside its contract."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform collocation grid on the torus, period 2*pi per axis.

    shape holds the per-axis mode counts (n1, ..., nd); each must be even and
    at least 8 so the 2/3-rule band is nonempty.  dim 1 grids are allowed so
    that cross-sections of 2D grids remain representable.
    """

    shape: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.shape, tuple):
            object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if not 1 <= len(self.shape) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(self.shape)}")
        for n in self.shape:
            if n < 8 or n % 2 != 0:
                raise ValueError(f"n_modes must be even and >= 8 per axis, got {n}")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def volume(self) -> float:
        return TWO_PI ** self.dim

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.volume / self.size

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(TWO_PI / n for n in self.shape)

    def dealias_cutoff(self, axis: int) -> int:
        return self.shape[axis] // 3

    def axis_coordinate(self, axis: int) -> np.ndarray:
        """Collocation points along one axis."""
        n = self.shape[axis]
        return np.arange(n) * (TWO_PI / n)

    def coordinate_mesh(self) -> list[np.ndarray]:
        """Broadcastable physical coordinates, one array per axis."""
        return list(np.ix_(*[self.axis_coordinate(a) for a in range(self.dim)]))

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Integer wavenumbers along one axis in FFT storage order."""
        n = self.shape[axis]
        return np.fft.fftfreq(n, d=1.0 / n)

    def k_mesh(self) -> list[np.ndarray]:
        """Broadcastable integer wavevector components, one array per axis."""
        return list(np.ix_(*[self.wavenumbers(a) for a in range(self.dim)]))

    def k_squared(self) -> np.ndarray:
        return _k_squared(self)

    def dealias_mask(self) -> np.ndarray:
        return _dealias_mask(self)

    def cross_section(self) -> "GridSpec":
        """Grid of the (d-1)-dimensional cross-section normal to axis 0."""
        if self.dim < 2:
            raise ValueError("no cross-section of a 1D grid")
        return GridSpec(self.shape[1:])


@lru_cache(maxsize=32)
def _k_squared(grid: GridSpec) -> np.ndarray:
    k2 = np.zeros(grid.shape)
    for comp in grid.k_mesh():
        k2 = k2 + comp ** 2
    return k2


@lru_cache(maxsize=32)
def _dealias_mask(grid: GridSpec) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    for axis, comp in enumerate(grid.k_mesh()):
        mask &= np.abs(comp) <= grid.dealias_cutoff(axis)
    return mask


@dataclass
class RealField:
    """Collocation values of a real field; leading axes index components."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        _check_shape(self.grid, self.values)
        if not np.all(np.isfinite(self.values)):
            raise ContractViolation("RealField values must be finite")

    @property
    def components(self) -> int:
        return _n_components(self.grid, self.values)


@dataclass
class SpectralField:
    """Complex Fourier coefficients of a real field on the torus.

    coeffs is indexed row-major by integer wavevector in FFT storage order;
    a leading axis, when present, indexes vector components.
    """

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        _check_shape(self.grid, self.coeffs)
        if not np.iscomplexobj(self.coeffs):
            self.coeffs = self.coeffs.astype(np.complex128)

    @property
    def components(self) -> int:
        return _n_components(self.grid, self.coeffs)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def component(self, i: int) -> "SpectralField":
        if self.coeffs.ndim == self.grid.dim:
            raise IndexError("scalar field has no components to index")
        return SpectralField(self.grid, self.coeffs[i])

    def hermitian_defect(self) -> float:
        """Relative departure from conj-symmetry coeff(-k) = conj(coeff(k))."""
        mirror = conj_reverse(self.coeffs, self.grid.dim)
        scale = np.max(np.abs(self.coeffs)) or 1.0
        return float(np.max(np.abs(self.coeffs - mirror)) / scale)

    def validate(self):
        if self.hermitian_defect() > 1e-12:
            raise ContractViolation("field is not Hermitian-symmetric (not real)")
        mean = self.coeffs[(..., *([0] * self.grid.dim))]
        if np.max(np.abs(np.imag(np.atleast_1d(mean)))) > 1e-14:
            raise ContractViolation("k = 0 coefficient must be real")


def _check_shape(grid: GridSpec, arr: np.ndarray):
    if arr.ndim == grid.dim:
        ok = arr.shape == grid.shape
    elif arr.ndim == grid.dim + 1:
        ok = arr.shape[1:] == grid.shape and arr.shape[0] >= 1
    else:
        ok = False
    if not ok:
        raise ContractViolation(
            f"array shape {arr.shape} inconsistent with grid {grid.shape}"
        )


def _n_components(grid: GridSpec, arr: np.ndarray) -> int:
    return 1 if arr.ndim == grid.dim else arr.shape[0]


def _spatial_axes(F: SpectralField | RealField) -> tuple[int, ...]:
    arr = F.coeffs if isinstance(F, SpectralField) else F.values
    offset = arr.ndim - F.grid.dim
    return tuple(range(offset, arr.ndim))


def zeros(grid: GridSpec, components: int = 1) -> SpectralField:
    shape = grid.shape if components == 1 else (components, *grid.shape)
    return SpectralField(grid, np.zeros(shape, dtype=np.complex128))


def conj_reverse(coeffs: np.ndarray, dim: int) -> np.ndarray:
    """conj(coeffs) sampled at -k, the Hermitian mirror of the spectrum."""
    axes = tuple(range(coeffs.ndim - dim, coeffs.ndim))
    out = coeffs
    for ax in axes:
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


def hermitize(F: SpectralField) -> SpectralField:
    """Project onto the Hermitian-symmetric (real-field) part."""
    sym = 0.5 * (F.coeffs + conj_reverse(F.coeffs, F.grid.dim))
    return SpectralField(F.grid, sym)


# ---------------------------------------------------------------------------
# transforms

def forward_transform(f: RealField) -> SpectralField:
    """Collocation values -> Fourier coefficients (unitary pair with inverse)."""
    axes = _spatial_axes(f)
    coeffs = np.fft.fftn(f.values, axes=axes) / f.grid.size
    return SpectralField(f.grid, coeffs)


def inverse_transform(F: SpectralField) -> RealField:
    """Fourier coefficients -> collocation values (imaginary part discarded)."""
    axes = _spatial_axes(F)
    values = np.fft.ifftn(F.coeffs, axes=axes).real * F.grid.size
    return RealField(F.grid, values)


def values_of(F: SpectralField) -> np.ndarray:
    return inverse_transform(F).values


def from_values(grid: GridSpec, values: np.ndarray) -> SpectralField:
    return forward_transform(RealField(grid, np.asarray(values, dtype=float)))


# ---------------------------------------------------------------------------
# differential operators
#
# Every operator takes an optional k_mesh so that callers working in a
# sheared (drifting-wavevector) frame can supply effective wavevectors; the
# default is the grid's integer lattice.

def _mesh(F: SpectralField, k_mesh) -> list[np.ndarray]:
    return F.grid.k_mesh() if k_mesh is None else list(k_mesh)


def _mesh_k2(mesh) -> np.ndarray:
    k2 = np.zeros(np.broadcast_shapes(*[m.shape for m in mesh]))
    for comp in mesh:
        k2 = k2 + comp ** 2
    return k2


def derivative(F: SpectralField, axis: int, k_mesh=None) -> SpectralField:
    """Spectral partial derivative along one axis."""
    if not 0 <= axis < F.grid.dim:
        raise ContractViolation(f"axis {axis} out of range for dim {F.grid.dim}")
    k = _mesh(F, k_mesh)[axis]
    return SpectralField(F.grid, 1j * k * F.coeffs)


def laplacian(F: SpectralField, k_mesh=None) -> SpectralField:
    k2 = _mesh_k2(_mesh(F, k_mesh))
    return SpectralField(F.grid, -k2 * F.coeffs)


def gradient(F: SpectralField, k_mesh=None) -> SpectralField:
    """Gradient of a scalar field as a dim-component vector field."""
    if F.components != 1:
        raise ContractViolation("gradient expects a scalar field")
    mesh = _mesh(F, k_mesh)
    comps = np.stack([np.broadcast_to(1j * mesh[a], F.grid.shape) * F.coeffs
                      for a in range(F.grid.dim)])
    return SpectralField(F.grid, comps)


def divergence(u: SpectralField, k_mesh=None) -> SpectralField:
    if u.components != u.grid.dim:
        raise ContractViolation("divergence expects a dim-component vector field")
    mesh = _mesh(u, k_mesh)
    out = np.zeros(u.grid.shape, dtype=np.complex128)
    for a in range(u.grid.dim):
        out += 1j * mesh[a] * u.coeffs[a]
    return SpectralField(u.grid, out)


def solve_chemo(n: SpectralField, k_mesh=None) -> SpectralField:
    """Chemoattractant c with lap(c) = -(n - mean n) and mean(c) = 0.

    Coefficient-wise c_hat(k) = n_hat(k)/|k|^2 for k != 0; the k = 0 gauge is
    fixed to zero mean.
    """
    if n.components != 1:
        raise ContractViolation("solve_chemo expects a scalar density")
    k2 = _mesh_k2(_mesh(n, k_mesh))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(k2 > 0.0, n.coeffs / np.where(k2 > 0.0, k2, 1.0), 0.0)
    return SpectralField(n.grid, c)


def leray_project(u: SpectralField, k_mesh=None) -> SpectralField:
    """Orthogonal projection onto divergence-free fields; k = 0 unchanged."""
    if u.components != u.grid.dim:
        raise ContractViolation("leray_project expects a dim-component vector field")
    mesh = _mesh(u, k_mesh)
    k2 = _mesh_k2(mesh)
    kdotu = np.zeros(u.grid.shape, dtype=np.complex128)
    for a in range(u.grid.dim):
        kdotu += mesh[a] * u.coeffs[a]
    with np.errstate(divide="ignore", invalid="ignore"):
        kdotu = np.where(k2 > 0.0, kdotu / np.where(k2 > 0.0, k2, 1.0), 0.0)
    out = u.coeffs.copy()
    for a in range(u.grid.dim):
        out[a] -= mesh[a] * kdotu
    return SpectralField(u.grid, out)


def grad_inv_lap_dx(F: SpectralField, k_mesh=None) -> SpectralField:
    """grad(lap^-1 d/dx F), the pressure-type operator entering the X norms."""
    mesh = _mesh(F, k_mesh)
    k2 = _mesh_k2(mesh)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_lap_dx = np.where(
            k2 > 0.0, (1j * mesh[0]) * F.coeffs / np.where(k2 > 0.0, -k2, 1.0), 0.0
        )
    comps = np.stack([np.broadcast_to(1j * mesh[a], F.grid.shape) * inv_lap_dx
                      for a in range(F.grid.dim)])
    return SpectralField(F.grid, comps)


def dealias(F: SpectralField) -> SpectralField:
    """Zero every coefficient with any |k_axis| above floor(n/3)."""
    return SpectralField(F.grid, F.coeffs * F.grid.dealias_mask())


def pad_to(F: SpectralField, grid: GridSpec) -> SpectralField:
    """Represent the same band-limited function on a finer grid."""
    if grid.dim != F.grid.dim:
        raise ContractViolation("pad_to needs grids of equal dimension")
    lead = F.coeffs.shape[: F.coeffs.ndim - F.grid.dim]
    src = [np.arange(n) for n in lead]
    dst = [np.arange(n) for n in lead]
    for n_old, n_new in zip(F.grid.shape, grid.shape):
        if n_new < n_old:
            raise ContractViolation("pad_to only refines")
        src.append(np.r_[0: n_old // 2, n_old - n_old // 2: n_old])
        dst.append(np.r_[0: n_old // 2, n_new - n_old // 2: n_new])
    out = np.zeros((*lead, *grid.shape), dtype=np.complex128)
    out[np.ix_(*dst)] = F.coeffs[np.ix_(*src)]
    return SpectralField(grid, out)


# ---------------------------------------------------------------------------
# norms

def spectral_energy(F: SpectralField) -> float:
    """Integral of |f|^2 over the torus, from the coefficients (Parseval)."""
    return float(F.grid.volume * np.sum(np.abs(F.coeffs) ** 2))


def l2_norm(F: SpectralField) -> float:
    return float(np.sqrt(spectral_energy(F)))


def l2_norm_values(f: RealField) -> float:
    """Grid-quadrature L2 norm (trapezoid on the periodic grid)."""
    return float(np.sqrt(np.sum(f.values ** 2) * f.grid.cell_volume))


def linf_norm(F: SpectralField) -> float:
    vals = values_of(F)
    if F.components > 1:
        vals = np.sqrt(np.sum(vals ** 2, axis=0))
    return float(np.max(np.abs(vals)))


def min_value(F: SpectralField) -> float:
    if F.components != 1:
        raise ContractViolation("min_value expects a scalar field")
    return float(np.min(values_of(F)))


def h1_norm(F: SpectralField, k_mesh=None) -> float:
    k2 = _mesh_k2(_mesh(F, k_mesh))
    w = (1.0 + k2) * np.abs(F.coeffs) ** 2
    return float(np.sqrt(F.grid.volume * np.sum(w)))


def sobolev_norm(F: SpectralField, order: int, k_mesh=None) -> float:
    """H^s norm with Bessel weights (1 + |k|^2)^s."""
    k2 = _mesh_k2(_mesh(F, k_mesh))
    w = (1.0 + k2) ** order * np.abs(F.coeffs) ** 2
    return float(np.sqrt(F.grid.volume * np.sum(w)))


def mixed_norm(F: SpectralField, sup_axes: tuple[int, ...]) -> float:
    """L^inf over sup_axes of the L2 norm over the remaining axes.

    Evaluated on the collocation grid; for vector fields the L2 part sums
    component energies.
    """
    for a in sup_axes:
        if not 0 <= a < F.grid.dim:
            raise ContractViolation(f"axis {a} out of range")
    vals = values_of(F)
    sq = vals ** 2
    if F.components > 1:
        sq = np.sum(sq, axis=0)
    l2_axes = tuple(a for a in range(F.grid.dim) if a not in sup_axes)
    measure = np.prod([F.grid.spacing[a] for a in l2_axes]) if l2_axes else 1.0
    reduced = np.sum(sq, axis=l2_axes) * measure if l2_axes else sq
    return float(np.sqrt(np.max(reduced)))


def norm_report(F: SpectralField, mixed: tuple[tuple[int, ...], ...] = ()) -> dict:
    """Bundle of the standard norms; mixed lists sup-axis tuples to include."""
    report = {
        "l2": l2_norm(F),
        "linf": linf_norm(F),
        "h1": h1_norm(F),
    }
    if F.components == 1:
        report["min"] = min_value(F)
    for axes in mixed:
        key = "linf_" + "".join("xyz"[a] for a in axes)
        report[key] = mixed_norm(F, axes)
    return report
