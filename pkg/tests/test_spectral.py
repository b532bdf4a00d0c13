"""Transforms, spectral calculus and norms on the torus."""

import numpy as np
import pytest

from shearks.spectral import (
    ContractViolation,
    GridSpec,
    RealField,
    SpectralField,
    dealias,
    derivative,
    divergence,
    forward_transform,
    from_values,
    grad_inv_lap_dx,
    gradient,
    h1_norm,
    hermitize,
    inverse_transform,
    l2_norm,
    l2_norm_values,
    laplacian,
    leray_project,
    linf_norm,
    min_value,
    mixed_norm,
    norm_report,
    solve_chemo,
    spectral_energy,
    values_of,
    zeros,
)

GRID2 = GridSpec((32, 32))
GRID3 = GridSpec((16, 16, 16))


def random_real_field(grid, seed=0, components=1, slope=2.0):
    """Random smooth real field via a |k|^-slope spectrum."""
    rng = np.random.default_rng(seed)
    shape = grid.shape if components == 1 else (components, *grid.shape)
    raw = rng.standard_normal(shape)
    F = forward_transform(RealField(grid, raw))
    k2 = grid.k_squared()
    amp = np.where(k2 > 0, (k2 + 1.0) ** (-slope / 2.0), 0.0)
    F = SpectralField(grid, F.coeffs * amp * grid.dealias_mask())
    return hermitize(F)


class TestGridSpec:
    def test_basic_properties(self):
        assert GRID2.dim == 2
        assert GRID2.volume == pytest.approx((2 * np.pi) ** 2)
        assert GRID2.dealias_cutoff(0) == 10

    def test_rejects_odd_or_tiny(self):
        with pytest.raises(ValueError, match="even"):
            GridSpec((63, 64))
        with pytest.raises(ValueError, match="even"):
            GridSpec((4, 16))

    def test_wavenumbers_cover_band(self):
        k = GRID2.wavenumbers(0)
        assert k[0] == 0
        assert k.max() == 15
        assert k.min() == -16

    def test_cross_section(self):
        assert GRID3.cross_section().shape == (16, 16)


class TestTransforms:
    def test_sin_x_single_mode_pair(self):
        x = GRID2.coordinate_mesh()[0]
        F = from_values(GRID2, np.sin(x) + 0 * GRID2.coordinate_mesh()[1])
        # f = sum fhat e^{ikx}: coefficients -i/2 at k=+1, +i/2 at k=-1
        assert F.coeffs[1, 0] == pytest.approx(-0.5j, abs=1e-13)
        assert F.coeffs[-1, 0] == pytest.approx(0.5j, abs=1e-13)
        rest = F.coeffs.copy()
        rest[1, 0] = rest[-1, 0] = 0.0
        assert np.max(np.abs(rest)) < 1e-13

    def test_constant_field(self):
        F = from_values(GRID2, np.ones(GRID2.shape))
        assert F.coeffs[0, 0] == pytest.approx(1.0)
        off = F.coeffs.copy()
        off[0, 0] = 0
        assert np.max(np.abs(off)) < 1e-14

    def test_roundtrip_random(self):
        rng = np.random.default_rng(7)
        vals = rng.standard_normal(GRID3.shape)
        back = inverse_transform(forward_transform(RealField(GRID3, vals)))
        assert np.max(np.abs(back.values - vals)) < 1e-12

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ContractViolation):
            RealField(GRID2, np.zeros((3, 5)))

    def test_hermitian_invariants(self):
        F = random_real_field(GRID3, seed=1)
        F.validate()
        assert F.hermitian_defect() < 1e-14


class TestOperators:
    def test_dx_sin_is_cos(self):
        x, _ = GRID2.coordinate_mesh()
        F = from_values(GRID2, np.sin(x) + np.zeros(GRID2.shape))
        dF = derivative(F, 0)
        assert np.max(np.abs(values_of(dF) - np.cos(x))) < 1e-13

    def test_laplacian_cos_y(self):
        _, y = GRID2.coordinate_mesh()
        F = from_values(GRID2, np.cos(y) + np.zeros(GRID2.shape))
        LF = laplacian(F)
        assert np.max(np.abs(values_of(LF) + np.cos(y))) < 1e-13

    def test_axis_out_of_range(self):
        F = zeros(GRID2)
        with pytest.raises(ContractViolation, match="axis"):
            derivative(F, 2)

    def test_derivative_commutes_with_roundtrip(self):
        F = random_real_field(GRID2, seed=3)
        d1 = derivative(F, 1)
        d2 = derivative(forward_transform(inverse_transform(F)), 1)
        assert np.max(np.abs(d1.coeffs - d2.coeffs)) < 1e-13


class TestChemo:
    def test_constant_density_gives_zero(self):
        F = from_values(GRID2, np.full(GRID2.shape, 3.0))
        c = solve_chemo(F)
        assert np.max(np.abs(c.coeffs)) == 0.0

    def test_cos_y_solution(self):
        _, y = GRID2.coordinate_mesh()
        n = from_values(GRID2, 1.0 + np.cos(y) + np.zeros(GRID2.shape))
        c = solve_chemo(n)
        # lap c = -(n - mean n) checked pointwise: c = cos y
        assert np.max(np.abs(values_of(c) - np.cos(y))) < 1e-13
        resid = laplacian(c).coeffs + n.coeffs
        resid[0, 0] -= n.coeffs[0, 0]
        assert np.max(np.abs(resid)) < 1e-13

    def test_random_residual_and_gauge(self):
        n = random_real_field(GRID3, seed=11)
        c = solve_chemo(n)
        resid = laplacian(c).coeffs + n.coeffs
        resid[0, 0, 0] -= n.coeffs[0, 0, 0]
        assert l2_norm(SpectralField(GRID3, resid)) <= 1e-12 * max(l2_norm(n), 1e-300)
        assert abs(c.coeffs[0, 0, 0]) == 0.0

    def test_output_norm_bounded_by_input(self):
        n = random_real_field(GRID3, seed=12)
        c = solve_chemo(n)
        nofluct = n.coeffs.copy()
        nofluct[0, 0, 0] = 0.0
        assert l2_norm(c) <= l2_norm(SpectralField(GRID3, nofluct)) + 1e-15

    def test_linearity(self):
        a = random_real_field(GRID2, seed=13)
        b = random_real_field(GRID2, seed=14)
        combo = SpectralField(GRID2, 2.0 * a.coeffs - 0.5 * b.coeffs)
        lhs = solve_chemo(combo).coeffs
        rhs = 2.0 * solve_chemo(a).coeffs - 0.5 * solve_chemo(b).coeffs
        assert np.max(np.abs(lhs - rhs)) < 1e-14


class TestLeray:
    def test_pure_gradient_annihilated(self):
        x, y = GRID2.coordinate_mesh()
        phi = from_values(GRID2, np.sin(x + y))
        u = gradient(phi)
        p = leray_project(u)
        off_mean = p.coeffs.copy()
        off_mean[:, 0, 0] = 0
        assert np.max(np.abs(off_mean)) < 1e-13

    def test_solenoidal_untouched(self):
        psi = random_real_field(GRID2, seed=5)
        u = np.stack([-derivative(psi, 1).coeffs, derivative(psi, 0).coeffs])
        u = SpectralField(GRID2, u)
        p = leray_project(u)
        assert np.max(np.abs(p.coeffs - u.coeffs)) < 1e-13

    def test_projector_properties(self):
        u = random_real_field(GRID3, seed=6, components=3)
        p = leray_project(u)
        assert l2_norm(divergence(p)) <= 1e-12 * l2_norm(u)
        pp = leray_project(p)
        assert np.max(np.abs(pp.coeffs - p.coeffs)) < 1e-13
        assert l2_norm(p) <= l2_norm(u) + 1e-14


class TestDealias:
    def test_low_modes_identity(self):
        F = random_real_field(GRID2, seed=8)  # already band-limited
        G = dealias(F)
        assert np.array_equal(F.coeffs, G.coeffs)

    def test_high_mode_zeroed(self):
        F = zeros(GRID2)
        F.coeffs[GRID2.shape[0] // 2 - 1, 0] = 1.0
        assert np.max(np.abs(dealias(F).coeffs)) == 0.0

    def test_energy_nonincreasing(self):
        rng = np.random.default_rng(9)
        F = hermitize(forward_transform(RealField(GRID2, rng.standard_normal(GRID2.shape))))
        assert spectral_energy(dealias(F)) <= spectral_energy(F)


class TestNorms:
    def test_l2_sin_x(self):
        x, _ = GRID2.coordinate_mesh()
        F = from_values(GRID2, np.sin(x) + np.zeros(GRID2.shape))
        # integral of sin^2 over T^2 is 2 pi^2
        assert l2_norm(F) == pytest.approx(np.sqrt(2 * np.pi ** 2), abs=1e-10)

    def test_linf_constant(self):
        F = from_values(GRID2, np.ones(GRID2.shape))
        assert linf_norm(F) == pytest.approx(1.0)

    def test_mixed_norm_sin_x(self):
        x, _ = GRID2.coordinate_mesh()
        F = from_values(GRID2, np.sin(x) + np.zeros(GRID2.shape))
        # sup over x of sqrt(integral of sin^2 x dy) = sqrt(2 pi) at sin x = 1
        assert mixed_norm(F, (0,)) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-3)

    def test_parseval(self):
        for grid, seed in ((GRID2, 21), (GRID3, 22)):
            F = random_real_field(grid, seed=seed)
            quad = l2_norm_values(inverse_transform(F))
            spec = l2_norm(F)
            assert abs(quad - spec) <= 1e-10 * spec

    def test_h1_exceeds_l2(self):
        F = random_real_field(GRID2, seed=23)
        assert h1_norm(F) >= l2_norm(F)

    def test_norm_report_keys(self):
        F = random_real_field(GRID2, seed=24)
        rep = norm_report(F, mixed=((0,),))
        assert set(rep) == {"l2", "linf", "h1", "min", "linf_x"}
        assert rep["min"] == pytest.approx(min_value(F))


class TestGradInvLapDx:
    def test_matches_composition(self):
        F = random_real_field(GRID3, seed=31)
        direct = grad_inv_lap_dx(F)
        # independent composition: derivative, then invert laplacian, then gradient
        dx = derivative(F, 0)
        k2 = GRID3.k_squared()
        inv = np.where(k2 > 0, dx.coeffs / np.where(k2 > 0, -k2, 1.0), 0.0)
        expect = gradient(SpectralField(GRID3, inv))
        assert np.max(np.abs(direct.coeffs - expect.coeffs)) < 1e-14
