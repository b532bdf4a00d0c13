"""Everything the suppression analysis measures during a run.

Live diagnostics for the solver: the wall-normal vorticity and lap(u2), a
residual check of their evolution equation, weighted space-time norm
accumulators and the energy functionals built from them, the good/bad
splitting of the streamwise zero-mode velocity via co-evolved cross-section
PDEs, and the quasi-linear frame quantities kappa, rho1, rho2, W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .modes import split_bar_tilde, split_x
from .shear import effective_k_mesh
from .spectral import (
    ContractViolation,
    GridSpec,
    SpectralField,
    derivative,
    hermitize,
    linf_norm,
    sobolev_norm,
    values_of,
)


# ---------------------------------------------------------------------------
# vorticity diagnostics

def compute_omega2(u: SpectralField, k_mesh=None) -> SpectralField:
    """Wall-normal vorticity dz(u1) - dx(u3)."""
    if u.grid.dim != 3 or u.components != 3:
        raise ContractViolation("omega2 needs a 3-component 3D velocity")
    mesh = u.grid.k_mesh() if k_mesh is None else list(k_mesh)
    w = 1j * mesh[2] * u.coeffs[0] - 1j * mesh[0] * u.coeffs[2]
    return SpectralField(u.grid, w)


def compute_lap_u2(u: SpectralField, k_mesh=None) -> SpectralField:
    if u.grid.dim != 3 or u.components != 3:
        raise ContractViolation("lap_u2 needs a 3-component 3D velocity")
    mesh = u.grid.k_mesh() if k_mesh is None else list(k_mesh)
    k2 = np.zeros(u.grid.shape)
    for comp in mesh:
        k2 = k2 + np.broadcast_to(comp ** 2, u.grid.shape)
    return SpectralField(u.grid, -k2 * u.coeffs[1])


def residual_omega2(state_before, state_after, params) -> float:
    """L2 residual of the omega2 evolution equation across one step.

    The stored-coefficient finite difference absorbs d/dt + y d/dx exactly
    (both states must share a remap epoch); the remaining terms are assembled
    from midpoint fields at the midpoint drift.
    """
    sb, sa = state_before, state_after
    if sb.n.grid.shape != sa.n.grid.shape:
        raise ContractViolation("states live on different grids")
    if sb.frame.t_last_remap != sa.frame.t_last_remap:
        raise ContractViolation("states straddle a remap; residual undefined")
    dt = sa.t - sb.t
    if dt <= 0:
        raise ContractViolation("states must be ordered in time")
    grid = params.grid
    A = params.A
    drift_mid = 0.5 * (sb.frame.drift + sa.frame.drift)
    mesh = effective_k_mesh(grid, drift_mid) if params.enable_shear else grid.k_mesh()

    u_mid = SpectralField(grid, 0.5 * (sb.u.coeffs + sa.u.coeffs))
    n_mid = SpectralField(grid, 0.5 * (sb.n.coeffs + sa.n.coeffs))
    w_before = compute_omega2(sb.u, k_mesh=effective_k_mesh(grid, sb.frame.drift)
                              if params.enable_shear else None)
    w_after = compute_omega2(sa.u, k_mesh=effective_k_mesh(grid, sa.frame.drift)
                             if params.enable_shear else None)
    fd = (w_after.coeffs - w_before.coeffs) / dt

    k2 = np.zeros(grid.shape)
    for comp in mesh:
        k2 = k2 + np.broadcast_to(comp ** 2, grid.shape)
    w_mid = compute_omega2(u_mid, k_mesh=mesh)

    # u . grad u1 and u . grad u3, pseudo-spectral at the midpoint
    dmask = grid.dealias_mask() if params.dealias else 1.0
    spatial = tuple(range(-3, 0))
    u_phys = np.fft.ifftn(u_mid.coeffs * dmask, axes=spatial).real * grid.size
    adv = []
    for comp in (0, 2):
        acc = np.zeros(grid.shape)
        for j in range(3):
            dj = np.fft.ifftn((1j * mesh[j] * u_mid.coeffs[comp]) * dmask,
                              axes=spatial).real * grid.size
            acc += u_phys[j] * dj
        adv.append(np.fft.fftn(acc, axes=spatial) / grid.size * dmask)
    adv_u1, adv_u3 = adv

    rhs = (
        -1j * mesh[2] * u_mid.coeffs[1]
        - (1.0 / A) * k2 * w_mid.coeffs
        - (1.0 / A) * 1j * mesh[2] * adv_u1
        + (1.0 / A) * 1j * mesh[0] * adv_u3
        + (1.0 / A) * 1j * mesh[2] * n_mid.coeffs
    )
    resid = fd - rhs
    return float(np.sqrt(grid.volume * np.sum(np.abs(resid) ** 2)))


# ---------------------------------------------------------------------------
# quasi-linear frame quantities

@dataclass
class KappaRho:
    kappa: SpectralField
    rho1: SpectralField
    rho2: SpectralField
    kappa_values: np.ndarray
    dy_kappa: np.ndarray
    dz_kappa: np.ndarray
    vy_values: np.ndarray
    vz_values: np.ndarray
    rho1_values: np.ndarray
    rho2_values: np.ndarray


def compute_kappa_rho(U2: SpectralField, A: float) -> KappaRho:
    """Quasi-linear frame V = y + U2/A: kappa = dz(V)/dy(V) and the
    coefficients rho1, rho2 splitting grad(kappa).grad into a grad(V) part
    and a good-derivative part.

    Aborts when min dy(V) < 1/2 (outside the quasi-linear regime).
    """
    if U2.grid.dim != 2 or U2.components != 1:
        raise ContractViolation("U2 must be a scalar cross-section field")
    vy = 1.0 + values_of(derivative(U2, 0)) / A
    vz = values_of(derivative(U2, 1)) / A
    if float(np.min(vy)) < 0.5:
        raise ContractViolation("dy(V) dropped below 1/2; quasi-linear frame invalid")
    kv = vz / vy
    kappa = SpectralField(U2.grid, np.fft.fftn(kv) / U2.grid.size)
    dyk = values_of(derivative(kappa, 0))
    dzk = values_of(derivative(kappa, 1))
    denom = 1.0 + kv ** 2
    r1 = (dyk + kv * dzk) / (vy * denom)
    r2 = (dzk - kv * dyk) / denom
    rho1 = SpectralField(U2.grid, np.fft.fftn(r1) / U2.grid.size)
    rho2 = SpectralField(U2.grid, np.fft.fftn(r2) / U2.grid.size)
    return KappaRho(kappa=kappa, rho1=rho1, rho2=rho2, kappa_values=kv,
                    dy_kappa=dyk, dz_kappa=dzk, vy_values=vy, vz_values=vz,
                    rho1_values=r1, rho2_values=r2)


def kappa_identity_residual(kr: KappaRho, u3: SpectralField, k_mesh=None) -> float:
    """Max-norm residual of
    grad(kappa).grad(f) = rho1 grad(V).grad(f) + rho2 (dz - kappa dy) f,
    relative to the scale of the left-hand side.
    """
    grid = u3.grid
    mesh = grid.k_mesh() if k_mesh is None else list(k_mesh)
    spatial = tuple(range(-grid.dim, 0))
    dy = np.fft.ifftn(1j * mesh[grid.dim - 2] * u3.coeffs, axes=spatial).real * grid.size
    dz = np.fft.ifftn(1j * mesh[grid.dim - 1] * u3.coeffs, axes=spatial).real * grid.size
    lhs = kr.dy_kappa * dy + kr.dz_kappa * dz
    rhs = (kr.rho1_values * (kr.vy_values * dy + kr.vz_values * dz)
           + kr.rho2_values * (dz - kr.kappa_values * dy))
    scale = max(float(np.max(np.abs(lhs))), 1e-300)
    return float(np.max(np.abs(lhs - rhs)) / scale)


# ---------------------------------------------------------------------------
# co-evolved decomposition of the streamwise zero-mode velocity

@dataclass
class DecompositionTracker:
    """Splits u1_0 = G1 + B1 + B2 by integrating the three cross-section
    PDEs alongside the solver with the same scheme, stages and dealiasing:
    G1 carries the initial data and the non-zero-mode feedback, B1 the
    density forcing n0/A, B2 the lift-up source -u2_0.
    """

    G1: SpectralField
    B1: SpectralField
    B2: SpectralField

    @classmethod
    def start(cls, params, state) -> "DecompositionTracker":
        u1 = state.u.component(0)
        g1 = split_x(u1)[0]
        cross = g1.grid
        zero = lambda: SpectralField(cross, np.zeros(cross.shape, dtype=np.complex128))
        return cls(G1=g1, B1=zero(), B2=zero())

    @property
    def cross(self) -> GridSpec:
        return self.G1.grid

    def sum_field(self) -> SpectralField:
        return SpectralField(self.cross, self.G1.coeffs + self.B1.coeffs + self.B2.coeffs)

    def bad_part(self) -> SpectralField:
        """U2 = tilde(B2) + bar(B2) + bar(B1)."""
        bar1, _ = split_bar_tilde(self.B1)
        out = self.B2.coeffs.copy()
        out[(0,) * self.cross.dim] += bar1
        return SpectralField(self.cross, out)

    def good_part(self) -> SpectralField:
        """U1 = G1 + tilde(B1)."""
        _, tilde1 = split_bar_tilde(self.B1)
        return SpectralField(self.cross, self.G1.coeffs + tilde1.coeffs)

    def bar_b1(self) -> float:
        return split_bar_tilde(self.B1)[0]

    def bar_b2(self) -> float:
        return split_bar_tilde(self.B2)[0]

    def _stage_rhs(self, params, ev):
        """Per-stage tendencies (G1, B1, B2) from the solver's aux fields."""
        cross = self.cross
        A = params.A
        mask = cross.dealias_mask() if params.dealias else 1.0
        mesh = cross.k_mesh()
        u2v, u3v = ev.u_zero_vals[1], ev.u_zero_vals[2]

        def advect(Xc):
            xv = np.fft.ifftn(Xc * mask).real * cross.size
            fy = np.fft.fftn(u2v * xv) / cross.size
            fz = np.fft.fftn(u3v * xv) / cross.size
            return (1j * mesh[0] * fy + 1j * mesh[1] * fz) * mask

        neq = (1j * mesh[0] * ev.q_neq_hat[0] + 1j * mesh[1] * ev.q_neq_hat[1]) * mask
        r_g1 = -(advect(self.G1.coeffs) + neq) / A
        r_b1 = -advect(self.B1.coeffs) / A + ev.n_zero.coeffs / A
        r_b2 = -advect(self.B2.coeffs) / A - ev.u_zero[1].coeffs
        return r_g1, r_b1, r_b2

    def advance(self, params, dt, apply_op, ev1, ev2):
        """One Heun step mirroring the solver's stages exactly.

        apply_op is unused (cross-section fields see no shear); the heat
        factor below equals the k1 = 0 plane of the solver's propagator.
        """
        cross = self.cross
        heat = np.exp(-cross.k_squared() * dt / params.A)
        r1 = self._stage_rhs(params, ev1)
        pred = DecompositionTracker(
            G1=SpectralField(cross, heat * (self.G1.coeffs + dt * r1[0])),
            B1=SpectralField(cross, heat * (self.B1.coeffs + dt * r1[1])),
            B2=SpectralField(cross, heat * (self.B2.coeffs + dt * r1[2])),
        )
        r2 = pred._stage_rhs(params, ev2)
        self.G1 = hermitize(SpectralField(cross, heat * (self.G1.coeffs + 0.5 * dt * r1[0])
                                          + 0.5 * dt * r2[0]))
        self.B1 = hermitize(SpectralField(cross, heat * (self.B1.coeffs + 0.5 * dt * r1[1])
                                          + 0.5 * dt * r2[1]))
        self.B2 = hermitize(SpectralField(cross, heat * (self.B2.coeffs + 0.5 * dt * r1[2])
                                          + 0.5 * dt * r2[2]))

    def du2_dt(self, params, state) -> SpectralField:
        """Time derivative of the bad part, assembled from the equations'
        right-hand sides rather than finite differences."""
        cross = self.cross
        A = params.A
        mask = cross.dealias_mask() if params.dealias else 1.0
        mesh = cross.k_mesh()
        u = state.u
        u2_0 = split_x(u.component(1))[0]
        u3_0 = split_x(u.component(2))[0]
        n_0 = split_x(state.n)[0]
        u2v = np.fft.ifftn(u2_0.coeffs * mask).real * cross.size
        u3v = np.fft.ifftn(u3_0.coeffs * mask).real * cross.size
        b2v = np.fft.ifftn(self.B2.coeffs * mask).real * cross.size
        adv = (1j * mesh[0] * (np.fft.fftn(u2v * b2v) / cross.size)
               + 1j * mesh[1] * (np.fft.fftn(u3v * b2v) / cross.size)) * mask
        k2 = cross.k_squared()
        out = (-k2 * self.B2.coeffs) / A - u2_0.coeffs - adv / A
        out[(0,) * cross.dim] += n_0.coeffs[(0,) * cross.dim].real / A
        return SpectralField(cross, out)


# ---------------------------------------------------------------------------
# weighted space-time norm accumulators and energy functionals

@dataclass
class TrackedNorm:
    """Accumulators realizing one ||.||_{X_w} / ||.||_{Y_0} budget."""

    weight: float
    sup_sq: float = 0.0
    int_l2: float = 0.0
    int_grad: float = 0.0
    int_pres: float = 0.0
    prev: tuple | None = None

    def observe(self, t: float, l2_sq: float, grad_sq: float, pres_sq: float):
        w = math.exp(2.0 * self.weight * t)
        vals = (w * l2_sq, w * grad_sq, w * pres_sq)
        self.sup_sq = max(self.sup_sq, vals[0])
        if self.prev is not None:
            t0, p = self.prev
            h = 0.5 * (t - t0)
            self.int_l2 += h * (p[0] + vals[0])
            self.int_grad += h * (p[1] + vals[1])
            self.int_pres += h * (p[2] + vals[2])
        self.prev = (t, vals)

    def x_norm(self, A: float) -> float:
        return math.sqrt(self.sup_sq + self.int_pres
                         + self.int_l2 / A ** (1.0 / 3.0) + self.int_grad / A)

    def y0_norm(self, A: float) -> float:
        return math.sqrt(self.sup_sq + self.int_grad / A)


@dataclass
class ScalarTrack:
    sup: float = 0.0
    integral: float = 0.0
    prev: tuple | None = None

    def observe(self, t: float, value: float):
        self.sup = max(self.sup, value)
        if self.prev is not None:
            t0, v0 = self.prev
            self.integral += 0.5 * (t - t0) * (v0 + value)
        self.prev = (t, value)


@dataclass
class EnergyLedger:
    """Running realization of the weighted norms behind the functionals.

    Weights: 0 for the Y0 group (zero-mode velocities), a*A^{-1/3} for the
    X_a group, b*A^{-1/3} for the X_b group.  Time integrals use the
    trapezoid rule over emitted samples, sups are maxima over samples.
    """

    A: float
    a_weight: float
    b_weight: float
    norms: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)

    def norm_track(self, name: str, weight: float) -> TrackedNorm:
        if name not in self.norms:
            self.norms[name] = TrackedNorm(weight=weight)
        return self.norms[name]

    def scalar_track(self, name: str) -> ScalarTrack:
        if name not in self.scalars:
            self.scalars[name] = ScalarTrack()
        return self.scalars[name]

    @property
    def wa(self) -> float:
        return self.a_weight * self.A ** (-1.0 / 3.0)

    @property
    def wb(self) -> float:
        return self.b_weight * self.A ** (-1.0 / 3.0)


def _norm_pieces(coeffs: np.ndarray, grid: GridSpec, mesh) -> tuple[float, float, float]:
    """(|f|^2, |grad f|^2, |grad lap^-1 dx f|^2) integrals from the spectrum."""
    e = np.abs(coeffs) ** 2
    if coeffs.ndim > grid.dim:
        e = np.sum(e, axis=tuple(range(coeffs.ndim - grid.dim)))
    k2 = np.zeros(grid.shape)
    for comp in mesh:
        k2 = k2 + np.broadcast_to(comp ** 2, grid.shape)
    k1sq = np.broadcast_to(np.asarray(mesh[0]) ** 2, grid.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        pres = np.where(k2 > 0, k1sq / np.where(k2 > 0, k2, 1.0), 0.0)
    vol = grid.volume
    return (float(vol * np.sum(e)), float(vol * np.sum(k2 * e)),
            float(vol * np.sum(pres * e)))


def _observe_field(ledger: EnergyLedger, name: str, weight: float, t: float,
                   coeffs: np.ndarray, grid: GridSpec, mesh):
    ledger.norm_track(name, weight).observe(t, *_norm_pieces(coeffs, grid, mesh))


def ledger_update(ledger: EnergyLedger, state, params, tracker=None):
    """Advance every accumulator with the current sample."""
    t = state.t
    grid = params.grid
    n = state.n
    mesh = effective_k_mesh(grid, state.frame.drift) if params.enable_shear \
        else grid.k_mesh()

    ledger.scalar_track("n_linf").observe(t, linf_norm(n))

    n_neq = split_x(n)[1] if grid.dim == 3 else n
    dxx_n = (1j * np.asarray(mesh[0])) ** 2 * n_neq.coeffs
    if grid.dim == 2:
        dxx_n = dxx_n * (np.abs(grid.k_mesh()[0]) > 0)  # fluctuation only
    _observe_field(ledger, "dxx_n_neq", ledger.wb, t, dxx_n, grid, mesh)

    if state.u is None:
        return
    u = state.u
    cross = grid.cross_section()
    cmesh = cross.k_mesh()

    # Y0 group: zero-mode velocities and their derivatives
    u2_0 = split_x(u.component(1))[0]
    u3_0 = split_x(u.component(2))[0]
    ck2 = cross.k_squared()
    for name, f0 in (("u2_0", u2_0), ("u3_0", u3_0)):
        _observe_field(ledger, name, 0.0, t, f0.coeffs, cross, cmesh)
        grad = np.stack([1j * np.broadcast_to(cmesh[a], cross.shape) * f0.coeffs
                         for a in range(2)])
        _observe_field(ledger, "grad_" + name, 0.0, t, grad, cross, cmesh)
        lap = -ck2 * f0.coeffs
        if name == "u2_0":
            _observe_field(ledger, "lap_u2_0", 0.0, t, lap, cross, cmesh)
        else:
            wmin = min(math.sqrt(params.A ** (-2.0 / 3.0) + t / params.A), 1.0)
            _observe_field(ledger, "wmin_lap_u3_0", 0.0, t, wmin * lap, cross, cmesh)

    # X_a group: vorticity pair
    u_neq = SpectralField(grid, u.coeffs.copy())
    u_neq.coeffs[:, 0] = 0.0
    w2 = compute_omega2(u_neq, k_mesh=mesh)
    lap_u2 = compute_lap_u2(u_neq, k_mesh=mesh)
    _observe_field(ledger, "lap_u2_neq", ledger.wa, t, lap_u2.coeffs, grid, mesh)
    for axis, name in ((0, "dx_w2_neq"), (1, "dy_w2_neq"), (2, "dz_w2_neq")):
        d = 1j * np.broadcast_to(mesh[axis], grid.shape) * w2.coeffs
        _observe_field(ledger, name, ledger.wa, t, d, grid, mesh)

    # X_b group: streamwise-second-derivative fluctuations
    dxx = (1j * np.asarray(mesh[0])) ** 2
    k2full = np.zeros(grid.shape)
    for comp in mesh:
        k2full = k2full + np.broadcast_to(comp ** 2, grid.shape)
    _observe_field(ledger, "dxx_u2_neq", ledger.wb, t, dxx * u_neq.coeffs[1], grid, mesh)
    _observe_field(ledger, "dxx_u3_neq", ledger.wb, t, dxx * u_neq.coeffs[2], grid, mesh)
    _observe_field(ledger, "lap_u3_neq", ledger.wb, t, -k2full * u_neq.coeffs[2], grid, mesh)

    # good-derivative and W quantities need the quasi-linear frame
    kappa_vals = 0.0
    if tracker is not None:
        try:
            kr = compute_kappa_rho(tracker.bad_part(), params.A)
            kappa_vals = kr.kappa_values
        except ContractViolation:
            kappa_vals = 0.0
    spatial = tuple(range(-3, 0))

    def good_derivative(comp_coeffs):
        dz = 1j * np.broadcast_to(mesh[2], grid.shape) * comp_coeffs
        dy = 1j * np.broadcast_to(mesh[1], grid.shape) * comp_coeffs
        if np.isscalar(kappa_vals) and kappa_vals == 0.0:
            return dz
        dy_phys = np.fft.ifftn(dy, axes=spatial).real * grid.size
        prod = np.fft.fftn(kappa_vals[None, :, :] * dy_phys, axes=spatial) / grid.size
        if params.dealias:
            prod = prod * grid.dealias_mask()
        return dz - prod

    dx1 = 1j * np.asarray(mesh[0])
    _observe_field(ledger, "dx_good_u2", ledger.wb, t,
                   dx1 * good_derivative(u_neq.coeffs[1]), grid, mesh)
    _observe_field(ledger, "dx_good_u3", ledger.wb, t,
                   dx1 * good_derivative(u_neq.coeffs[2]), grid, mesh)

    if np.isscalar(kappa_vals) and kappa_vals == 0.0:
        w_coeffs = u_neq.coeffs[1]
    else:
        u3_phys = np.fft.ifftn(u_neq.coeffs[2], axes=spatial).real * grid.size
        prod = np.fft.fftn(kappa_vals[None, :, :] * u3_phys, axes=spatial) / grid.size
        if params.dealias:
            prod = prod * grid.dealias_mask()
        w_coeffs = u_neq.coeffs[1] + prod
    grad_w = np.stack([1j * np.broadcast_to(mesh[a], grid.shape) * w_coeffs
                       for a in range(3)])
    _observe_field(ledger, "dx_grad_W", ledger.wb, t, dx1 * grad_w, grid, mesh)

    # E_{1,2}: bad-part Sobolev budgets from the co-evolved fields
    if tracker is not None:
        U2 = tracker.bad_part()
        ck2 = cross.k_squared()
        lap_u2_bad = SpectralField(cross, -ck2 * U2.coeffs)
        ledger.scalar_track("lapU2_h2_sup").observe(t, sobolev_norm(lap_u2_bad, 2))
        grad_lap = np.stack([1j * np.broadcast_to(cmesh[a], cross.shape) * lap_u2_bad.coeffs
                             for a in range(2)])
        gl = SpectralField(cross, grad_lap)
        ledger.scalar_track("gradlapU2_h2_int").observe(t, sobolev_norm(gl, 2) ** 2)
        dtu2 = tracker.du2_dt(params, state)
        ledger.scalar_track("dtU2_h2_sup").observe(t, sobolev_norm(dtu2, 2))


def energy_report(ledger: EnergyLedger) -> dict:
    """Reassemble the tracked functionals; absent quantities report zero."""
    A = ledger.A

    def xnorm(name):
        tr = ledger.norms.get(name)
        return tr.x_norm(A) if tr else 0.0

    def ynorm(name):
        tr = ledger.norms.get(name)
        return tr.y0_norm(A) if tr else 0.0

    def ssup(name):
        tr = ledger.scalars.get(name)
        return tr.sup if tr else 0.0

    def sint(name):
        tr = ledger.scalars.get(name)
        return tr.integral if tr else 0.0

    e11 = (ynorm("u2_0") + ynorm("u3_0") + ynorm("grad_u2_0") + ynorm("grad_u3_0")
           + ynorm("lap_u2_0") + ynorm("wmin_lap_u3_0"))
    e12 = (ssup("lapU2_h2_sup") + math.sqrt(sint("gradlapU2_h2_int")) / math.sqrt(A)) / A \
        + ssup("dtU2_h2_sup")
    e21 = xnorm("dxx_n_neq")
    e22 = (xnorm("lap_u2_neq") + xnorm("dx_w2_neq")
           + (xnorm("dy_w2_neq") + xnorm("dz_w2_neq")) / A ** (1.0 / 3.0))
    e3 = ssup("n_linf")
    e4 = xnorm("dxx_u2_neq") + xnorm("dxx_u3_neq")
    e51 = xnorm("lap_u3_neq") / A ** (2.0 / 3.0)
    e52 = (xnorm("dxx_u2_neq") + xnorm("dx_good_u2")
           + xnorm("dxx_u3_neq") + xnorm("dx_good_u3") + xnorm("dx_grad_W"))
    return {"E11": e11, "E12": e12, "E21": e21, "E22": e22,
            "E3": e3, "E4": e4, "E51": e51, "E52": e52}
