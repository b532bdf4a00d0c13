"""Time integration of the rescaled chemotaxis-fluid system.

State variables are the cell density n and (in 3D) the velocity perturbation
u around the Couette background, both as spectral fields in a common shear
frame.  The stiff anisotropic linear part (Couette advection + diffusion) is
integrated exactly by the per-mode integrating factor of the shear frame;
every nonlinear and coupling term is advanced explicitly with Heun's method,
so the passive-scalar limit of the scheme is exact and the overall order in
dt is two.

Rescaled system (diffusivity 1/A, Couette advection y d/dx):
    dn/dt + y dn/dx = (1/A) [lap n - div(n u) - div(n grad c)]
    lap c = -(n - mean n)
    du/dt + y du/dx = (1/A) lap u + P[-u2 e1 + (n/A) e1 - (1/A) div(u x u)]
                      + grad lap^-1 dx u2
    div u = 0
where P is the Leray projection and the trailing gradient term is the
pressure response that keeps u divergence-free while the frame tilts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diagnostics
from .inequalities import free_energy
from .modes import split_x
from .shear import ShearFrame, effective_k_mesh, integrating_factor
from .spectral import (
    ContractViolation,
    GridSpec,
    SpectralField,
    divergence,
    hermitize,
    l2_norm,
    leray_project,
    linf_norm,
    min_value,
    solve_chemo,
    spectral_energy,
)

SERIES_COLUMNS = (
    "t", "mass", "n_min", "n_linf", "n_l2", "u_l2", "div_l2",
    "E11", "E12", "E21", "E22", "E3", "E4", "E51", "E52",
    "free_energy", "dropped_energy", "dt", "status",
)

STATUS_RUNNING = "running"
STATUS_SUPPRESSED = "suppressed"
STATUS_BLOWUP = "blowup"
STATUS_UNRESOLVED = "unresolved"


@dataclass
class Params:
    """Physical and numerical parameters of one run."""

    grid: GridSpec
    amplitude: float = 1.0          # Couette amplitude A; diffusivity is 1/A
    enable_shear: bool = True
    enable_chemotaxis: bool = True
    enable_velocity: bool = True
    phi_axis: str = "x"             # density forcing enters the first velocity component
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
    track_decomposition: bool = False
    track_energies: bool = True
    output_every: float = 0.5

    def __post_init__(self):
        if self.grid.dim not in (2, 3):
            raise ValueError("runs need a 2D or 3D grid")
        if self.amplitude < 1.0:
            raise ValueError("shear amplitude A must be >= 1")
        if self.phi_axis != "x":
            raise ValueError("only phi_axis = x is supported (forcing on u1)")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if not (0.0 < self.a_weight < self.b_weight < 2.0 * self.a_weight):
            raise ValueError(
                f"weights must satisfy 0 < a < b < 2a, got a={self.a_weight}, b={self.b_weight}"
            )
        if self.grid.dim == 2 and self.enable_velocity:
            raise ValueError("2D mode drops the fluid; enable_velocity needs dim = 3")
        if self.t_end <= 0 or self.dt_max <= 0 or self.output_every <= 0:
            raise ValueError("t_end, dt_max and output_every must be positive")

    @property
    def A(self) -> float:
        return self.amplitude


@dataclass
class State:
    """Simulation state in the current shear frame."""

    t: float
    n: SpectralField
    u: SpectralField | None
    frame: ShearFrame

    def k_mesh(self, params: Params):
        if params.enable_shear:
            return effective_k_mesh(self.n.grid, self.frame.drift)
        return self.n.grid.k_mesh()


@dataclass
class BlowupMonitor:
    """Distinguishes suppressed / blow-up / under-resolved outcomes.

    The growth trigger only counts while the spectral-tail monitor is
    quiescent.  A collapsing aggregate always de-resolves the grid
    eventually; when the tail fires after confirmed Linf growth the run is
    labelled blow-up with the last resolved time, otherwise unresolved.
    """

    linf_factor: float = 100.0
    tail_ratio_max: float = 1e-4
    growth_confirm: float = 2.0
    enabled: bool = True
    status: str = STATUS_RUNNING
    linf0: float = 0.0
    linf_prev: float = 0.0
    linf_max: float = 0.0
    t_event: float | None = None
    reason: str = ""

    def start(self, t: float, linf: float):
        self.linf0 = self.linf_prev = self.linf_max = linf

    def _fire(self, status: str, t: float, reason: str):
        if self.status == STATUS_RUNNING:
            self.status = status
            self.t_event = t
            self.reason = reason

    def abort(self, t: float, reason: str):
        self._fire(STATUS_UNRESOLVED, t, reason)

    def observe(self, t: float, t_prev: float, linf: float, n_min: float,
                tail_ratio: float, pos_floor: float):
        if self.status != STATUS_RUNNING:
            return
        if not math.isfinite(linf) or not math.isfinite(n_min):
            self._fire(STATUS_UNRESOLVED, t, "non-finite field")
            return
        self.linf_max = max(self.linf_max, linf)
        growing = self.linf_max >= self.growth_confirm * self.linf0 and linf > self.linf_prev
        if n_min < -pos_floor:
            # de-resolution signature; after confirmed growth it indicates the
            # collapse out-ran the grid, otherwise the run is just unresolved
            if growing:
                self._fire(STATUS_BLOWUP, t_prev,
                           f"density lost positivity during growth "
                           f"({self.linf_max / self.linf0:.1f}x); last resolved t = {t_prev:.4g}")
            else:
                self._fire(STATUS_UNRESOLVED, t, f"negative density {n_min:.3e}")
            return
        tail_quiet = (not self.enabled) or tail_ratio <= self.tail_ratio_max
        if tail_quiet:
            if linf >= self.linf_factor * self.linf0:
                self._fire(STATUS_BLOWUP, t, f"Linf reached {linf / self.linf0:.1f}x initial")
        elif growing:
            self._fire(STATUS_BLOWUP, t_prev,
                       f"tail fired during growth ({self.linf_max / self.linf0:.1f}x); "
                       f"last resolved t = {t_prev:.4g}")
        else:
            self._fire(STATUS_UNRESOLVED, t_prev, "spectral tail fired without growth")
        self.linf_prev = linf

    def finish(self, t: float):
        if self.status == STATUS_RUNNING:
            self.status = STATUS_SUPPRESSED
            self.t_event = t


@dataclass
class StageEval:
    """One explicit right-hand-side evaluation plus shared intermediates.

    The aux fields feed the decomposition tracker: raw zero modes for the
    forcing terms (the solver adds those unmasked), physical values of the
    dealiased zero-mode velocities for the advection products, and the
    fluctuation-product spectra (u_j,neq u_1,neq)_0.
    """

    rhs_n: np.ndarray
    rhs_u: np.ndarray | None
    max_u: float
    max_chemo: float
    n_zero: SpectralField | None = None
    u_zero: list[SpectralField] | None = None
    u_zero_vals: list[np.ndarray] | None = None
    q_neq_hat: list[np.ndarray] | None = None


def _masked(F: SpectralField, params: Params) -> np.ndarray:
    if params.dealias:
        return F.coeffs * F.grid.dealias_mask()
    return F.coeffs


def _phys(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(coeffs, axes=tuple(range(-grid.dim, 0))).real * grid.size


def _spec(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    return np.fft.fftn(values, axes=tuple(range(-grid.dim, 0))) / grid.size


def rhs_density(n: SpectralField, u: SpectralField | None, c: SpectralField | None,
                A: float, k_mesh=None, mask: bool = True) -> SpectralField:
    """Explicit density tendency -(1/A) div(n u + n grad c), dealiased.

    The divergence form conserves mass to round-off; shear advection and
    diffusion are handled by the propagator, not here.
    """
    grid = n.grid
    mesh = grid.k_mesh() if k_mesh is None else list(k_mesh)
    dmask = grid.dealias_mask() if mask else 1.0
    n_phys = _phys(grid, n.coeffs * dmask)
    flux = np.zeros((grid.dim, *grid.shape))
    if u is not None:
        flux += _phys(grid, u.coeffs * dmask)
    if c is not None:
        for a in range(grid.dim):
            flux[a] += _phys(grid, (1j * mesh[a] * c.coeffs) * dmask)
    flux *= n_phys
    out = np.zeros(grid.shape, dtype=np.complex128)
    flux_hat = _spec(grid, flux)
    for a in range(grid.dim):
        out += 1j * mesh[a] * flux_hat[a]
    return SpectralField(grid, (-1.0 / A) * out * dmask)


def rhs_velocity(n: SpectralField, u: SpectralField, A: float,
                 k_mesh=None, mask: bool = True,
                 uu_hat: np.ndarray | None = None) -> SpectralField:
    """Explicit velocity tendency P[-u2 e1 + (n/A) e1 - (1/A) div(u x u)].

    Output is divergence-free (Leray-projected with the supplied wavevectors);
    the k = 0 component passes through, so the mean of u1 grows at mean(n)/A
    minus the mean of u2.
    """
    grid = u.grid
    mesh = grid.k_mesh() if k_mesh is None else list(k_mesh)
    dmask = grid.dealias_mask() if mask else 1.0
    if uu_hat is None:
        u_phys = _phys(grid, u.coeffs * dmask)
        prods = np.einsum("i...,j...->ij...", u_phys, u_phys)
        uu_hat = _spec(grid, prods)
    rhs = np.zeros_like(u.coeffs)
    for i in range(grid.dim):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for j in range(grid.dim):
            acc += 1j * mesh[j] * uu_hat[j, i]
        rhs[i] = (-1.0 / A) * acc * dmask
    rhs[0] += n.coeffs / A - u.coeffs[1]
    return leray_project(SpectralField(grid, rhs), k_mesh=mesh)


def _tilt_compensation(u: SpectralField, mesh) -> np.ndarray:
    """grad lap^-1 dx u2: pressure response to the tilting frame."""
    k2 = np.zeros(u.grid.shape)
    for comp in mesh:
        k2 = k2 + np.broadcast_to(comp ** 2, u.grid.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(k2 > 0, (1j * mesh[0]) * u.coeffs[1] / np.where(k2 > 0, -k2, 1.0), 0.0)
    return np.stack([np.broadcast_to(1j * mesh[a], u.grid.shape) * base
                     for a in range(u.grid.dim)])


def _evaluate(n: SpectralField, u: SpectralField | None, params: Params,
              drift: float, need_aux: bool) -> StageEval:
    grid = params.grid
    mesh = effective_k_mesh(grid, drift) if params.enable_shear else grid.k_mesh()
    dmask = grid.dealias_mask() if params.dealias else 1.0
    A = params.A

    c = solve_chemo(n, k_mesh=mesh) if params.enable_chemotaxis else None

    max_u = 0.0
    max_chemo = 0.0
    rhs_u = None
    uu_hat = None
    if u is not None:
        u_phys = _phys(grid, u.coeffs * dmask)
        max_u = float(np.max(np.abs(u_phys)))
        prods = np.einsum("i...,j...->ij...", u_phys, u_phys)
        uu_hat = _spec(grid, prods)
        rhs_u = rhs_velocity(n, u, A, k_mesh=mesh, mask=params.dealias, uu_hat=uu_hat).coeffs
        if params.enable_shear:
            rhs_u = rhs_u + _tilt_compensation(u, mesh)

    n_phys = _phys(grid, n.coeffs * dmask)
    flux = np.zeros((grid.dim, *grid.shape))
    if u is not None:
        flux += _phys(grid, u.coeffs * dmask)
    if c is not None:
        grad_c = np.stack([_phys(grid, (1j * mesh[a] * c.coeffs) * dmask)
                           for a in range(grid.dim)])
        max_chemo = float(np.max(np.abs(grad_c)))
        flux += grad_c
    flux *= n_phys
    flux_hat = _spec(grid, flux)
    rhs_n = np.zeros(grid.shape, dtype=np.complex128)
    for a in range(grid.dim):
        rhs_n += 1j * mesh[a] * flux_hat[a]
    rhs_n *= (-1.0 / A) * (dmask if params.dealias else 1.0)

    aux = {}
    if need_aux and u is not None:
        cross = grid.cross_section()
        cmask = cross.dealias_mask() if params.dealias else 1.0
        n_zero = split_x(n)[0]
        u_zero = [split_x(u.component(i))[0] for i in range(grid.dim)]
        u_zero_vals = [np.fft.ifftn(u.coeffs[i][0] * cmask).real * cross.size
                       for i in range(grid.dim)]
        q_neq_hat = []
        for j in (1, 2):
            zero_prod = np.fft.fftn(u_zero_vals[j] * u_zero_vals[0]) / cross.size
            q_neq_hat.append(uu_hat[j, 0][0] - zero_prod)
        aux = {"n_zero": n_zero, "u_zero": u_zero,
               "u_zero_vals": u_zero_vals, "q_neq_hat": q_neq_hat}
    return StageEval(rhs_n=rhs_n, rhs_u=rhs_u, max_u=max_u, max_chemo=max_chemo, **aux)


def choose_dt(params: Params, ev: StageEval, t_remaining: float) -> float:
    """CFL-limited step from the explicit velocities; shear is exempt."""
    if params.fixed_dt is not None:
        return min(params.fixed_dt, t_remaining)
    dx = min(params.grid.spacing)
    dt = params.dt_max
    speed = max(ev.max_u, ev.max_chemo) / params.A
    if speed > 0:
        dt = min(dt, params.cfl * dx / speed)
    return min(dt, t_remaining)


@dataclass
class StepInfo:
    dt: float
    dropped_n: float = 0.0
    dropped_u: float = 0.0


def _step_operator(params: Params, frame: ShearFrame, t: float, dt: float):
    """Exact shear+diffusion propagator over [t, t+dt] plus frame update."""
    grid = params.grid
    A = params.A
    if not params.enable_shear:
        factor = np.exp(-grid.k_squared() * dt / A)
        def apply(coeffs):
            return coeffs * factor, 0.0
        return apply, frame

    mesh = grid.k_mesh()
    factor = integrating_factor(mesh, 0.0, dt, frame.drift, A)
    new_drift = frame.drift + dt
    shift = int(np.rint(new_drift)) if abs(new_drift) >= 1.0 else 0
    if shift == 0:
        new_frame = ShearFrame(frame.t_last_remap, new_drift)
        def apply(coeffs):
            return coeffs * factor, 0.0
        return apply, new_frame

    new_frame = ShearFrame(t_last_remap=t + dt, drift=new_drift - shift)
    n2 = grid.shape[1]
    k1s = grid.wavenumbers(0).astype(int)
    k2s = grid.wavenumbers(1).astype(int)
    kmax = n2 // 2 - 1
    plan = []
    for i1, k1 in enumerate(k1s):
        k2_new = k2s - k1 * shift
        keep = np.abs(k2_new) <= kmax
        plan.append((i1, np.nonzero(keep)[0], k2_new[keep] % n2, np.nonzero(~keep)[0]))

    def apply(coeffs):
        scaled = coeffs * factor
        out = np.zeros_like(scaled)
        lead = (slice(None),) * (scaled.ndim - grid.dim)
        dropped = 0.0
        for i1, src_idx, dst_idx, lost_idx in plan:
            out[lead + (i1, dst_idx)] = scaled[lead + (i1, src_idx)]
            dropped += float(np.sum(np.abs(scaled[lead + (i1, lost_idx)]) ** 2))
        return out, dropped * grid.volume
    return apply, new_frame


def step(state: State, params: Params, t_stop: float | None = None,
         tracker: "diagnostics.DecompositionTracker | None" = None) -> tuple[State, StepInfo]:
    """Advance one Heun step composed with the exact shear propagator."""
    t_remaining = (t_stop - state.t) if t_stop is not None else params.dt_max
    ev1 = _evaluate(state.n, state.u, params, state.frame.drift, tracker is not None)
    dt = choose_dt(params, ev1, t_remaining)
    if dt < params.dt_min:
        raise ContractViolation(f"dt underflow: {dt:.3e}")

    apply_op, new_frame = _step_operator(params, state.frame, state.t, dt)

    n_pred, _ = apply_op(state.n.coeffs + dt * ev1.rhs_n)
    u_pred = None
    if state.u is not None:
        u_pred_coeffs, _ = apply_op(state.u.coeffs + dt * ev1.rhs_u)
        u_pred = SpectralField(params.grid, u_pred_coeffs)

    ev2 = _evaluate(SpectralField(params.grid, n_pred), u_pred, params,
                    new_frame.drift, tracker is not None)

    n_new, dropped_n = apply_op(state.n.coeffs + 0.5 * dt * ev1.rhs_n)
    n_new = n_new + 0.5 * dt * ev2.rhs_n
    n_field = hermitize(SpectralField(params.grid, n_new))

    u_field = None
    dropped_u = 0.0
    if state.u is not None:
        u_new, dropped_u = apply_op(state.u.coeffs + 0.5 * dt * ev1.rhs_u)
        u_new = u_new + 0.5 * dt * ev2.rhs_u
        mesh2 = effective_k_mesh(params.grid, new_frame.drift) if params.enable_shear \
            else params.grid.k_mesh()
        # symmetrize first: odd-in-k operators are ill-defined on the lone
        # Nyquist rows, and projecting after hermitize keeps both invariants
        u_field = leray_project(hermitize(SpectralField(params.grid, u_new)), k_mesh=mesh2)

    if tracker is not None and state.u is not None:
        tracker.advance(params, dt, apply_op, ev1, ev2)

    new_state = State(t=state.t + dt, n=n_field, u=u_field, frame=new_frame)
    return new_state, StepInfo(dt=dt, dropped_n=dropped_n, dropped_u=dropped_u)


def tail_ratio(n: SpectralField, params: Params, drift: float) -> float:
    """Fraction of fluctuation energy at |k_eff| in the top third of the band."""
    grid = params.grid
    mesh = effective_k_mesh(grid, drift) if params.enable_shear else grid.k_mesh()
    k2 = np.zeros(grid.shape)
    for comp in mesh:
        k2 = k2 + np.broadcast_to(comp ** 2, grid.shape)
    kcut = min(grid.dealias_cutoff(a) for a in range(grid.dim))
    e = np.abs(n.coeffs) ** 2
    e[(0,) * grid.dim] = 0.0
    total = float(np.sum(e))
    if total == 0.0:
        return 0.0
    return float(np.sum(e[k2 >= (2.0 * kcut / 3.0) ** 2]) / total)


@dataclass
class RunResult:
    status: str
    rows: list
    final_state: State
    params: Params
    monitor: BlowupMonitor
    ledger: "diagnostics.EnergyLedger | None" = None
    tracker: "diagnostics.DecompositionTracker | None" = None
    dropped_energy: float = 0.0

    @property
    def series(self) -> dict:
        return {key: np.array([row[key] for row in self.rows])
                for key in SERIES_COLUMNS if key != "status"}


def _mass(n: SpectralField) -> float:
    return float(n.coeffs[(0,) * n.grid.dim].real * n.grid.volume)


def _row(state: State, params: Params, dt: float, status: str,
         dropped_frac: float, ledger) -> dict:
    n, u = state.n, state.u
    mesh = state.k_mesh(params)
    row = {
        "t": state.t,
        "mass": _mass(n),
        "n_min": min_value(n),
        "n_linf": linf_norm(n),
        "n_l2": l2_norm(n),
        "u_l2": l2_norm(u) if u is not None else 0.0,
        "div_l2": l2_norm(divergence(u, k_mesh=mesh)) if u is not None else 0.0,
        "dropped_energy": dropped_frac,
        "dt": dt,
        "status": status,
    }
    energies = diagnostics.energy_report(ledger) if ledger is not None else {}
    for key in ("E11", "E12", "E21", "E22", "E3", "E4", "E51", "E52"):
        row[key] = energies.get(key, 0.0)
    n0 = split_x(n)[0] if params.grid.dim == 3 else n
    row["free_energy"] = free_energy(n0) if min_value(n0) > 0.0 else float("nan")
    return row


def run(params: Params, init: State, on_sample=None) -> RunResult:
    """Integrate to t_end or until the blow-up monitor fires.

    on_sample, when given, is called with (state, row) at every emitted
    sample; the harness uses it for checkpoints.
    """
    state = init
    monitor = BlowupMonitor(
        linf_factor=params.linf_factor,
        tail_ratio_max=params.tail_ratio_max,
        growth_confirm=params.growth_confirm,
        enabled=params.monitor_tail,
    )
    monitor.start(state.t, linf_norm(state.n))
    mass0 = _mass(state.n)
    fluct0 = spectral_energy(state.n) - state.n.grid.volume * (mass0 / state.n.grid.volume) ** 2
    fluct0 = max(fluct0, 1e-300)

    ledger = None
    if params.track_energies:
        ledger = diagnostics.EnergyLedger(A=params.A, a_weight=params.a_weight,
                                          b_weight=params.b_weight)
    tracker = None
    if params.track_decomposition and state.u is not None:
        tracker = diagnostics.DecompositionTracker.start(params, state)

    dropped_total = 0.0
    rows: list[dict] = []
    t_prev_sample = state.t
    last_dt = 0.0

    def emit(dt):
        if ledger is not None:
            diagnostics.ledger_update(ledger, state, params, tracker)
        row = _row(state, params, dt, monitor.status, dropped_total / fluct0, ledger)
        rows.append(row)
        if on_sample is not None:
            on_sample(state, row)
        return row

    emit(0.0)
    next_sample = state.t + params.output_every
    eps = 1e-9 * params.output_every

    while monitor.status == STATUS_RUNNING and state.t < params.t_end - eps:
        target = min(next_sample, params.t_end)
        try:
            state, info = step(state, params, t_stop=target, tracker=tracker)
        except (ContractViolation, FloatingPointError) as err:
            monitor.abort(state.t, str(err))
            break
        last_dt = info.dt
        dropped_total += info.dropped_n
        if not np.all(np.isfinite(state.n.coeffs.view(float))):
            monitor.abort(state.t, "non-finite density coefficients")
            break
        if dropped_total / fluct0 > params.drop_tol:
            monitor.abort(state.t, f"dropped energy fraction {dropped_total / fluct0:.2e}")
            break
        if state.t >= target - eps:
            if params.enable_chemotaxis:
                pos_floor = math.inf if not params.monitor_positivity else \
                    params.positivity_tol * max(monitor.linf_max, monitor.linf0)
                monitor.observe(
                    t=state.t, t_prev=t_prev_sample,
                    linf=linf_norm(state.n), n_min=min_value(state.n),
                    tail_ratio=tail_ratio(state.n, params, state.frame.drift),
                    pos_floor=pos_floor,
                )
            # relative mass drift is a hard invariant on every accepted run
            if abs(_mass(state.n) - mass0) > 1e-8 * max(abs(mass0), 1.0):
                monitor.abort(state.t, "mass conservation violated")
            t_prev_sample = state.t
            emit(last_dt)
            next_sample += params.output_every

    if monitor.status == STATUS_RUNNING and state.t >= params.t_end - eps:
        monitor.finish(state.t)
    if rows:
        rows[-1]["status"] = monitor.status
    return RunResult(status=monitor.status, rows=rows, final_state=state, params=params,
                     monitor=monitor, ledger=ledger, tracker=tracker,
                     dropped_energy=dropped_total / fluct0)


def min_principle_check(rows: list, nbar: float, A: float,
                        delta: float | None = None, slack_frac: float = 1e-3) -> bool:
    """min n(t) >= delta * exp(-nbar t / A) - slack for every sampled t."""
    if not rows:
        return False
    if delta is None:
        delta = rows[0]["n_min"]
    if delta <= 0:
        raise ContractViolation("minimum principle needs positive initial data")
    slack = slack_frac * delta
    for row in rows:
        bound = delta * math.exp(-nbar * row["t"] / A)
        if row["n_min"] < bound - slack:
            return False
    return True
