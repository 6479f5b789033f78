"""Method-of-lines integration with nonlocal boundary closure and blow-up detection.

Interior nodes are advanced with an explicit two-stage Heun scheme; after every
stage the boundary values are recomputed from the kernel integral.  Several
initial data for the same problem can be advanced together as a batch with a
common step size, which keeps the monotone scheme's ordering exact (used by
comparison runs).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .domain import Grid, Interval, integrate, laplacian_apply
from .errors import HypothesisError, NumericalError
from .model import CompiledProblem, ProblemSpec, TemporalConstant, check_compatibility, compile_problem
from .spectral import EigenPair, Normalization, first_eigenpair

DECAY_LEVEL = 1e-12
TRACE_COLUMNS = ("t", "sup_norm", "mass", "J", "I")


class StiffnessError(NumericalError):
    """Step size collapsed below ``dt_min`` while the solution stays bounded."""


class BoundaryConvergenceError(NumericalError):
    """Boundary fixed-point iteration did not settle (refine the grid)."""


@dataclass
class State:
    t: float
    u: np.ndarray
    last_dt: float = 0.0


@dataclass(frozen=True)
class SolveControls:
    """Step-size and termination settings.

    ``snapshot_times`` are hit exactly and stored as nodal snapshots;
    ``record_snapshots`` additionally stores a snapshot at every trace record.
    ``dt_init`` caps the first step only.
    """

    t_end: float
    dt_init: float | None = None
    cfl_safety: float = 0.45
    reaction_safety: float = 0.1
    blowup_threshold: float = 1e8
    dt_min: float = 1e-12
    boundary_fixedpoint_tol: float = 1e-12
    trace_stride: int = 50
    snapshot_times: tuple = ()
    record_snapshots: bool = False

    def __post_init__(self):
        for name in ("t_end", "cfl_safety", "reaction_safety", "blowup_threshold", "dt_min",
                     "boundary_fixedpoint_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"control {name} must be positive")
        if self.dt_init is not None and not self.dt_init > 0:
            raise ValueError("control dt_init must be positive")
        if not self.cfl_safety < 0.5:
            raise ValueError("cfl_safety must be below 0.5 for the explicit scheme")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be at least 1")


@dataclass(frozen=True)
class Outcome:
    kind: str  # "Completed" | "BlowUp" | "Decayed"
    t_bracket: tuple[float, float] | None = None
    below: float | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.t_bracket is not None:
            out["t_bracket"] = list(self.t_bracket)
        if self.below is not None:
            out["below"] = self.below
        return out


@dataclass
class Trace:
    t: list = field(default_factory=list)
    sup_norm: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    J: list = field(default_factory=list)
    I: list = field(default_factory=list)

    def append(self, t, sup, mass, J, I):
        self.t.append(t)
        self.sup_norm.append(sup)
        self.mass.append(mass)
        self.J.append(J)
        self.I.append(I)

    def arrays(self) -> dict[str, np.ndarray]:
        return {c: np.asarray(getattr(self, c), dtype=float) for c in TRACE_COLUMNS}

    def __len__(self):
        return len(self.t)


@dataclass
class SolveResult:
    outcome: Outcome
    traces: Trace
    final_state: State
    snapshots: list = field(default_factory=list)  # (t, u) pairs
    steps: int = 0
    time_error: float = 0.0


# ---------------------------------------------------------------------------
# boundary closure


def _close(cp: CompiledProblem, U: np.ndarray, t: float, tol: float, cap: float) -> None:
    """Set boundary entries of the batch ``U`` in place.

    Kernels of the coefficient language do not depend on the boundary point,
    so all boundary nodes share one value ``g`` solving
    ``g = base + c g^l`` (``c`` the boundary nodes' own quadrature mass).
    The residual is convex in ``g`` for either side of ``l = 1``, so Newton
    converges monotonically from a suitable start.  Values beyond ``cap``
    are clipped to it.
    """
    grid = cp.grid
    B = grid.boundary_idx
    if not cp.has_kernel:
        U[:, B] = 0.0
        return
    kt = cp.k_time(t)
    l = cp.spec.exponents.l
    wI, c = cp.k_weight_interior, kt * cp.k_weight_boundary
    UI = U[:, _interior_slice(grid)]
    base = kt * ((UI if l == 1.0 else np.power(UI, l)) @ wI)
    vals = []
    for i in range(U.shape[0]):
        vals.append(_solve_boundary_scalar(float(base[i]), c, l, max(float(U[i, B].max()), 0.0), tol, cap, t))
    U[:, B] = np.asarray(vals)[:, None]


def _solve_boundary_scalar(base, c, l, g, tol, cap, t):
    if l == 1.0:
        return base / (1.0 - c) if c < 1.0 and base / (1.0 - c) <= cap else cap
    if l > 1.0:
        # convex residual: Newton from g = base rises monotonically to the smaller root;
        # a nonnegative slope before reaching it means the root has vanished
        g = base
        for _ in range(200):
            gl = g**l
            resid = base + c * gl - g
            slope = c * l * gl / g - 1.0 if g > 0 else -1.0
            if resid <= tol * g:
                return g
            if slope >= 0.0:
                return cap
            g -= resid / slope
            if not g <= cap:
                return cap
        raise BoundaryConvergenceError(
            f"boundary fixed point did not converge in 200 iterations at t={t:.6g}; refine the grid"
        )
    # concave source: f(g) = g - base - c g^l is convex with f(0) <= 0, so Newton
    # started right of the root decreases monotonically onto it
    if base == 0.0 and g == 0.0:
        return 0.0
    g = max(g, base, 1.0)
    while g - base - c * g**l < 0.0:
        g *= 2.0
        if not g <= cap:
            return cap
    for _ in range(200):
        if g <= 0.0:
            return 0.0
        gl = g**l
        resid = g - base - c * gl
        slope = 1.0 - c * l * gl / g
        if resid <= tol * g or slope <= 0.0:
            return g
        g -= resid / slope
    raise BoundaryConvergenceError(
        f"boundary fixed point did not converge in 200 iterations at t={t:.6g}; refine the grid"
    )


def boundary_close(grid: Grid, spec: ProblemSpec, u: np.ndarray, t: float, tol: float = 1e-12) -> np.ndarray:
    """Boundary values ``int k(x, y, t) u(y)^l dy`` consistent with the interior of ``u``."""
    cp = compile_problem(spec, grid)
    U = np.array(u, dtype=float, ndmin=2)
    _close(cp, U, t, tol, np.inf)
    return U[0, grid.boundary_idx].copy()


# ---------------------------------------------------------------------------
# time stepping


def _interior_slice(grid: Grid) -> slice:
    idx = grid.interior_idx
    return slice(int(idx[0]), int(idx[-1]) + 1)


def _pow(x, e):
    return x if e == 1.0 else np.power(x, e)


class _Integrator:
    def __init__(self, spec: ProblemSpec, grid: Grid, controls: SolveControls):
        self.cp = compile_problem(spec, grid)
        self.grid = grid
        self.c = controls
        e = spec.exponents
        self.r, self.p, self.q = e.r, e.p, e.q
        self.I = _interior_slice(grid)
        self.aI = self.cp.a_space[self.I]
        self.bI = self.cp.b_space[self.I]
        self.a_zero = not np.any(self.aI)
        self.b_zero = not np.any(self.bI)
        self.w = grid.quad_weights
        dim_factor = 1 if isinstance(grid.descriptor, Interval) else 2
        self.dt_cfl = controls.cfl_safety * grid.h**2 / (2 * dim_factor)

    def rhs(self, U: np.ndarray, t: float):
        """Interior right side and its reaction part."""
        UI = U[:, self.I]
        if self.a_zero:
            R = np.zeros_like(UI)
        else:
            Ip = _pow(U, self.p) @ self.w
            R = (self.aI * self.cp.a_time(t)) * _pow(UI, self.r) * Ip[:, None]
        if not self.b_zero:
            R -= (self.bI * self.cp.b_time(t)) * _pow(UI, self.q)
        return laplacian_apply(self.grid, U) + R, R

    def close(self, U, t):
        _close(self.cp, U, t, self.c.boundary_fixedpoint_tol, self.c.blowup_threshold * 10)

    def dt_for(self, U, R) -> float:
        if U.shape[0] == 1:
            sup = float(U.max())
            rate = float(np.abs(R).max()) / sup if sup > 0 else 0.0
            return min(self.dt_cfl, self.c.reaction_safety / (1.0 + rate))
        sup = U.max(axis=1)
        rmax = np.abs(R).max(axis=1)
        rate = np.where(sup > 0, rmax / np.where(sup > 0, sup, 1.0), 0.0).max()
        return min(self.dt_cfl, self.c.reaction_safety / (1.0 + rate))

    def heun(self, U, t, dt, F1):
        I = self.I
        UI = U[:, I]
        U1 = U.copy()
        np.maximum(UI + dt * F1, 0.0, out=U1[:, I])
        self.close(U1, t + dt)
        F2, _ = self.rhs(U1, t + dt)
        Fm = 0.5 * (F1 + F2)
        Un = U1
        np.maximum(UI + dt * Fm, 0.0, out=Un[:, I])
        self.close(Un, t + dt)
        # Euler-vs-Heun difference at each member's peak, converted to a time shift
        if U.shape[0] == 1:
            k = int(np.argmax(Un[0, I]))
            f1, f2 = float(F1[0, k]), float(F2[0, k])
            speed = abs(f1 + f2) * 0.5
            return Un, (min(dt, 0.5 * dt * abs(f2 - f1) / speed) if speed > 0 else 0.0)
        rows = np.arange(U.shape[0])
        k = np.argmax(Un[:, I], axis=1)
        err = 0.5 * dt * np.abs(F2[rows, k] - F1[rows, k])
        speed = np.abs(Fm[rows, k])
        with np.errstate(divide="ignore", invalid="ignore"):
            shift = np.where(speed > 0, np.minimum(dt, err / speed), 0.0)
        return Un, float(shift.max())


def step(state: State, spec: ProblemSpec, grid: Grid, controls: SolveControls) -> State:
    """One Heun step with the controls' step-size rule."""
    integ = _Integrator(spec, grid, controls)
    U = np.array(state.u, dtype=float, ndmin=2)
    F1, R = integ.rhs(U, state.t)
    dt = min(integ.dt_for(U, R), controls.t_end - state.t) if controls.t_end > state.t else integ.dt_for(U, R)
    if dt < controls.dt_min:
        raise StiffnessError(f"step size {dt:.3e} below dt_min at t={state.t:.6g}")
    Un, _ = integ.heun(U, state.t, dt, F1)
    return State(state.t + dt, Un[0], dt)


def functional_J(state: State, eig: EigenPair, grid: Grid) -> float:
    """``exp(lambda1 t) * int u phi`` with ``phi`` normalized to unit integral."""
    if Normalization(eig.normalization) is not Normalization.INTEGRAL_ONE:
        raise ValueError("functional J needs the eigenfunction normalized to unit integral")
    m = integrate(grid, np.asarray(state.u) * eig.phi)
    with np.errstate(over="ignore"):
        return float(np.exp(eig.lambda1 * state.t) * m)


def functional_I(state: State, spec: ProblemSpec, eig: EigenPair, grid: Grid) -> float:
    """``int (a_low(t)/2 u^r int u^p - b_bar(t) u^q) phi`` with envelopes over the nodes."""
    cp = compile_problem(spec, grid)
    return float(_functional_I_batch(cp, np.array(state.u, ndmin=2), state.t, eig.phi)[0])


def _functional_I_batch(cp: CompiledProblem, U, t, phi):
    e = cp.spec.exponents
    grid = cp.grid
    alow = float(cp.a_at(t).min())
    bbar = float(cp.b_at(t).max())
    Ip = np.atleast_1d(integrate(grid, np.power(U, e.p)))
    dens = 0.5 * alow * np.power(U, e.r) * Ip[:, None] - bbar * np.power(U, e.q)
    return np.atleast_1d(integrate(grid, dens * phi))


# ---------------------------------------------------------------------------


def _run(spec: ProblemSpec, grid: Grid, controls: SolveControls, U0: np.ndarray, stop_on_first_blowup=True):
    integ = _Integrator(spec, grid, controls)
    cp = integ.cp
    eig = first_eigenpair(grid, Normalization.INTEGRAL_ONE)
    lam, phi = eig.lambda1, eig.phi
    U = np.maximum(np.array(U0, dtype=float, ndmin=2), 0.0)
    m = U.shape[0]
    t = 0.0
    c = controls
    traces = [Trace() for _ in range(m)]
    snaps: list[list] = [[] for _ in range(m)]
    pending = sorted(s for s in c.snapshot_times if 0 < s <= c.t_end)

    def record(t, U, snapshot):
        sup = U.max(axis=1)
        mass = np.atleast_1d(integrate(grid, U))
        mom = np.atleast_1d(integrate(grid, U * phi))
        with np.errstate(over="ignore"):
            J = math.exp(lam * t) * mom if lam * t < 700 else np.where(mom > 0, np.inf, 0.0)
        Ival = _functional_I_batch(cp, U, t, phi)
        for i in range(m):
            tr = traces[i]
            if tr.t and tr.t[-1] >= t:
                continue
            tr.append(t, float(sup[i]), float(mass[i]), float(J[i]), float(Ival[i]))
            if snapshot:
                snaps[i].append((t, U[i].copy()))

    record(0.0, U, c.record_snapshots or (0.0 in c.snapshot_times))
    nstep = 0
    time_error = 0.0
    dt = 0.0
    outcome = None
    sup_prev = U.max()
    while True:
        F1, R = integ.rhs(U, t)
        dt = integ.dt_for(U, R)
        if nstep == 0 and c.dt_init is not None:
            dt = min(dt, c.dt_init)
        target = pending[0] if pending else c.t_end
        hit = False
        if t + dt >= target - 1e-14 * max(1.0, target):
            dt = target - t
            hit = True
        if dt < c.dt_min and not hit:
            sup = U.max()
            if sup > sup_prev:
                outcome = Outcome("BlowUp", (t - time_error, t + 10 * c.dt_min + time_error))
                break
            raise StiffnessError(
                f"step size {dt:.3e} fell below dt_min={c.dt_min:g} at t={t:.6g} with bounded "
                f"solution (sup {sup:.3e}); the sink term is too stiff for the explicit scheme"
            )
        sup_prev = U.max()
        U, shift = integ.heun(U, t, dt, F1)
        time_error += shift
        t = target if hit else t + dt
        nstep += 1
        sup = U.max(axis=1)
        if not np.all(np.isfinite(U)) or sup.max() > c.blowup_threshold:
            F1, R = integ.rhs(np.where(np.isfinite(U), U, c.blowup_threshold), t)
            dt_next = integ.dt_for(np.where(np.isfinite(U), U, c.blowup_threshold), R)
            outcome = Outcome("BlowUp", (t - time_error, t + 10 * dt_next + time_error))
            break
        at_snapshot = hit and pending and abs(t - pending[0]) <= 1e-14 * max(1.0, t)
        if at_snapshot:
            pending.pop(0)
        if sup.max() < DECAY_LEVEL:
            outcome = Outcome("Decayed", below=DECAY_LEVEL)
            break
        if t >= c.t_end:
            outcome = Outcome("Completed")
            break
        if at_snapshot:
            record(t, U, True)
        elif nstep % c.trace_stride == 0:
            record(t, U, c.record_snapshots)
    U_fin = np.where(np.isfinite(U), U, np.inf)
    record(t, U_fin, c.record_snapshots or bool(c.snapshot_times))
    results = []
    for i in range(m):
        oc = outcome
        if oc.kind == "BlowUp" and m > 1 and not (U_fin[i].max() > c.blowup_threshold):
            # another member triggered the stop
            oc = Outcome("Completed")
        if oc.kind == "Decayed" and U_fin[i].max() >= DECAY_LEVEL:
            oc = Outcome("Completed")
        results.append(
            SolveResult(oc, traces[i], State(t, U_fin[i].copy(), dt), snaps[i], nstep, time_error)
        )
    return results


def solve(spec: ProblemSpec, grid: Grid, controls: SolveControls, *, waive_compatibility: bool = False) -> SolveResult:
    """Integrate until ``t_end``, blow-up or decay.

    Raises :class:`HypothesisError` when the initial datum violates the
    boundary compatibility condition (unless waived).
    """
    _require_compatible(spec, grid, waive_compatibility)
    cp = compile_problem(spec, grid)
    return _run(spec, grid, controls, cp.u0)[0]


def solve_batch(
    spec: ProblemSpec,
    grid: Grid,
    controls: SolveControls,
    initial_fields: Sequence[np.ndarray],
) -> list[SolveResult]:
    """Advance several initial data of the same problem with a shared step sequence.

    The run stops for all members when any member crosses the blow-up
    threshold; members that did not are reported as ``Completed`` at that time.
    """
    U0 = np.array([np.asarray(f, dtype=float) for f in initial_fields])
    if U0.ndim != 2 or U0.shape[1] != grid.n:
        raise ValueError("initial fields must all have one value per grid node")
    return _run(spec, grid, controls, U0)


def _require_compatible(spec, grid, waive):
    if waive:
        return
    rep = check_compatibility(spec, grid)
    if not rep.passed:
        raise HypothesisError(
            f"initial datum violates the boundary compatibility condition "
            f"(residual {rep.residual:.3e} > {rep.tolerance:g})"
        )


# ---------------------------------------------------------------------------
# oracles and post-processing


@dataclass
class OdeTrace:
    t: np.ndarray
    u: np.ndarray
    blowup_time: float | None
    _sol: object = None

    def u_at(self, t) -> np.ndarray:
        return self._sol(t)[0] if self._sol is not None else np.interp(t, self.t, self.u)


def _flat_ode_data(spec: ProblemSpec):
    if not spec.is_flat():
        raise HypothesisError("ODE reduction needs a, b and the kernel constant in space")
    if spec.exponents.l != 1.0:
        raise HypothesisError("ODE reduction needs l = 1")
    from .domain import build_grid

    grid = build_grid(spec.domain, 9)
    cp = compile_problem(spec, grid)
    if not cp.has_kernel or not isinstance(cp.k_time, TemporalConstant):
        raise HypothesisError("ODE reduction needs a time-independent kernel with unit integral")
    kint = float(cp.k_space[0]) * spec.domain.measure
    if abs(kint - 1.0) > 1e-12:
        raise HypothesisError(f"ODE reduction needs int k dy = 1, got {kint}")
    return cp


def ode_reduction_oracle(
    spec: ProblemSpec, u0_const: float, horizon: float, *, threshold: float = 1e8
) -> OdeTrace:
    """Spatially flat solution ``u' = a(t)|Omega| u^(r+p) - b(t) u^q``.

    Adaptive integration at tolerance 1e-10.  With time-independent
    coefficients and a right side positive on ``[u0, inf)`` the blow-up time is
    the quadrature ``int_{u0}^inf du / f(u)``.
    """
    cp = _flat_ode_data(spec)
    e = spec.exponents
    s = e.r + e.p
    A0 = float(cp.a_space[0]) * spec.domain.measure
    B0 = float(cp.b_space[0])
    at, bt = cp.a_time, cp.b_time

    def f(t, y):
        u = max(y[0], 0.0)
        return [A0 * at(t) * u**s - B0 * bt(t) * u**e.q]

    def hit(t, y):
        return y[0] - threshold

    hit.terminal = True
    sol = solve_ivp(f, (0.0, horizon), [u0_const], method="DOP853", rtol=1e-10,
                    atol=1e-12 * max(u0_const, 1e-300), events=hit, dense_output=True)
    T = None
    autonomous = isinstance(at, TemporalConstant) and isinstance(bt, TemporalConstant)
    if autonomous and s > 1 and u0_const > 0:
        fu = lambda u: A0 * u**s - B0 * u**e.q  # noqa: E731
        positive = fu(u0_const) > 0 and (s > e.q or (s == e.q and A0 > B0))
        if positive:
            T = quad(lambda u: 1.0 / fu(u), u0_const, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    if T is None and sol.t_events[0].size:
        te = float(sol.t_events[0][0])
        rate = A0 * at(te)
        T = te + (threshold ** (1 - s) / ((s - 1) * rate) if s > 1 and rate > 0 else 0.0)
    return OdeTrace(sol.t, sol.y[0], T, sol.sol)


def fit_lower_bound_d(result: SolveResult, eig: EigenPair, t0: float, grid: Grid | None = None) -> float:
    """``inf u / (phi e^{-lambda1 t})`` over stored snapshots with ``t >= t0``."""
    snaps = [(t, u) for t, u in result.snapshots if t >= t0]
    if not snaps:
        raise ValueError(f"no snapshots at or after t0={t0}; enable snapshot recording")
    phi = eig.phi
    mask = phi > 0
    if grid is not None:
        m2 = np.zeros_like(mask)
        m2[grid.interior_idx] = True
        mask &= m2
    d = math.inf
    for t, u in snaps:
        ratio = u[mask] / (phi[mask] * math.exp(-eig.lambda1 * t))
        d = min(d, float(ratio.min()))
    return d


def write_trace_csv(path, trace: Trace) -> None:
    """CSV with a header row and 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in zip(*(getattr(trace, c) for c in TRACE_COLUMNS)):
            w.writerow([format(v, ".17g") for v in row])


def read_trace_csv(path) -> Trace:
    tr = Trace()
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for row in rd:
            tr.append(*(float(v) for v in row))
    return tr
