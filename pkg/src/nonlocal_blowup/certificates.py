"""Explicit sub- and supersolution families and their numerical verification.

A :class:`Candidate` names a closed-form family and its parameters.
:func:`make_recipe` computes parameters for which the defining inequalities
hold, and :func:`verify_candidate` evaluates

* the interior operator ``L v = v_t - Lap v - a v^r int v^p + b v^q``,
* the boundary inequality ``v - int k v^l`` on the boundary nodes,
* the initial ordering against ``u0``,

with the sign oriented so that a nonnegative residual means the inequality
holds.  Free constants of a recipe ("A large", "T small") are resolved by
geometric search against :func:`verify_candidate`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import expm_multiply

from .domain import (
    Disc,
    DomainDescriptor,
    Grid,
    Interval,
    build_grid,
    curvature_sum,
    integrate,
    jacobian_bound,
    laplacian_apply,
    laplacian_matrix,
)
from .errors import HypothesisError
from .model import ProblemSpec, compile_problem
from .spectral import (
    EigenPair,
    Normalization,
    enlarged_eigenpair,
    first_eigenpair,
    margin_for_window,
)

FAMILIES = (
    "EigenQuotient",
    "LayerPower",
    "TemporalPower",
    "LayerLinearPower",
    "SelfSimilar",
    "EnlargedEigenExp",
    "EnlargedEigenF",
    "FlatExp",
    "EigenExp",
    "EigenODE",
    "ExactRemark310",
)

RESIDUAL_TOL = 1e-8
SEARCH_STEPS = 60


class Kind(str, enum.Enum):
    SUPERSOLUTION = "Supersolution"
    SUBSOLUTION = "Subsolution"
    EXACT = "ExactSolution"


@dataclass
class Candidate:
    """A closed-form family with parameters, valid on ``t_min <= t <= t_max``."""

    family: str
    params: dict
    kind: Kind
    t_min: float = 0.0
    t_max: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown certificate family {self.family!r}")
        self.kind = Kind(self.kind)
        if not self.t_max > self.t_min >= 0:
            raise ValueError("candidate region must satisfy 0 <= t_min < t_max")

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "kind": self.kind.value,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "region": {"t_min": self.t_min, "t_max": self.t_max},
        }

    @classmethod
    def from_json(cls, d: dict) -> "Candidate":
        region = d.get("region", {})
        return cls(
            d["family"],
            dict(d.get("params", {})),
            Kind(d["kind"]),
            float(region.get("t_min", 0.0)),
            float(region.get("t_max", 1.0)),
        )


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class ResidualReport:
    """Outcome of :func:`verify_candidate`.

    Residuals are oriented: nonnegative means the defining inequality holds.
    ``*_scaled`` divides by the local magnitude (sum of absolute values of the
    terms).  For an exact solution both orientations are checked and the
    reported minimum is ``-max |L v|``.
    """

    family: str
    kind: Kind
    interior_min_residual: float
    interior_min_scaled: float
    boundary_min_residual: float
    boundary_min_scaled: float
    initial_ordering: bool
    initial_min_gap: float
    worst_point: tuple
    boundary_worst_time: float
    n_space: int
    n_time: int
    n_boundary: int
    tolerance: float = RESIDUAL_TOL

    @property
    def interior_ok(self) -> bool:
        return self.interior_min_scaled >= -self.tolerance

    @property
    def boundary_ok(self) -> bool:
        return self.boundary_min_scaled >= -self.tolerance

    @property
    def passed(self) -> bool:
        """Interior and boundary inequalities hold (initial ordering reported separately)."""
        return self.interior_ok and self.boundary_ok

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "kind": self.kind.value,
            "interior_min_residual": self.interior_min_residual,
            "interior_min_scaled": self.interior_min_scaled,
            "boundary_min_residual": self.boundary_min_residual,
            "boundary_min_scaled": self.boundary_min_scaled,
            "initial_ordering": "pass" if self.initial_ordering else "fail",
            "initial_min_gap": self.initial_min_gap,
            "worst_point": {"x": self.worst_point[0], "t": self.worst_point[1]},
            "boundary_worst_time": self.boundary_worst_time,
            "samples": {"space": self.n_space, "time": self.n_time, "boundary": self.n_boundary},
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# geometry helpers


def _distance(x, d: DomainDescriptor) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(d, Interval):
        return np.minimum(x - d.a_end, d.b_end - x)
    return d.radius - x


def _points_at_distance(s_values, d: DomainDescriptor) -> list[float]:
    out = []
    for s in s_values:
        if isinstance(d, Interval):
            if 0 < s < 0.5 * d.measure:
                out += [d.a_end + s, d.b_end - s]
        elif 0 < s < d.radius:
            out.append(d.radius - s)
    return sorted(out)


def _quad_domain(f, d: DomainDescriptor, points=()) -> float:
    """``int_Omega f`` for a function of the node coordinate."""
    if isinstance(d, Interval):
        lo, hi, g = d.a_end, d.b_end, f
    else:
        lo, hi = 0.0, d.radius

        def g(r):
            return f(r) * 2.0 * np.pi * r

    pts = [p for p in points if lo < p < hi]
    edges = [lo] + sorted(set(pts)) + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        val, _ = quad(lambda x: float(g(np.array([x]))[0]), a, b, epsabs=0.0, epsrel=1e-11, limit=200)
        total += val
    return total


def _pos_pow(x, e):
    return np.power(np.clip(x, 0.0, None), e)


# ---------------------------------------------------------------------------
# family evaluators


class _Family:
    """Evaluation interface shared by all families.

    Subclasses provide nodal values, time derivatives and Laplacians.  Fields
    may be returned normalized by ``exp(log_scale(t))`` to keep fast-growing
    supersolutions finite; the operator is assembled with the matching powers.
    """

    analytic = False
    time_independent_profile = False

    def __init__(self, cand: Candidate, spec: ProblemSpec, grid: Grid):
        self.c = cand
        self.P = cand.params
        self.spec = spec
        self.grid = grid
        self.cp = compile_problem(spec, grid)
        self.e = spec.exponents
        self._icache: dict = {}

    # fields on the nodes (normalized)
    def values(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def time_derivative(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, t: float, v: np.ndarray) -> np.ndarray:
        return laplacian_apply(self.grid, v)

    def log_scale(self, t: float) -> float:
        return 0.0

    def value_at(self, x, t: float) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, t: float) -> list[float]:
        return []

    def integral(self, power: float, t: float, weight=None) -> float:
        """``int_Omega w v^power`` of the normalized field."""
        tk = 0.0 if self.time_independent_profile else t
        key = (power, tk, weight is None)
        if key in self._icache:
            return self._icache[key]
        if self.analytic:
            d = self.spec.domain
            if weight is None:
                f = lambda x: _pos_pow(self.value_at(x, tk), power)  # noqa: E731
            else:
                f = lambda x: weight.values_at(x, d) * _pos_pow(self.value_at(x, tk), power)  # noqa: E731
            val = _quad_domain(f, d, self.breakpoints(tk))
        else:
            v = _pos_pow(self.values(tk), power)
            if weight is not None:
                v = v * weight.values(self.grid)
            val = integrate(self.grid, v)
        self._icache[key] = val
        return val

    def interior_samples(self, t: float):
        """Coordinates and terms at interior sample points."""
        idx = self.grid.interior_idx
        v = self.values(t)
        return dict(
            x=self.grid.nodes[idx],
            v=v[idx],
            vt=self.time_derivative(t)[idx],
            lap=self.laplacian(t, v),
            Ip=self.integral(self.e.p, t),
            a=self.cp.a_at(t)[idx],
            b=self.cp.b_at(t)[idx],
        )

    def boundary_values(self, t: float):
        """Boundary value and ``int k v^l`` (both normalized)."""
        vB = self.values(t)[self.grid.boundary_idx]
        if not self.cp.has_kernel:
            return vB, np.zeros_like(vB)
        kint = self.cp.k_time(t) * self.integral(self.e.l, t, weight=self.cp.k_profile)
        return vB, np.full_like(vB, kint)

    def initial_mask(self) -> np.ndarray:
        return np.ones(self.grid.n, dtype=bool)

    def nodal_field(self, t: float) -> np.ndarray:
        """Un-normalized nodal values (may overflow to ``inf``)."""
        with np.errstate(over="ignore"):
            return self.values(t) * math.exp(min(self.log_scale(t), 709.0))


class _Layer(_Family):
    """Families of the form ``g(s, t)`` with ``s`` the boundary distance."""

    analytic = True

    def profile(self, s, t):
        """Return ``(g, g_t, g_s, g_ss)`` at distances ``s``."""
        raise NotImplementedError

    def value_at(self, x, t):
        return self.profile(_distance(x, self.spec.domain), t)[0]

    def values(self, t):
        return self.profile(self.grid.distance_to_boundary(), t)[0]

    def time_derivative(self, t):
        return self.profile(self.grid.distance_to_boundary(), t)[1]

    def laplacian(self, t, v):
        idx = self.grid.interior_idx
        s = self.grid.distance_to_boundary()[idx]
        _, _, gs, gss = self.profile(s, t)
        drift = np.zeros_like(s)
        live = gs != 0
        if np.any(live):
            drift[live] = curvature_sum(s[live], self.spec.domain) * gs[live]
        return gss - drift


class _ExactRemark310(_Layer):
    time_independent_profile = False

    def profile(self, s, t):
        c = self.P["rate"]
        g = np.full(np.shape(s), math.exp(-c * t))
        z = np.zeros_like(g)
        return g, -c * g, z, z


class _FlatExp(_Layer):
    def profile(self, s, t):
        lam = self.P["lambda1"]
        g = np.full(np.shape(s), self.P["amplitude"] * math.exp(-lam * t))
        z = np.zeros_like(g)
        return g, -lam * g, z, z


class _TemporalPower(_Layer):
    def profile(self, s, t):
        beta, eps, T, q = self.P["beta"], self.P["eps"], self.P["T"], self.e.q
        tau = max(T - t, 0.0)
        g = beta * tau ** (1.0 / (1.0 - q)) + eps
        gt = -beta / (1.0 - q) * tau ** (q / (1.0 - q)) if tau > 0 else 0.0
        shape = np.shape(s)
        z = np.zeros(shape)
        return np.full(shape, g), np.full(shape, gt), z, z


class _LayerPower(_Layer):
    time_independent_profile = True

    def profile(self, s, t):
        P = self.P
        eps, om, beta, gam, A = P["eps"], P["omega"], P["beta"], P["gamma"], P["A"]
        s = np.asarray(s, dtype=float)
        se = s + eps
        z = se ** (-gam) - om ** (-gam)
        pos = z > 0
        zp = np.where(pos, z, 1.0)
        k = beta / gam
        g = np.where(pos, zp**k, 0.0) + A
        gs = np.where(pos, -beta * zp ** (k - 1) * se ** (-gam - 1), 0.0)
        gss = np.where(
            pos,
            beta * (beta - gam) * zp ** (k - 2) * se ** (-2 * gam - 2)
            + beta * (gam + 1) * zp ** (k - 1) * se ** (-gam - 2),
            0.0,
        )
        return g, np.zeros_like(g), gs, gss

    def breakpoints(self, t):
        eps, om = self.P["eps"], self.P["omega"]
        s_list = [om - eps] + [eps * 4.0**j for j in range(30) if eps * 4.0**j < om - eps]
        return _points_at_distance(s_list, self.spec.domain)


class _LayerLinearPower(_Layer):
    def profile(self, s, t):
        P = self.P
        delta, eps, gam = P["delta"], P["eps"], P["gamma"]
        X = np.clip(delta - np.asarray(s, dtype=float) - t, 0.0, None)
        g = X**gam + eps
        d1 = np.where(X > 0, gam * X ** (gam - 1), 0.0)
        d2 = np.where(X > 0, gam * (gam - 1) * X ** (gam - 2), 0.0)
        return g, -d1, -d1, d2

    def breakpoints(self, t):
        return _points_at_distance([self.P["delta"] - t], self.spec.domain)


class _SelfSimilar(_Family):
    """``(T - t)^{-gamma} (A^2 - |x - c|^2 / (T - t))_+`` with the analytic operator."""

    analytic = True

    def _rho(self, x):
        d = self.spec.domain
        x = np.asarray(x, dtype=float)
        return np.abs(x - d.center) if isinstance(d, Interval) else np.abs(x)

    def value_at(self, x, t):
        T, A, gam = self.P["T"], self.P["A"], self.P["gamma"]
        tau = T - t
        return tau ** (-gam) * np.clip(A * A - self._rho(x) ** 2 / tau, 0.0, None)

    def values(self, t):
        return self.value_at(self.grid.nodes, t)

    def time_derivative(self, t):
        T, A, gam = self.P["T"], self.P["A"], self.P["gamma"]
        tau = T - t
        xi2 = self._rho(self.grid.nodes) ** 2 / tau
        inside = xi2 < A * A
        return np.where(inside, tau ** (-gam - 1) * (gam * (A * A - xi2) - xi2), 0.0)

    def breakpoints(self, t):
        d = self.spec.domain
        w = self.P["A"] * math.sqrt(self.P["T"] - t)
        if isinstance(d, Interval):
            return [d.center - w, d.center + w]
        return [w]

    def interior_samples(self, t):
        d = self.spec.domain
        T, A, gam = self.P["T"], self.P["A"], self.P["gamma"]
        n = d.dim
        tau = T - t
        # grid nodes strictly inside the support plus a fixed set of similarity points
        xg = self.grid.nodes[self.grid.interior_idx]
        xi_g = self._rho(xg) / math.sqrt(tau)
        xg = xg[xi_g < A]
        xi_s = np.linspace(0.0, A, 42)[:-1]
        if isinstance(d, Interval):
            xs = np.concatenate([d.center - xi_s[1:] * math.sqrt(tau), d.center + xi_s * math.sqrt(tau)])
        else:
            xs = xi_s * math.sqrt(tau)
        x = np.concatenate([xg, xs])
        xi2 = self._rho(x) ** 2 / tau
        V = A * A - xi2
        v = tau ** (-gam) * V
        vt = tau ** (-gam - 1) * (gam * V - xi2)
        lap = np.full_like(x, -2.0 * n * tau ** (-gam - 1))
        Ip = const_C_A(self.e.p, A, n) * tau ** (0.5 * n - gam * self.e.p)
        cp = self.cp
        a = cp.a_profile.values_at(x, d) * cp.a_time(t)
        b = cp.b_profile.values_at(x, d) * cp.b_time(t)
        return dict(x=x, v=v, vt=vt, lap=lap, Ip=Ip, a=a, b=b)

    def initial_mask(self):
        return np.ones(self.grid.n, dtype=bool)


class _EigenQuotient(_Family):
    """``eta e^{mu t} / (c psi + eps)``; fields normalized by ``eta e^{mu t}``."""

    def __init__(self, cand, spec, grid):
        super().__init__(cand, spec, grid)
        psi = first_eigenpair(grid, Normalization.SUP_ONE).phi
        self.w = self.P["scale"] * psi + self.P["eps"]

    def log_scale(self, t):
        return math.log(self.P["eta"]) + self.P["mu"] * t

    def values(self, t):
        return 1.0 / self.w

    def time_derivative(self, t):
        return self.P["mu"] / self.w

    def integral(self, power, t, weight=None):
        v = self.w ** (-power)
        if weight is not None:
            v = v * weight.values(self.grid)
        return integrate(self.grid, v)


class _EigenExp(_Family):
    def __init__(self, cand, spec, grid):
        super().__init__(cand, spec, grid)
        pair = first_eigenpair(grid, Normalization.INTEGRAL_ONE)
        self.lam, self.phi = pair.lambda1, pair.phi

    def values(self, t):
        return self.P["beta"] * self.phi * math.exp(-self.lam * t)

    def time_derivative(self, t):
        return -self.lam * self.values(t)


def _amplitude_time(cp, which: str, t: float, mode: str) -> float:
    """``sup_x`` or ``inf_x`` of a coefficient at time ``t``."""
    space = cp.a_space if which == "a" else cp.b_space
    timef = cp.a_time if which == "a" else cp.b_time
    s = space.max() if mode == "sup" else space.min()
    return float(s * timef(t))


class _EigenODE(_Family):
    """``phi(x) f(t)`` with ``f' + lam f = |Omega| alow(t) f^{r+p}``."""

    def __init__(self, cand, spec, grid):
        super().__init__(cand, spec, grid)
        pair = first_eigenpair(grid, Normalization.SUP_ONE)
        self.lam, self.phi = pair.lambda1, pair.phi
        self._f = {}

    def f(self, t):
        if t in self._f:
            return self._f[t]
        s = self.e.r + self.e.p
        f0, lam = self.P["f0"], self.lam
        omega = self.spec.domain.measure
        Phi, _ = quad(
            lambda tau: _amplitude_time(self.cp, "a", tau, "inf") * math.exp(-lam * (s - 1) * tau),
            0.0,
            t,
            epsabs=1e-13,
            epsrel=1e-11,
        ) if t > 0 else (0.0, 0.0)
        base = f0 ** (1 - s) - (s - 1) * omega * Phi
        if base <= 0:
            raise HypothesisError("EigenODE profile blows up inside the region; f0 too large")
        val = math.exp(-lam * t) * base ** (-1.0 / (s - 1))
        self._f[t] = val
        return val

    def values(self, t):
        return self.phi * self.f(t)

    def time_derivative(self, t):
        s = self.e.r + self.e.p
        f = self.f(t)
        df = -self.lam * f + self.spec.domain.measure * _amplitude_time(self.cp, "a", t, "inf") * f**s
        return self.phi * df


class _EnlargedEigenExp(_Family):
    def __init__(self, cand, spec, grid):
        super().__init__(cand, spec, grid)
        pair = enlarged_eigenpair(grid, self.P["margin"], Normalization.SUP_ONE)
        self.lam, self.phi = pair.lambda1, pair.phi

    def values(self, t):
        return self.P["beta"] * self.phi * math.exp(-self.lam * t)

    def time_derivative(self, t):
        return -self.lam * self.values(t)


class _EnlargedEigenF(_Family):
    """``phi~(x) f(t) exp(-int_0^t blow)`` for the linear-absorption case."""

    def __init__(self, cand, spec, grid):
        super().__init__(cand, spec, grid)
        P = self.P
        pair = enlarged_eigenpair(grid, P["margin"], Normalization.SUP_ONE)
        self.lam = pair.lambda1
        self.phi = pair.phi * (P["d"] * P["eps"])
        self._cache = {}

    def _blow_int(self, t):
        cp = self.cp
        return float(cp.b_space.min() * cp.b_time.integral(t))

    def f(self, t):
        if t in self._cache:
            return self._cache[t]
        P = self.P
        s = self.e.r + self.e.p
        lam = self.lam
        integral = _time_integral_F(self.cp, lam, s, t)
        base = P["B"] - (s - 1) * P["N"] * integral
        if base <= 0:
            raise HypothesisError("EnlargedEigenF profile blows up inside the region; B too small")
        val = math.exp(-lam * t) * base ** (-1.0 / (s - 1))
        self._cache[t] = val
        return val

    def values(self, t):
        return self.phi * self.f(t) * math.exp(-self._blow_int(t))

    def time_derivative(self, t):
        s = self.e.r + self.e.p
        f = self.f(t)
        E = math.exp(-self._blow_int(t))
        abar = _amplitude_time(self.cp, "a", t, "sup")
        blow = _amplitude_time(self.cp, "b", t, "inf")
        df = -self.lam * f + abar * self.P["N"] * E ** (s - 1) * f**s
        return self.phi * (df - blow * f) * E


def _time_integral_F(cp, lam: float, s: float, t: float) -> float:
    """``int_0^t abar(tau) exp[-(s-1)(lam tau + int_0^tau blow)] dtau``."""
    if t <= 0:
        return 0.0
    bmin = float(cp.b_space.min())

    def integrand(tau):
        return _amplitude_time(cp, "a", tau, "sup") * math.exp(
            -(s - 1) * (lam * tau + bmin * cp.b_time.integral(tau))
        )

    val, _ = quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-10, limit=200)
    return val


_EVALUATORS = {
    "EigenQuotient": _EigenQuotient,
    "LayerPower": _LayerPower,
    "TemporalPower": _TemporalPower,
    "LayerLinearPower": _LayerLinearPower,
    "SelfSimilar": _SelfSimilar,
    "EnlargedEigenExp": _EnlargedEigenExp,
    "EnlargedEigenF": _EnlargedEigenF,
    "FlatExp": _FlatExp,
    "EigenExp": _EigenExp,
    "EigenODE": _EigenODE,
    "ExactRemark310": _ExactRemark310,
}


def evaluator(candidate: Candidate, spec: ProblemSpec, grid: Grid) -> _Family:
    return _EVALUATORS[candidate.family](candidate, spec, grid)


def candidate_field(candidate: Candidate, spec: ProblemSpec, grid: Grid, t: float) -> np.ndarray:
    """Nodal values of the candidate at time ``t``."""
    return evaluator(candidate, spec, grid).nodal_field(t)


# ---------------------------------------------------------------------------
# verification


def _scaled(res: np.ndarray, mag: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(np.isinf(mag), np.sign(res), res / np.maximum(mag, 1e-300))
    return np.where(np.isnan(out), -np.inf, out)


def verify_candidate(
    candidate: Candidate,
    spec: ProblemSpec,
    grid: Grid,
    t_grid=None,
    *,
    tolerance: float = RESIDUAL_TOL,
) -> ResidualReport:
    """Evaluate the sub/supersolution inequalities on ``grid x t_grid``.

    ``t_grid`` defaults to 21 equispaced times of the candidate region and
    must lie inside it.
    """
    if t_grid is None:
        t_grid = np.linspace(candidate.t_min, candidate.t_max, 21)
    t_grid = np.asarray(t_grid, dtype=float)
    span = candidate.t_max - candidate.t_min
    if t_grid.min() < candidate.t_min - 1e-12 * span or t_grid.max() > candidate.t_max + 1e-12 * span:
        raise ValueError(
            f"t_grid [{t_grid.min()}, {t_grid.max()}] leaves the candidate region "
            f"[{candidate.t_min}, {candidate.t_max}]"
        )
    fam = evaluator(candidate, spec, grid)
    e = spec.exponents
    kind = candidate.kind
    sign = -1.0 if kind is Kind.SUBSOLUTION else 1.0

    best = (np.inf, np.inf, (math.nan, math.nan), np.inf)  # scaled, raw, point
    bbest = (np.inf, np.inf, math.nan)
    n_space = 0
    n_boundary = 0
    for t in t_grid:
        t = float(t)
        S = fam.interior_samples(t)
        ls = fam.log_scale(t)
        v = np.clip(S["v"], 0.0, None)
        with np.errstate(over="ignore", invalid="ignore"):
            src = S["a"] * v**e.r * S["Ip"] * math.exp(min((e.r + e.p - 1) * ls, 709.0))
            sink = S["b"] * v**e.q * math.exp(min((e.q - 1) * ls, 709.0))
            L = S["vt"] - S["lap"] - src + sink
            mag = np.abs(S["vt"]) + np.abs(S["lap"]) + np.abs(src) + np.abs(sink)
        if kind is Kind.EXACT:
            res = -np.abs(L)
        else:
            res = sign * L
        sc = _scaled(res, mag)
        n_space = max(n_space, sc.size)
        if sc.size:
            i = int(np.argmin(sc))
            if sc[i] < best[0]:
                best = (float(sc[i]), float(res[i]), (float(S["x"][i]), t), float(mag[i]))
            best = (best[0], min(best[1], float(res.min())), best[2], best[3])

        vB, rhs = fam.boundary_values(t)
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = rhs * math.exp(min((e.l - 1) * ls, 709.0))
            bres = vB - rhs
        if kind is Kind.EXACT:
            bres = -np.abs(bres)
        elif kind is Kind.SUBSOLUTION:
            bres = -bres
        bsc = _scaled(bres, np.abs(vB) + np.abs(rhs))
        n_boundary = max(n_boundary, bsc.size)
        if bsc.size and bsc.min() < bbest[0]:
            bbest = (float(bsc.min()), float(bres.min()), t)
        elif bsc.size:
            bbest = (bbest[0], min(bbest[1], float(bres.min())), bbest[2])

    # initial ordering at t = t_min against u0 (only meaningful from t = 0)
    v0 = fam.nodal_field(candidate.t_min)
    u0 = fam.cp.u0
    mask = fam.initial_mask()
    gap_field = (u0 - v0) if kind is Kind.SUBSOLUTION else (v0 - u0)
    if kind is Kind.EXACT:
        gap_field = -np.abs(v0 - u0)
    gap = float(gap_field[mask].min())
    scale = max(1.0, float(np.abs(u0).max()))
    ordering = candidate.t_min == 0 and gap >= -1e-12 * scale if np.isfinite(gap) else gap > 0

    return ResidualReport(
        family=candidate.family,
        kind=kind,
        interior_min_residual=best[1],
        interior_min_scaled=best[0],
        boundary_min_residual=bbest[1],
        boundary_min_scaled=bbest[0],
        initial_ordering=bool(ordering),
        initial_min_gap=gap,
        worst_point=best[2],
        boundary_worst_time=bbest[2],
        n_space=n_space,
        n_time=int(t_grid.size),
        n_boundary=n_boundary,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# closed-form constants


def const_C_eps(beta: float, l: float, eps: float, omega: float) -> float:
    """Bound of the boundary-layer integral ``int_0^omega (s + eps)^{-beta l} ds``."""
    if not 0 < eps < omega:
        raise ValueError("need 0 < eps < omega")
    bl = beta * l
    if bl > 1:
        return eps ** (-(bl - 1)) / (bl - 1)
    if bl < 1:
        return omega ** (1 - bl) / (1 - bl)
    return -math.log(eps)


def const_C_A(p: float, A: float, n: int) -> float:
    """``int_{|z| <= A} (A^2 - |z|^2)^p dz`` in dimension ``n``."""
    if not A > 0:
        raise ValueError("A must be positive")
    if n == 1:
        val, _ = quad(lambda z: (A * A - z * z) ** p, -A, A, epsabs=0.0, epsrel=1e-12)
        return val
    if n == 2:
        val, _ = quad(lambda r: (A * A - r * r) ** p * r, 0.0, A, epsabs=0.0, epsrel=1e-12)
        return 2.0 * math.pi * val
    raise ValueError(f"dimension must be 1 or 2, got {n}")


def layer_D(s, eps: float, omega: float, gamma: float):
    """``D(s) = (s + eps)^{-gamma} / [(s + eps)^{-gamma} - omega^{-gamma}]``."""
    a = (np.asarray(s, dtype=float) + eps) ** (-gamma)
    return a / (a - omega ** (-gamma))


def layer_sbar(eps_bar: float, eps: float, omega: float, gamma: float) -> float:
    """Largest ``s`` with ``D(s) <= 1 + eps_bar``."""
    return (eps_bar / (1.0 + eps_bar)) ** (1.0 / gamma) * omega - eps


def _smooth_step(z):
    """C-infinity transition from 0 (z <= 0) to 1 (z >= 1)."""
    z = np.asarray(z, dtype=float)

    def psi(y):
        out = np.zeros_like(y)
        m = y > 0
        out[m] = np.exp(-1.0 / y[m])
        return out

    return psi(z) / (psi(z) + psi(1.0 - z))


def _cutoff(grid: Grid, omega0: DomainDescriptor, omega1: DomainDescriptor) -> np.ndarray:
    x = grid.nodes
    if isinstance(omega1, Interval):
        left = _smooth_step((x - omega1.a_end) / (omega0.a_end - omega1.a_end))
        right = _smooth_step((omega1.b_end - x) / (omega1.b_end - omega0.b_end))
        return left * right
    return _smooth_step((omega1.radius - x) / (omega1.radius - omega0.radius))


def _strictly_inside(inner: DomainDescriptor, outer: DomainDescriptor) -> bool:
    if type(inner) is not type(outer):
        return False
    if isinstance(inner, Interval):
        return outer.a_end < inner.a_end and inner.b_end < outer.b_end
    return inner.radius < outer.radius


def lower_bound_c1(
    spec: ProblemSpec,
    omega0: DomainDescriptor,
    omega1: DomainDescriptor,
    C: float,
    T: float,
    *,
    rho: float | None = None,
    run=None,
    n: int = 201,
    times: int = 64,
) -> float:
    """Initial level ``c1`` forcing ``u >= C`` on ``omega0 x [0, T]``.

    Solves the Dirichlet heat problem on ``omega1`` from a smooth cutoff that
    equals 1 on ``omega0`` and returns ``C e^{rho T} / inf y`` when ``q >= 1``
    and ``(C + 1) e^{m T} / inf y`` when ``q < 1``.  ``rho`` (or ``m``) is
    taken from ``rho`` if given, else from the sup-norm envelope of ``run``
    (a :class:`SolveResult`) and the sup of ``b`` on ``[0, T]``, else 0.
    """
    if not (_strictly_inside(omega0, omega1) and _strictly_inside(omega1, spec.domain)):
        raise ValueError("need omega0 compactly inside omega1 compactly inside the domain")
    if not T > 0:
        raise ValueError("T must be positive")
    q = spec.exponents.q
    if rho is None:
        if run is not None:
            sup_u = float(np.max(run.traces.arrays()["sup_norm"]))
            cp = compile_problem(spec, build_grid(spec.domain, 65))
            sup_b = max(_amplitude_time(cp, "b", t, "sup") for t in np.linspace(0.0, T, 101))
            m = max(sup_u, sup_b)
            rho = m**q if q >= 1 else m
        else:
            rho = 0.0
    g1 = build_grid(omega1, n)
    chi = _cutoff(g1, omega0, omega1)
    Lap = laplacian_matrix(g1)
    y = expm_multiply(Lap, chi[g1.interior_idx], start=0.0, stop=T, num=times + 1, endpoint=True)[1:]
    full = np.zeros((y.shape[0], g1.n))
    full[:, g1.interior_idx] = y
    inner = _distance_inside(g1.nodes, omega0)
    inf_y = float(full[:, inner].min())
    if inf_y < 1e-12:
        raise ValueError(f"inf y = {inf_y:.3e} below 1e-12; margins too thin or T too large")
    if q >= 1:
        return C * math.exp(rho * T) / inf_y
    return (C + 1.0) * math.exp(rho * T) / inf_y


def _distance_inside(x, d: DomainDescriptor) -> np.ndarray:
    if isinstance(d, Interval):
        return (x >= d.a_end) & (x <= d.b_end)
    return x <= d.radius


# ---------------------------------------------------------------------------
# recipes


def _sample_times(horizon: float, samples: int = 201) -> np.ndarray:
    return np.linspace(0.0, horizon, samples)


def _sup_M(spec: ProblemSpec, grid: Grid, horizon: float) -> float:
    """``max(sup a, sup k)`` on the 4x refined grid over ``[0, horizon]``."""
    cp = compile_problem(spec, grid.refined(4))
    ts = _sample_times(horizon)
    sa = max(float(cp.a_space.max()) * cp.a_time(t) for t in ts)
    sk = 0.0
    if cp.has_kernel:
        sk = max(float(cp.k_space.max()) * cp.k_time(t) for t in ts)
    return max(sa, sk)


def _inf_b(spec: ProblemSpec, grid: Grid, horizon: float) -> float:
    cp = compile_problem(spec, grid.refined(4))
    return min(float(cp.b_space.min()) * cp.b_time(t) for t in _sample_times(horizon))


def _refined_gradient_sq(grid: Grid, f: np.ndarray, factor: int = 4):
    """``|grad f|^2`` by central differences on a cubic-spline refinement."""
    fine = grid.refined(factor)
    spline = CubicSpline(grid.nodes, f)
    ff = spline(fine.nodes)
    g = np.gradient(ff, fine.h)
    return fine, ff, g * g


def _require(cond: bool, message: str):
    if not cond:
        raise HypothesisError(message)


def _search_verify(make, spec, grid, steps=SEARCH_STEPS, t_count=11):
    """Run ``make(i)`` for ``i = 0, 1, ...`` until the candidate verifies."""
    last = None
    for i in range(steps):
        cand = make(i)
        if cand is None:
            continue
        rep = verify_candidate(cand, spec, grid, np.linspace(cand.t_min, cand.t_max, t_count))
        if rep.passed:
            return cand
        last = rep
    detail = "" if last is None else (
        f"; last interior {last.interior_min_scaled:.3e}, boundary {last.boundary_min_scaled:.3e}"
    )
    raise HypothesisError(f"no parameters found after {steps} search steps{detail}")


def _recipe_exact(spec, grid, eig, opts):
    fx = [spec.a, spec.b, spec.k]
    _require(
        all(getattr(c, "tag", None) == "Remark310" for c in fx),
        "ExactRemark310 needs the Remark310 fixture for a, b and k",
    )
    rate = spec.a.remark310_rate(spec.fixture_context())
    return Candidate("ExactRemark310", {"rate": rate}, Kind.EXACT, 0.0, opts["horizon"])


def _recipe_flat_exp(spec, grid, eig, opts):
    e = spec.exponents
    _require(min(e.q, e.l) > 1, "FlatExp needs min(q, l) > 1")
    cp = compile_problem(spec, grid)
    _require(float(np.abs(cp.a_space).max()) == 0.0, "FlatExp needs a = 0")
    _require(np.ptp(cp.b_space) == 0 and cp.b_space[0] > 0, "FlatExp needs a positive spatially constant b")
    rho_b = getattr(cp.b_time, "rho", None)
    _require(rho_b is not None and rho_b > 0, "FlatExp needs b = b0 exp(lambda (q-1) t)")
    lam = rho_b / (e.q - 1)
    b0 = float(cp.b_space[0])
    if cp.has_kernel:
        rho_k = getattr(cp.k_time, "rho", None)
        _require(
            rho_k is not None and math.isclose(rho_k, lam * (e.l - 1), rel_tol=1e-12),
            "FlatExp needs k = k0 exp(lambda (l-1) t) with the rate of b",
        )
        k0 = float(cp.k_space.max())
        bound = (b0 / lam) ** ((e.l - 1) / (e.q - 1)) / spec.domain.measure
        _require(k0 <= bound, f"FlatExp needs k0 <= {bound:.6g}, got {k0}")
    amp = (lam / b0) ** (1.0 / (e.q - 1))
    return Candidate("FlatExp", {"amplitude": amp, "lambda1": lam}, Kind.SUPERSOLUTION, 0.0, opts["horizon"])


def _recipe_eigen_exp(spec, grid, eig, opts):
    e = spec.exponents
    _require(e.p >= 1 and e.r >= e.q > 1, "EigenExp needs p >= 1 and r >= q > 1")
    cp = compile_problem(spec, grid)
    _require(not cp.has_kernel, "EigenExp needs k = 0")
    _require(np.ptp(cp.a_space) == 0 and np.ptp(cp.b_space) == 0, "EigenExp needs a and b constant in space")
    _require(float(cp.b_space[0]) > 0, "EigenExp needs b > 0")
    pair = first_eigenpair(grid, Normalization.INTEGRAL_ONE)
    H = opts["horizon"]
    s = e.r + e.p - e.q
    ts = _sample_times(H)
    Gamma = max(
        _amplitude_time(cp, "a", t, "sup") * math.exp(-pair.lambda1 * s * t) / _amplitude_time(cp, "b", t, "inf")
        for t in ts
    )
    phi = pair.phi
    denom = Gamma * phi.max() ** (e.r - e.q) * integrate(grid, phi**e.p)
    beta = 0.5 * float(1.0 / denom) ** (1.0 / s) if denom > 0 else 1.0
    beta = opts.get("beta", beta)
    return Candidate(
        "EigenExp", {"beta": beta, "lambda1": pair.lambda1, "Gamma": Gamma}, Kind.SUPERSOLUTION, 0.0, H
    )


def _recipe_eigen_ode(spec, grid, eig, opts):
    e = spec.exponents
    s = e.r + e.p
    _require(e.r >= 1, "EigenODE needs r >= 1 (sup-normalized eigenfunction bound)")
    cp = compile_problem(spec, grid)
    _require(not cp.has_kernel, "EigenODE needs k = 0")
    _require(np.ptp(cp.a_space) == 0, "EigenODE needs a constant in space")
    pair = first_eigenpair(grid, Normalization.SUP_ONE)
    H = opts["horizon"]
    lam = pair.lambda1
    Phi, _ = quad(
        lambda tau: _amplitude_time(cp, "a", tau, "inf") * math.exp(-lam * (s - 1) * tau), 0.0, H, epsrel=1e-10
    )
    if Phi > 0:
        f0 = (2.0 * (s - 1) * spec.domain.measure * Phi) ** (-1.0 / (s - 1))
    else:
        f0 = 1.0
    f0 = min(f0, opts.get("f0", f0))
    return Candidate("EigenODE", {"f0": f0, "lambda1": lam}, Kind.SUPERSOLUTION, 0.0, H)


def _recipe_eigen_quotient(spec, grid, eig, opts):
    e = spec.exponents
    H = opts["horizon"]
    r, p, q, l = e.exact()
    if max(r + p, l) <= 1:
        branch = "i"
    elif l <= 1 and 1 < r + p < q:
        branch = "ii"
    else:
        raise HypothesisError("EigenQuotient needs max(r+p, l) <= 1, or l <= 1 with 1 < r+p < q")
    M = _sup_M(spec, grid, H)
    bmin = _inf_b(spec, grid, H)
    if branch == "ii":
        _require(bmin > 0, "EigenQuotient branch with 1 < r+p < q needs b > 0")
    pair = first_eigenpair(grid, Normalization.SUP_ONE)
    lam = pair.lambda1
    fine, psi_f, grad2 = _refined_gradient_sq(grid, pair.phi)
    u0_sup = float(compile_problem(spec, grid).u0.max())

    best = None
    for k in range(0, 41):
        c = 2.0 ** (k / 2.0)
        for j in range(1, 40):
            eps = 1.0 - 2.0 ** (-j / 4.0) if j < 20 else 2.0 ** (-(j - 19))
            if not 0 < eps < 1:
                continue
            w = c * psi_f + eps
            if M * integrate(fine, w ** (-e.l)) > 1.0:
                continue
            # boundary layer of 1/w must be resolved by the grid
            if eps / (c * math.sqrt(grad2.max())) < 2.0 * grid.h:
                continue
            grad_term = float((2.0 * c * c * grad2 / w**2).max())
            if branch == "i":
                src = M * float((w ** (1 - e.r)).max()) * integrate(fine, w ** (-e.p))
            else:
                src = 0.0
            mu0 = lam + grad_term + src
            if best is None or mu0 < best[0]:
                best = (mu0, c, eps)
    _require(best is not None, "EigenQuotient: no (scale, eps) with M int (phi+eps)^-l <= 1 resolved by the grid")
    mu0, c, eps = best
    w = c * psi_f + eps
    eta = max(u0_sup * float(w.max()), 1.0)
    if branch == "ii":
        tail = (M / bmin) * float((w ** (e.q - e.r)).max()) * integrate(fine, w ** (-e.p))
        eta = max(eta, tail ** (1.0 / (e.q - e.r - e.p)))

    def make(i):
        mu = mu0 * (1.0 + 0.05 * 2.0**i) + 0.05 * 2.0**i
        return Candidate(
            "EigenQuotient",
            {"eta": eta, "mu": mu, "eps": eps, "scale": c, "M": M, "branch": branch},
            Kind.SUPERSOLUTION,
            0.0,
            H,
        )

    return _search_verify(make, spec, grid)


def _recipe_layer_power(spec, grid, eig, opts):
    e = spec.exponents
    r, p, q, l = e.exact()
    _require(1 < l < (q + 1) / 2 and max(r + p, 2 * p + 1) < q, "LayerPower needs 1 < l < (q+1)/2 and max(r+p, 2p+1) < q")
    H = opts["horizon"]
    bmin = _inf_b(spec, grid, H)
    _require(bmin > 0, "LayerPower needs b > 0")
    M = _sup_M(spec, grid, H)
    lo = 2.0 / (e.q - 1)
    hi = min(1.0 / e.p, 1.0 / (e.l - 1))
    _require(lo < hi, f"LayerPower: empty beta window ({lo}, {hi})")
    beta = opts.get("beta", 0.5 * (lo + hi))
    gam = beta / 4.0
    delta = min(0.5 * spec.domain.inradius, 0.99)
    omega = 0.9 * delta
    Jbar = jacobian_bound(spec.domain)
    # interior level: b A^q >= 2^p M A^r (A^p |Omega| + Jbar omega^{1 - beta p} / (1 - beta p))
    A = max(1.0, float(compile_problem(spec, grid).u0.max()))
    for _ in range(SEARCH_STEPS):
        rhs = 2.0**e.p * M * A**e.r * (A**e.p * spec.domain.measure + Jbar * omega ** (1 - beta * e.p) / (1 - beta * e.p))
        if bmin * A**e.q >= rhs:
            break
        A *= 2.0
    state = {"A": A, "eps": 0.5 * omega}

    def make(i):
        if i:
            if state["eps"] > 1e-6 * omega:
                state["eps"] *= 0.5
            else:
                state["A"] *= 2.0
                state["eps"] = 0.5 * omega
        return Candidate(
            "LayerPower",
            {"eps": state["eps"], "omega": omega, "beta": beta, "gamma": gam, "A": state["A"], "delta": delta, "M": M},
            Kind.SUPERSOLUTION,
            0.0,
            H,
        )

    return _search_verify(make, spec, grid)


def _recipe_temporal_power(spec, grid, eig, opts):
    e = spec.exponents
    r, p, q, l = e.exact()
    _require(q < min(r + p, 1) and l > 1, "TemporalPower needs q < min(r+p, 1) and l > 1")
    H = opts["horizon"]
    T = opts.get("T", H)
    b0 = _inf_b(spec, grid, H)
    _require(b0 > 0, "TemporalPower needs b > 0 on the horizon")
    beta0 = (0.5 * b0 * (1 - e.q)) ** (1.0 / (1 - e.q))

    def make(i):
        beta = beta0 * 0.5**i
        eps = 0.1 * beta * T ** (1.0 / (1 - e.q))
        return Candidate(
            "TemporalPower", {"beta": beta, "eps": eps, "T": T}, Kind.SUPERSOLUTION, 0.0, H
        )

    return _search_verify(make, spec, grid)


def _recipe_layer_linear_power(spec, grid, eig, opts):
    e = spec.exponents
    r, p, q, l = e.exact()
    _require(r >= q and (q + 1) / 2 < l <= 1, "LayerLinearPower needs r >= q and (q+1)/2 < l <= 1")
    H = opts["horizon"]
    b0 = _inf_b(spec, grid, H)
    _require(b0 > 0, "LayerLinearPower needs b > 0")
    M = _sup_M(spec, grid, H)
    lo = 2.0 / (1 - e.q)
    hi = 1.0 / (1 - e.l) if e.l < 1 else 3.0 * lo
    _require(lo < hi, f"LayerLinearPower: empty gamma window ({lo}, {hi})")
    gam = opts.get("gamma", 0.5 * (lo + hi))
    Jbar = jacobian_bound(spec.domain)
    dmax = ((gam * e.l + 1) / (2 * M * Jbar)) ** (1.0 / (gam * (e.l - 1) + 1)) if M > 0 else 1.0
    delta0 = min(0.9 * dmax, 0.5 * spec.domain.inradius, opts.get("delta", 1.0))

    def make(i):
        delta = delta0 * 0.5**i
        t0 = 0.5 * delta
        eps = 0.5 * ((delta - t0) ** gam / (2 * max(M, 1e-300) * spec.domain.measure)) ** (1.0 / e.l)
        return Candidate(
            "LayerLinearPower",
            {"delta": delta, "eps": eps, "gamma": gam, "t0": t0, "M": M},
            Kind.SUPERSOLUTION,
            0.0,
            t0,
        )

    return _search_verify(make, spec, grid)


def self_similar_gamma(n: int, r: float, p: float, q: float, factor: float = 1.1) -> float:
    """``factor * max(n / [2 (r+p-q)], (n+2) / [2 (r+p-1)])``."""
    return factor * max(n / (2.0 * (r + p - q)), (n + 2) / (2.0 * (r + p - 1)))


def _recipe_self_similar(spec, grid, eig, opts):
    e = spec.exponents
    r, p, q, l = e.exact()
    _require(r + p > max(q, 1), "SelfSimilar needs r+p > max(q, 1)")
    H = opts["horizon"]
    cp = compile_problem(spec, grid)
    a0 = min(_amplitude_time(cp, "a", t, "inf") for t in _sample_times(H))
    _require(a0 > 0, "SelfSimilar needs a >= a0 > 0 on the horizon")
    n = spec.domain.dim
    gam = self_similar_gamma(n, e.r, e.p, e.q)
    A = 3.0 * math.sqrt(n)
    theta2 = (gam + 0.5) / (gam + 1.0)
    T0 = 0.99 * min(1.0, H, (spec.domain.inradius / A) ** 2)

    def make(i):
        T = T0 * 0.5**i
        return Candidate(
            "SelfSimilar",
            {"gamma": gam, "A": A, "theta2": theta2, "T": T},
            Kind.SUBSOLUTION,
            0.0,
            0.99 * T,
        )

    return _search_verify(make, spec, grid)


def _discrete_window_pair(grid: Grid, lo: float, hi: float) -> EigenPair:
    """Enlarged eigenpair whose discrete eigenvalue lies in ``(lo, hi)``."""
    margin = margin_for_window(grid, lo, hi)
    pair = enlarged_eigenpair(grid, margin)
    cells = round(pair.margin / grid.h)
    for _ in range(SEARCH_STEPS):
        if lo < pair.lambda1 < hi:
            return pair
        cells += 1 if pair.lambda1 >= hi else -1
        if cells < 1:
            break
        pair = enlarged_eigenpair(grid, cells * grid.h)
    raise HypothesisError(f"no cell-aligned enlarged domain has its eigenvalue in ({lo:.6g}, {hi:.6g})")


def _profile_for(spec, grid, H, names, opts):
    from .profile import verify_profile_flags

    prof = opts.get("profile")
    if prof is None:
        lam = first_eigenpair(grid).lambda1
        prof = verify_profile_flags(spec, names, H, grid=grid, lambda1=lam)
    for nme in names:
        entry = prof.entries.get(nme)
        _require(entry is not None and entry.holds, f"hypothesis {nme} does not hold on the horizon")
    return prof


def _recipe_enlarged_eigen_exp(spec, grid, eig, opts):
    e = spec.exponents
    r, p, q, l = e.exact()
    _require(l > 1 and 1 < q < r + p, "EnlargedEigenExp needs l > 1 and 1 < q < r+p")
    H = opts["horizon"]
    prof = _profile_for(spec, grid, H, ["k_integral_sigma", "b_over_a"], opts)
    Ak = prof.entries["k_integral_sigma"].evidence
    Bw = prof.entries["b_over_a"].evidence
    A, sigma = float(Ak["A"]), float(Ak["sigma"])
    B, omega = float(Bw["B"]), float(Bw["omega"])
    lam1 = first_eigenpair(grid).lambda1
    s = e.r + e.p - e.q
    lo = max(omega / s, sigma / (e.l - 1), 0.0)
    _require(lo < lam1, f"EnlargedEigenExp: empty eigenvalue window ({lo:.6g}, {lam1:.6g})")
    pair = _discrete_window_pair(grid, lo, lam1)
    phi = pair.phi
    d = 0.99 * float(phi.min())
    bounds = []
    denom = float((phi ** (e.r - e.q)).max()) * integrate(grid, phi**e.p)
    if math.isfinite(B) and denom > 0:
        bounds.append((B / denom) ** (1.0 / s))
    if A > 0:
        bounds.append((d / A) ** (1.0 / (e.l - 1)))
    beta = 0.5 * min(bounds) if bounds else 1.0
    beta = min(beta, opts.get("beta", beta))
    return Candidate(
        "EnlargedEigenExp",
        {
            "beta": beta,
            "margin": pair.margin,
            "lambda_tilde": pair.lambda1,
            "d": d,
            "A": A,
            "sigma": sigma,
            "B": B,
            "omega": omega,
        },
        Kind.SUPERSOLUTION,
        0.0,
        H,
    )


def _recipe_enlarged_eigen_f(spec, grid, eig, opts):
    e = spec.exponents
    r, p, q, l = e.exact()
    _require(q == 1 and min(r + p, l) > 1, "EnlargedEigenF needs q = 1 and min(r+p, l) > 1")
    H = opts["horizon"]
    prof = _profile_for(spec, grid, H, ["q1_a_integral", "q1_k_growth"], opts)
    sigma = float(prof.entries["q1_a_integral"].evidence["sigma"])
    ev = prof.entries["q1_k_growth"].evidence
    gk, K = float(ev["gamma"]), float(ev["K"])
    lam1 = first_eigenpair(grid).lambda1
    lo = max(sigma, gk, 0.0)
    _require(lo < lam1, f"EnlargedEigenF: empty eigenvalue window ({lo:.6g}, {lam1:.6g})")
    pair = _discrete_window_pair(grid, lo, lam1)
    d = 1.01 * pair.ratio_d
    eps = (K * d**e.l) ** (-1.0 / (e.l - 1)) if K > 0 else 1.0
    eps = min(eps, opts.get("eps", eps))
    phi = pair.phi * d * eps
    N = float((phi ** (e.r - 1)).max()) * integrate(grid, phi**e.p)
    s = e.r + e.p
    cp = compile_problem(spec, grid)
    B = 1.0 + (s - 1) * N * _time_integral_F(cp, pair.lambda1, s, H)
    return Candidate(
        "EnlargedEigenF",
        {"margin": pair.margin, "lambda_tilde": pair.lambda1, "d": d, "eps": eps, "N": N, "B": B, "horizon": H},
        Kind.SUPERSOLUTION,
        0.0,
        H,
    )


_RECIPES = {
    "EigenQuotient": _recipe_eigen_quotient,
    "LayerPower": _recipe_layer_power,
    "TemporalPower": _recipe_temporal_power,
    "LayerLinearPower": _recipe_layer_linear_power,
    "SelfSimilar": _recipe_self_similar,
    "EnlargedEigenExp": _recipe_enlarged_eigen_exp,
    "EnlargedEigenF": _recipe_enlarged_eigen_f,
    "FlatExp": _recipe_flat_exp,
    "EigenExp": _recipe_eigen_exp,
    "EigenODE": _recipe_eigen_ode,
    "ExactRemark310": _recipe_exact,
}


def make_recipe(
    family: str,
    spec: ProblemSpec,
    grid: Grid,
    eig: EigenPair | None = None,
    options: dict | None = None,
) -> Candidate:
    """Parameters of ``family`` for which the certificate inequalities hold.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    eig : EigenPair, optional
        Unused beyond validation; eigenpairs are recomputed on ``grid`` so that
        the discrete eigen-relation holds exactly.
    options : dict, optional
        ``horizon`` (default 1.0) bounds the time region; ``profile`` supplies
        a precomputed hypothesis report; family-specific overrides such as
        ``beta``, ``T``, ``gamma``, ``delta``.

    Raises
    ------
    HypothesisError
        Hypotheses of the construction fail or the feasible window is empty.
    """
    if family not in _RECIPES:
        raise ValueError(f"unknown certificate family {family!r}")
    opts = dict(options or {})
    opts.setdefault("horizon", 1.0)
    if not opts["horizon"] > 0:
        raise ValueError("horizon must be positive")
    if eig is not None and eig.phi.size != grid.n:
        raise ValueError("eigenpair does not belong to the grid")
    return _RECIPES[family](spec, grid, eig, opts)
