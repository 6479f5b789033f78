"""Finite-horizon checks of the coefficient hypotheses used by the regime classifier.

Conditions stated for ``t -> infinity`` cannot be decided numerically.  Each
check samples the coefficients on ``[0, horizon]`` and labels the outcome:

* ``HoldsOnHorizon`` -- the condition (or its limit trend on the tail
  ``[horizon/2, horizon]``) holds on every sample,
* ``FailsAtSample`` -- a sample violates it; ``where`` holds ``(t, x)``,
* ``AssertedByUser`` -- divergence-type conditions whose finite-horizon trend
  is consistent with divergence, and anything the caller asserts outright.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .domain import Grid, build_grid
from .model import ProblemSpec, compile_problem
from .spectral import first_eigenpair


class Status(str, enum.Enum):
    HOLDS_ON_HORIZON = "HoldsOnHorizon"
    FAILS_AT_SAMPLE = "FailsAtSample"
    ASSERTED_BY_USER = "AssertedByUser"


HYPOTHESES = {
    "coefficients_nonnegative": "a, b, k >= 0 on the closed domain",
    "b_positive": "b(x,t) > 0 for all x and t >= 0",
    "b_initial_positive": "inf_x b(x,0) > 0",
    "k_lower_initial": "k(x,y,t) >= k0 > 0 for 0 < t < t0",
    "a_lower_initial": "a(x,t) >= a0 > 0 for 0 < t < t1",
    "q1_a_integral": "int_0^inf abar(t) exp[-(r+p-1)(sigma t + int_0^t blow)] dt < inf, sigma < lambda1",
    "q1_k_growth": "int k dy <= K exp[(l-1)(gamma t + int_0^t blow)], gamma < lambda1",
    "q1_a_divergent": "int_0^inf alow(t) exp[-(r+p-1)(lambda1 t + int_0^t bbar)] dt = inf",
    "q1_k_divergent": "int_0^inf klow(t) exp[-(l-1)(lambda1 t + int_0^t bbar)] dt = inf",
    "b_eps_envelope": "b <= eps(t) exp[lambda1 (q-1) t] with eps >= 0 integrable",
    "eps_vanishes": "eps(t) -> 0 as t -> inf",
    "k_growth_lower": "k >= D exp[lambda1 (l-1) t], D > 0, for large t",
    "k_integral_sigma": "int k dy <= A exp(sigma t), sigma < lambda1 (l-1)",
    "b_over_a": "b >= B a exp(-omega t), B > 0, omega < lambda1 (r+p-q)",
    "gamma_unbounded": "alow(t) = gamma(t) exp[lambda1 (r+p-q) t] bbar(t) with gamma -> inf",
    "a_divergent": "int_0^inf alow(t) exp[-lambda1 (r+p-1) t] dt = inf",
}


@dataclass
class HypothesisEntry:
    name: str
    status: Status
    horizon: float
    evidence: dict
    samples: dict
    where: tuple | None = None

    @property
    def holds(self) -> bool:
        return self.status in (Status.HOLDS_ON_HORIZON, Status.ASSERTED_BY_USER)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "status": self.status.value,
            "horizon": self.horizon,
            "evidence": self.evidence,
            "samples": self.samples,
        }
        if self.where is not None:
            out["where"] = list(self.where)
        return out


@dataclass
class ProfileReport:
    entries: dict[str, HypothesisEntry] = field(default_factory=dict)
    horizon: float = 0.0
    lambda1: float = float("nan")

    def holds(self, name: str) -> bool:
        e = self.entries.get(name)
        return e is not None and e.holds

    def without(self, name: str) -> "ProfileReport":
        entries = {k: v for k, v in self.entries.items() if k != name}
        return ProfileReport(entries, self.horizon, self.lambda1)

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "lambda1": self.lambda1,
            "entries": {k: v.to_json() for k, v in sorted(self.entries.items())},
        }


def asserted(names: Iterable[str], horizon: float = 0.0) -> ProfileReport:
    """Profile in which every named hypothesis is taken on trust."""
    rep = ProfileReport(horizon=horizon)
    for n in names:
        if n not in HYPOTHESES:
            raise KeyError(f"unknown hypothesis {n!r}")
        rep.entries[n] = HypothesisEntry(n, Status.ASSERTED_BY_USER, horizon, {}, {})
    return rep


class _Samples:
    """Envelopes of the coefficients on a time grid."""

    def __init__(self, spec: ProblemSpec, grid: Grid, horizon: float, samples: int):
        cp = compile_problem(spec, grid)
        self.grid = grid
        self.t = np.linspace(0.0, horizon, samples)
        self.a = np.array([cp.a_at(t) for t in self.t])
        self.b = np.array([cp.b_at(t) for t in self.t])
        self.has_kernel = cp.has_kernel
        kq = np.array([cp.kernel_quad(t) for t in self.t])  # (T, nb, n)
        krows = np.array([cp.kernel_rows(t) for t in self.t])
        self.kint = kq.sum(axis=2).max(axis=1)
        self.klow = krows.min(axis=(1, 2)) if krows.size else np.zeros_like(self.t)
        self.kmin_all = self.klow
        self.abar, self.alow = self.a.max(axis=1), self.a.min(axis=1)
        self.bbar, self.blow = self.b.max(axis=1), self.b.min(axis=1)
        self.int_blow = cumulative_trapezoid(self.blow, self.t, initial=0.0)
        self.int_bbar = cumulative_trapezoid(self.bbar, self.t, initial=0.0)
        self.tail = self.t >= 0.5 * horizon
        self.desc = {"times": samples, "horizon": horizon, "nodes": grid.n}


def _log(f):
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(f, 1e-300))


def _max_tail_slope(t, f, tail) -> float:
    """Largest local log-slope of ``f`` on the tail samples."""
    lf = _log(f[tail])
    return float(np.max(np.diff(lf) / np.diff(t[tail])))


def _loglog_tail_slope(t, f, tail) -> float:
    """Slope of ``log f`` against ``log(1 + t)`` between the tail endpoints."""
    tt = t[tail]
    ff = f[tail]
    if ff[0] <= 0 or ff[-1] <= 0:
        return -math.inf
    return float((math.log(ff[-1]) - math.log(ff[0])) / (math.log1p(tt[-1]) - math.log1p(tt[0])))


def _entry(S: _Samples, name, ok, evidence, where=None, status_if_ok=Status.HOLDS_ON_HORIZON):
    status = status_if_ok if ok else Status.FAILS_AT_SAMPLE
    return HypothesisEntry(
        name, status, float(S.t[-1]), evidence, dict(S.desc), None if ok else where
    )


def _argmin_where(S: _Samples, values_tx: np.ndarray):
    i, j = np.unravel_index(np.argmin(values_tx), values_tx.shape)
    return (float(S.t[i]), float(S.grid.nodes[j]))


def _divergence_entry(S: _Samples, name: str, integrand: np.ndarray) -> HypothesisEntry:
    total = float(trapezoid(integrand, S.t))
    slope = _loglog_tail_slope(S.t, integrand, S.tail)
    # integrand decaying no faster than 1/t on the tail: divergent trend
    trend = slope >= -1.0 and integrand[S.tail].min() > 0
    ev = {"horizon_integral": total, "tail_loglog_slope": slope, "divergent_trend": bool(trend)}
    return _entry(S, name, trend, ev, (float(S.t[-1]), None), status_if_ok=Status.ASSERTED_BY_USER)


def _check(name: str, spec: ProblemSpec, S: _Samples, lam: float, opts: dict) -> HypothesisEntry:
    e = spec.exponents
    r, p, q, l = e.r, e.p, e.q, e.l
    t = S.t

    if name == "coefficients_nonnegative":
        lows = [S.a.min(), S.b.min(), S.kmin_all.min() if S.has_kernel else 0.0]
        ok = min(lows) >= 0
        return _entry(S, name, ok, {"min_a": float(lows[0]), "min_b": float(lows[1]), "min_k": float(lows[2])})

    if name == "b_positive":
        ok = S.b.min() > 0
        return _entry(S, name, ok, {"inf_b": float(S.b.min())}, _argmin_where(S, S.b))

    if name == "b_initial_positive":
        ok = S.b[0].min() > 0
        return _entry(S, name, ok, {"inf_b0": float(S.b[0].min())}, (0.0, float(S.grid.nodes[np.argmin(S.b[0])])))

    if name in ("k_lower_initial", "a_lower_initial"):
        t0 = float(opts.get("t0", 0.1 * t[-1]))
        win = (t > 0) & (t <= t0)
        if name == "k_lower_initial":
            env = S.klow if S.has_kernel else np.zeros_like(t)
        else:
            env = S.alow
        low = float(env[win].min())
        i = int(np.flatnonzero(win)[np.argmin(env[win])])
        key = "k0" if name == "k_lower_initial" else "a0"
        return _entry(S, name, low > 0, {key: low, "t0": t0}, (float(t[i]), None))

    if name == "q1_a_integral":
        if r + p <= 1:
            return _entry(S, name, False, {"reason": "requires r + p > 1"}, (0.0, None))
        integrand0 = S.abar * np.exp(-(r + p - 1) * S.int_blow)
        if integrand0[S.tail].max() <= 0:
            sigma_min = -math.inf
        else:
            sigma_min = _max_tail_slope(t, integrand0, S.tail) / (r + p - 1)
        ok = sigma_min < lam
        sigma = sigma_min + 0.25 * (lam - sigma_min) if math.isfinite(sigma_min) else 0.0
        if ok:
            tot = float(trapezoid(integrand0 * np.exp(-(r + p - 1) * sigma * t), t))
        else:
            tot = math.inf
        return _entry(S, name, ok, {"sigma": sigma, "sigma_min": sigma_min, "horizon_integral": tot}, (float(t[-1]), None))

    if name == "q1_k_growth":
        if l <= 1:
            return _entry(S, name, False, {"reason": "requires l > 1"}, (0.0, None))
        ratio = S.kint * np.exp(-(l - 1) * S.int_blow)
        if ratio.max() <= 0:
            return _entry(S, name, True, {"gamma": 0.0, "K": 0.0})
        gamma = max(0.0, _max_tail_slope(t, ratio, S.tail)) / (l - 1)
        K = float((ratio * np.exp(-(l - 1) * gamma * t)).max())
        return _entry(S, name, gamma < lam, {"gamma": gamma, "K": K}, (float(t[-1]), None))

    if name == "q1_a_divergent":
        integrand = S.alow * np.exp(-(r + p - 1) * (lam * t + S.int_bbar))
        return _divergence_entry(S, name, integrand)

    if name == "q1_k_divergent":
        klow = S.klow if S.has_kernel else np.zeros_like(t)
        integrand = klow * np.exp(-(l - 1) * (lam * t + S.int_bbar))
        return _divergence_entry(S, name, integrand)

    eps = np.maximum(S.bbar, 0.0) * np.exp(-lam * (q - 1) * t)

    if name == "b_eps_envelope":
        total = float(trapezoid(eps, t))
        if eps.max() <= 0:
            return _entry(S, name, True, {"eps_integral": 0.0})
        slope = _loglog_tail_slope(t, eps, S.tail)
        ok = slope < -1.0
        return _entry(S, name, ok, {"eps_integral": total, "tail_loglog_slope": slope}, (float(t[-1]), None))

    if name == "eps_vanishes":
        if eps.max() <= 0:
            return _entry(S, name, True, {"eps_final": 0.0})
        tail = eps[S.tail]
        ok = bool(np.all(np.diff(tail) <= 1e-15 * tail.max()) and tail[-1] <= 0.01 * eps.max())
        return _entry(S, name, ok, {"eps_final": float(tail[-1]), "eps_max": float(eps.max())}, (float(t[-1]), None))

    if name == "k_growth_lower":
        klow = S.klow if S.has_kernel else np.zeros_like(t)
        D_t = klow * np.exp(-lam * (l - 1) * t)
        tail = D_t[S.tail]
        D = float(tail.min())
        i = int(np.flatnonzero(S.tail)[np.argmin(tail)])
        # a positive lower bound must not be eroding along the tail
        ok = D > 0 and D >= 0.5 * tail[0]
        return _entry(S, name, ok, {"D": D, "tail_start": float(0.5 * t[-1])}, (float(t[i]), None))

    if name == "k_integral_sigma":
        if l <= 1:
            return _entry(S, name, False, {"reason": "requires l > 1"}, (0.0, None))
        if S.kint.max() <= 0:
            return _entry(S, name, True, {"sigma": 0.0, "A": 0.0})
        sigma = max(0.0, _max_tail_slope(t, S.kint, S.tail))
        A = float((S.kint * np.exp(-sigma * t)).max())
        return _entry(S, name, sigma < lam * (l - 1), {"sigma": sigma, "A": A}, (float(t[-1]), None))

    if name == "b_over_a":
        if r + p <= q:
            return _entry(S, name, False, {"reason": "requires r + p > q"}, (0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(S.a > 0, S.b / np.where(S.a > 0, S.a, 1.0), np.inf).min(axis=1)
        if np.all(np.isinf(ratio)):
            return _entry(S, name, True, {"B": math.inf, "omega": 0.0})
        finite = np.isfinite(ratio)
        if ratio[finite].min() <= 0:
            return _entry(S, name, False, {"B": 0.0}, _argmin_where(S, S.b))
        fill = np.where(finite, ratio, ratio[finite].max())
        omega = max(0.0, -float(np.min(np.diff(_log(fill[S.tail])) / np.diff(t[S.tail]))))
        B = float((fill * np.exp(omega * t)).min())
        return _entry(
            S, name, omega < lam * (r + p - q), {"B": B, "omega": omega}, (float(t[-1]), None)
        )

    if name == "gamma_unbounded":
        bb = S.bbar[S.tail]
        if bb.max() <= 0:
            return _entry(S, name, S.alow[S.tail].min() > 0, {"gamma_final": math.inf}, (float(t[-1]), None))
        gamma = S.alow * np.exp(-lam * (r + p - q) * t) / np.maximum(S.bbar, 1e-300)
        g = gamma[S.tail]
        ok = bool(np.all(np.diff(g) > 0) and g[-1] >= 2.0 * g[0])
        return _entry(S, name, ok, {"gamma_tail_start": float(g[0]), "gamma_final": float(g[-1])}, (float(t[-1]), None))

    if name == "a_divergent":
        integrand = S.alow * np.exp(-lam * (r + p - 1) * t)
        return _divergence_entry(S, name, integrand)

    raise KeyError(f"unknown hypothesis {name!r}")


def verify_profile_flags(
    spec: ProblemSpec,
    hypotheses: Sequence[str] | None,
    horizon: float,
    samples: int = 201,
    *,
    grid: Grid | None = None,
    lambda1: float | None = None,
    assert_names: Iterable[str] = (),
    options: dict | None = None,
) -> ProfileReport:
    """Classify each named hypothesis on ``[0, horizon]``.

    ``hypotheses=None`` checks all known ones.  ``lambda1`` defaults to the
    discrete first eigenvalue of ``grid`` (65 nodes if not given).
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    names = list(HYPOTHESES) if hypotheses is None else list(hypotheses)
    for n in list(names) + list(assert_names):
        if n not in HYPOTHESES:
            raise KeyError(f"unknown hypothesis {n!r}")
    if grid is None:
        grid = build_grid(spec.domain, 65)
    lam = first_eigenpair(grid).lambda1 if lambda1 is None else float(lambda1)
    S = _Samples(spec, grid, horizon, max(samples, 16))
    opts = options or {}
    rep = ProfileReport(horizon=float(horizon), lambda1=lam)
    forced = set(assert_names)
    for n in names:
        if n in forced:
            rep.entries[n] = HypothesisEntry(n, Status.ASSERTED_BY_USER, float(horizon), {"asserted": True}, dict(S.desc))
        else:
            rep.entries[n] = _check(n, spec, S, lam, opts)
    for n in forced - set(names):
        rep.entries[n] = HypothesisEntry(n, Status.ASSERTED_BY_USER, float(horizon), {"asserted": True}, dict(S.desc))
    return rep
