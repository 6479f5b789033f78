"""Regime classification and small-versus-large data experiments.

:func:`classify` maps exact exponents and a :class:`ProfileReport` to the set of
qualitative predictions whose hypotheses all hold.  :func:`dichotomy_experiment`
runs the solver over scaled initial data and checks the outcome pattern.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .domain import Grid
from .model import Exponents, ProblemSpec, ScaledDatum
from .profile import ProfileReport
from .solver import SolveControls, SolveResult, Trace, solve

PREDICATES = ("GlobalAllData", "BlowUpLargeData", "GlobalSmallData", "BlowUpAllNontrivial")
BRANCH_IDS = ("2.2-i", "2.2-ii", "2.2-iii", "2.4-i", "2.4-ii", "3.1-i", "3.1-ii", "3.3", "3.5", "3.7")

ONE = Fraction(1)


@dataclass(frozen=True)
class _Rule:
    predicate: str
    branch: str
    condition: Callable[[Fraction, Fraction, Fraction, Fraction], bool]
    hypotheses: tuple[str, ...]
    text: str


# exponent conditions are evaluated on exact rationals, strict inequalities stay strict
RULES: tuple[_Rule, ...] = (
    _Rule("GlobalAllData", "2.2-i", lambda r, p, q, l: max(r + p, l) <= 1, (), "max(r+p, l) <= 1"),
    _Rule(
        "GlobalAllData", "2.2-ii", lambda r, p, q, l: l <= 1 and 1 < r + p < q, ("b_positive",),
        "b > 0, l <= 1, 1 < r+p < q",
    ),
    _Rule(
        "GlobalAllData",
        "2.2-iii",
        lambda r, p, q, l: 1 < l < (q + 1) / 2 and max(r + p, 2 * p + 1) < q,
        ("b_positive",),
        "b > 0, 1 < l < (q+1)/2, max(r+p, 2p+1) < q",
    ),
    _Rule(
        "BlowUpLargeData", "2.4-i", lambda r, p, q, l: l > max(ONE, (q + 1) / 2), ("k_lower_initial",),
        "l > max(1, (q+1)/2), k >= k0 > 0 near t = 0",
    ),
    _Rule(
        "BlowUpLargeData", "2.4-ii", lambda r, p, q, l: r + p > max(q, ONE), ("a_lower_initial",),
        "r+p > max(q, 1), a >= a0 > 0 near t = 0",
    ),
    _Rule(
        "GlobalSmallData", "3.1-i", lambda r, p, q, l: q < min(r + p, ONE) and l > 1, ("b_initial_positive",),
        "b(., 0) > 0, q < min(r+p, 1), l > 1",
    ),
    _Rule(
        "GlobalSmallData", "3.1-ii", lambda r, p, q, l: r >= q and (q + 1) / 2 < l <= 1, ("b_initial_positive",),
        "b(., 0) > 0, r >= q, (q+1)/2 < l <= 1",
    ),
    _Rule(
        "GlobalSmallData", "3.3", lambda r, p, q, l: q == 1 and min(r + p, l) > 1,
        ("q1_a_integral", "q1_k_growth"), "q = 1, min(r+p, l) > 1",
    ),
    _Rule(
        "BlowUpAllNontrivial", "3.3", lambda r, p, q, l: q == 1 and min(r, p) >= 1, ("q1_a_divergent",),
        "q = 1, min(r, p) >= 1, divergent source integral",
    ),
    _Rule(
        "BlowUpAllNontrivial", "3.3", lambda r, p, q, l: q == 1 and l > 1, ("q1_k_divergent",),
        "q = 1, l > 1, divergent kernel integral",
    ),
    _Rule(
        "GlobalSmallData", "3.5", lambda r, p, q, l: l > 1 and 1 < q < r + p,
        ("k_integral_sigma", "b_over_a"), "l > 1, 1 < q < r+p",
    ),
    _Rule(
        "BlowUpAllNontrivial", "3.5", lambda r, p, q, l: l >= q > 1,
        ("b_eps_envelope", "eps_vanishes", "k_growth_lower"), "l >= q > 1",
    ),
    _Rule(
        "BlowUpAllNontrivial", "3.7", lambda r, p, q, l: max(r, p) >= q > 1,
        ("b_eps_envelope", "gamma_unbounded", "a_divergent"), "max(r, p) >= q > 1",
    ),
)


@dataclass(frozen=True)
class Prediction:
    predicate: str
    branch: str
    hypotheses: tuple[str, ...]
    statuses: tuple[tuple[str, str], ...]
    condition: str

    def to_json(self) -> dict:
        return {
            "predicate": self.predicate,
            "branch": self.branch,
            "condition": self.condition,
            "hypotheses": {name: status for name, status in self.statuses},
        }


@dataclass
class Verdict:
    """Predictions whose exponent conditions and hypotheses all hold; empty means indeterminate."""

    exponents: tuple[str, str, str, str]
    predictions: list[Prediction] = field(default_factory=list)
    missing: dict = field(default_factory=dict)

    @property
    def predicates(self) -> set[tuple[str, str]]:
        return {(p.predicate, p.branch) for p in self.predictions}

    @property
    def indeterminate(self) -> bool:
        return not self.predictions

    def has(self, predicate: str, branch: str | None = None) -> bool:
        return any(p.predicate == predicate and (branch is None or p.branch == branch) for p in self.predictions)

    def to_json(self) -> dict:
        return {
            "exponents": dict(zip("rpql", self.exponents)),
            "predictions": [p.to_json() for p in self.predictions],
            "indeterminate": self.indeterminate,
            "missing_hypotheses": {k: list(v) for k, v in self.missing.items()},
        }


def _exact(exponents: Exponents | Sequence) -> tuple[Fraction, ...]:
    if isinstance(exponents, Exponents):
        return exponents.exact()
    vals = tuple(Fraction(str(v)) if not isinstance(v, Fraction) else v for v in exponents)
    if len(vals) != 4 or any(v <= 0 for v in vals):
        raise ValueError("exponents must be four positive numbers (r, p, q, l)")
    return vals


def classify(exponents: Exponents | Sequence, profile: ProfileReport, *, strict: bool = False) -> Verdict:
    """Predictions supported by ``exponents`` and the hypothesis report.

    A prediction is emitted when its exponent condition holds exactly and every
    required hypothesis is ``HoldsOnHorizon`` or ``AssertedByUser``.  A
    hypothesis absent from ``profile`` counts as not established; with
    ``strict=True`` it raises :class:`KeyError` instead.
    """
    r, p, q, l = _exact(exponents)
    verdict = Verdict(tuple(str(v) for v in (r, p, q, l)))
    seen = set()
    for rule in RULES:
        if not rule.condition(r, p, q, l):
            continue
        absent = [h for h in rule.hypotheses if h not in profile.entries]
        if absent:
            if strict:
                raise KeyError(f"profile has no entry for {absent} needed by {rule.branch}")
            verdict.missing[f"{rule.predicate}({rule.branch})"] = absent
            continue
        if not all(profile.holds(h) for h in rule.hypotheses):
            continue
        key = (rule.predicate, rule.branch)
        if key in seen:
            continue
        seen.add(key)
        statuses = tuple((h, profile.entries[h].status.value) for h in rule.hypotheses)
        verdict.predictions.append(Prediction(rule.predicate, rule.branch, rule.hypotheses, statuses, rule.text))
    return verdict


# ---------------------------------------------------------------------------
# dichotomy experiments


def j_super_growth(trace: Trace, exponent: float, tail: float = 0.5) -> tuple[bool, float]:
    """Sustained super-linear growth of ``J`` on the last ``tail`` fraction of a run.

    Returns ``(flag, d3)`` with ``d3 = min J' / J^exponent`` on the tail.  The
    flag requires ``J`` increasing with accelerating logarithmic rate and at
    least doubling over the tail.
    """
    arr = trace.arrays()
    t, J = arr["t"], arr["J"]
    ok = np.isfinite(J) & (J > 0)
    t, J = t[ok], J[ok]
    if t.size < 5:
        return False, 0.0
    sel = t >= t[0] + (1.0 - tail) * (t[-1] - t[0])
    t, J = t[sel], J[sel]
    if t.size < 4:
        return False, 0.0
    dJ = np.gradient(J, t)
    d3 = float(np.min(dJ / J**exponent))
    rate = dJ / J
    flag = bool(np.all(dJ > 0) and J[-1] >= 2.0 * J[0] and rate[-1] > rate[0] and d3 > 0)
    return flag, d3


@dataclass
class DichotomyReport:
    scales: list[float]
    outcomes: list[str]
    brackets: list
    super_growth: list[bool]
    d3: list[float]
    monotone: bool
    threshold: tuple | None
    results: list[SolveResult] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "scales": self.scales,
            "outcomes": self.outcomes,
            "blowup_brackets": [list(b) if b else None for b in self.brackets],
            "j_super_growth": self.super_growth,
            "d3": self.d3,
            "monotone": self.monotone,
            "threshold_bracket": list(self.threshold) if self.threshold else None,
        }


def _growth_exponent(spec: ProblemSpec) -> float:
    e = spec.exponents
    return e.q if e.q > 1 else max(e.r + e.p, e.l, 1.0 + 1e-9)


def dichotomy_experiment(
    spec: ProblemSpec,
    grid: Grid,
    scales: Sequence[float],
    controls: SolveControls,
    *,
    threads: int | None = None,
    waive_compatibility: bool = False,
) -> DichotomyReport:
    """Solve from ``c * u0`` for each scale ``c`` and check the outcome pattern.

    The pattern is monotone when no ``Completed``/``Decayed`` outcome occurs
    above the smallest scale that blows up.  Non-monotone patterns are
    reported, not raised.
    """
    scales = [float(c) for c in scales]
    if not scales or any(c <= 0 for c in scales):
        raise ValueError("scales must be positive")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly ascending")

    def one(c):
        return solve(spec.with_u0(ScaledDatum(c, spec.u0)), grid, controls, waive_compatibility=waive_compatibility)

    workers = max(1, threads or 1)
    if workers == 1:
        results = [one(c) for c in scales]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, scales))

    expo = _growth_exponent(spec)
    outcomes = [r.outcome.kind for r in results]
    growth = [j_super_growth(r.traces, expo) if r.outcome.kind == "Completed" else (False, math.nan) for r in results]
    first_blow = next((i for i, k in enumerate(outcomes) if k == "BlowUp"), None)
    monotone = first_blow is None or all(k == "BlowUp" for k in outcomes[first_blow:])
    threshold = None
    if first_blow is not None and first_blow > 0:
        threshold = (scales[first_blow - 1], scales[first_blow])
    return DichotomyReport(
        scales=scales,
        outcomes=outcomes,
        brackets=[r.outcome.t_bracket for r in results],
        super_growth=[g[0] for g in growth],
        d3=[g[1] for g in growth],
        monotone=monotone,
        threshold=threshold,
        results=results,
    )
