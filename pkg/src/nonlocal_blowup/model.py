"""Problem specification: exponents, coefficient DSL, kernel, initial datum.

Every coefficient form is separable, ``c(x, t) = S(x) * T(t)``, which lets a
problem be compiled once per grid (spatial arrays) with cheap per-time scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

import numpy as np
from scipy.special import j0

from .domain import DomainDescriptor, Grid, Interval
from .errors import HypothesisError
from .spectral import BESSEL_J0_ZERO, Normalization, first_eigenpair


@dataclass(frozen=True)
class Exponents:
    r: float
    p: float
    q: float
    l: float

    def __post_init__(self):
        for name in ("r", "p", "q", "l"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, Fraction)) and v > 0 and math.isfinite(v)):
                raise HypothesisError(
                    f"exponent {name}={v!r} violates the standing assumption that r, p, q, l "
                    "are positive constants"
                )
            object.__setattr__(self, name, float(v))

    def exact(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Exponents as exact rationals (decimal reading of the float repr)."""
        return tuple(Fraction(repr(v)) for v in (self.r, self.p, self.q, self.l))


# ---------------------------------------------------------------------------
# spatial and temporal profiles


def _center_distance(x, domain: DomainDescriptor) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.abs(x - domain.center) if isinstance(domain, Interval) else np.abs(x)


@dataclass(frozen=True)
class SpatialConstant:
    c: float = 1.0

    def values(self, grid: Grid) -> np.ndarray:
        return self.values_at(grid.nodes, grid.descriptor)

    def values_at(self, x, domain: DomainDescriptor) -> np.ndarray:
        return np.full(np.shape(x), float(self.c))


@dataclass(frozen=True)
class AffineBump:
    """``c0 + c1 * (1 - rho^2)`` with ``rho`` the center distance scaled to [0, 1]."""

    c0: float
    c1: float

    def values(self, grid: Grid) -> np.ndarray:
        return self.values_at(grid.nodes, grid.descriptor)

    def values_at(self, x, domain: DomainDescriptor) -> np.ndarray:
        rho = _center_distance(x, domain) / domain.inradius
        return self.c0 + self.c1 * (1.0 - rho**2)


def mode_shape(grid: Grid) -> np.ndarray:
    """Continuous first Dirichlet mode on the grid nodes, sup-normalized."""
    return mode_shape_at(grid.nodes, grid.descriptor)


def mode_shape_at(x, d: DomainDescriptor) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(d, Interval):
        return np.clip(np.sin(np.pi * (x - d.a_end) / d.measure), 0.0, None)
    return np.clip(j0(BESSEL_J0_ZERO * x / d.radius), 0.0, None)


@dataclass(frozen=True)
class EigenPower:
    """``c * psi(x)**power`` with ``psi`` the sup-normalized first mode."""

    c: float
    power: float = 1.0

    def values(self, grid: Grid) -> np.ndarray:
        return self.values_at(grid.nodes, grid.descriptor)

    def values_at(self, x, domain: DomainDescriptor) -> np.ndarray:
        return self.c * mode_shape_at(x, domain) ** self.power


SpatialProfile = Union[SpatialConstant, AffineBump, EigenPower]


@dataclass(frozen=True)
class TemporalConstant:
    def __call__(self, t: float) -> float:
        return 1.0

    def integral(self, t: float) -> float:
        """``int_0^t`` of the profile."""
        return float(t)


@dataclass(frozen=True)
class TemporalExp:
    rho: float

    def __call__(self, t: float) -> float:
        return math.exp(self.rho * t)

    def integral(self, t: float) -> float:
        return math.expm1(self.rho * t) / self.rho if self.rho != 0 else float(t)


@dataclass(frozen=True)
class TemporalPower:
    """``(1 + t)**m``."""

    m: float

    def __call__(self, t: float) -> float:
        return (1.0 + t) ** self.m

    def integral(self, t: float) -> float:
        if self.m == -1:
            return math.log1p(t)
        return ((1.0 + t) ** (self.m + 1) - 1.0) / (self.m + 1)


@dataclass(frozen=True)
class TemporalRamp:
    """``1 - exp(-rho t)``; vanishes at ``t = 0``."""

    rho: float

    def __call__(self, t: float) -> float:
        return -math.expm1(-self.rho * t)

    def integral(self, t: float) -> float:
        return t + math.expm1(-self.rho * t) / self.rho if self.rho != 0 else 0.0


TemporalProfile = Union[TemporalConstant, TemporalExp, TemporalPower, TemporalRamp]


# ---------------------------------------------------------------------------
# coefficient and kernel descriptors


@dataclass(frozen=True)
class Constant:
    c: float

    def split(self, ctx: "FixtureContext"):
        return SpatialConstant(self.c), TemporalConstant()


@dataclass(frozen=True)
class ExpInTime:
    c: float
    rho: float

    def split(self, ctx: "FixtureContext"):
        return SpatialConstant(self.c), TemporalExp(self.rho)


@dataclass(frozen=True)
class SeparableProduct:
    spatial: SpatialProfile
    temporal: TemporalProfile

    def split(self, ctx: "FixtureContext"):
        return self.spatial, self.temporal


FIXTURE_TAGS = ("Remark36", "Remark310", "Remark311family")


@dataclass(frozen=True)
class FixtureContext:
    exponents: Exponents
    domain: DomainDescriptor
    lambda1: float


def analytic_lambda1(domain: DomainDescriptor) -> float:
    if isinstance(domain, Interval):
        return (np.pi / domain.measure) ** 2
    return (BESSEL_J0_ZERO / domain.radius) ** 2


@dataclass(frozen=True)
class Fixture:
    """Closed-form coefficient families used as test fixtures.

    ``Remark310`` (params ``sigma``, optional ``lambda1``) admits the exact
    solution ``exp(-(lambda1 + sigma/(q-1)) t)`` with ``u0 = 1``.
    ``Remark36`` (params ``b``, ``k``): ``a = 0``, ``b e^{lambda1 (q-1) t}``,
    ``k e^{lambda1 (l-1) t}``.
    ``Remark311family`` (params ``omega``, ``B``, ``b0``, ``kappa``, ``k0``):
    ``b = b0 e^{(lambda1 (q-1) - kappa) t}``, ``a = b e^{omega t} / B``,
    ``k = k0 e^{lambda1 (l-1) t}``.
    """

    tag: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in FIXTURE_TAGS:
            raise ValueError(f"unknown fixture tag {self.tag!r}; expected one of {FIXTURE_TAGS}")

    def __hash__(self):
        return hash((self.tag, tuple(sorted(self.params.items()))))

    def lam(self, ctx: FixtureContext) -> float:
        return float(self.params.get("lambda1", ctx.lambda1))

    def remark310_rate(self, ctx: FixtureContext) -> float:
        q = ctx.exponents.q
        if q <= 1:
            raise HypothesisError("Remark310 fixture requires q > 1")
        return self.lam(ctx) + float(self.params["sigma"]) / (q - 1)


def _fixture_coefficient(fx: Fixture, which: str, ctx: FixtureContext):
    e = ctx.exponents
    lam = fx.lam(ctx)
    P = fx.params
    if fx.tag == "Remark310":
        c = fx.remark310_rate(ctx)
        sigma = float(P["sigma"])
        if which == "a":
            amp = (lam * (e.q - 1) + sigma) / ((e.q - 1) * ctx.domain.measure)
            return SpatialConstant(amp), TemporalExp((e.r + e.p - 1) * c)
        return SpatialConstant(2.0 * c), TemporalExp((e.q - 1) * c)
    if fx.tag == "Remark36":
        if which == "a":
            return SpatialConstant(0.0), TemporalConstant()
        return SpatialConstant(float(P["b"])), TemporalExp(lam * (e.q - 1))
    # Remark311family
    b0, B = float(P["b0"]), float(P["B"])
    omega, kappa = float(P["omega"]), float(P.get("kappa", 0.0))
    rate_b = lam * (e.q - 1) - kappa
    if which == "a":
        return SpatialConstant(b0 / B), TemporalExp(rate_b + omega)
    return SpatialConstant(b0), TemporalExp(rate_b)


CoefficientDescriptor = Union[Constant, ExpInTime, SeparableProduct, Fixture]


@dataclass(frozen=True)
class KernelZero:
    pass


@dataclass(frozen=True)
class UniformConstant:
    k0: float


@dataclass(frozen=True)
class SeparableTime:
    """``k(x, y, t) = kappa(t) * w(y)``."""

    kappa: TemporalProfile
    weight: SpatialProfile = SpatialConstant(1.0)


KernelDescriptor = Union[KernelZero, UniformConstant, SeparableTime, Fixture]


def _kernel_split(k: KernelDescriptor, ctx: FixtureContext):
    """Return (spatial weight over y or None for zero kernel, temporal factor)."""
    if isinstance(k, KernelZero):
        return None, TemporalConstant()
    if isinstance(k, UniformConstant):
        return SpatialConstant(k.k0), TemporalConstant()
    if isinstance(k, SeparableTime):
        return k.weight, k.kappa
    if isinstance(k, Fixture):
        e = ctx.exponents
        lam = k.lam(ctx)
        if k.tag == "Remark310":
            c = k.remark310_rate(ctx)
            return SpatialConstant(1.0 / ctx.domain.measure), TemporalExp((e.l - 1) * c)
        if k.tag == "Remark36":
            return SpatialConstant(float(k.params["k"])), TemporalExp(lam * (e.l - 1))
        k0 = float(k.params.get("k0", 0.0))
        if k0 == 0.0:
            return None, TemporalConstant()
        return SpatialConstant(k0), TemporalExp(lam * (e.l - 1))
    raise TypeError(f"unknown kernel descriptor {k!r}")


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class InitialConstant:
    c: float

    def values(self, grid: Grid) -> np.ndarray:
        return np.full(grid.n, float(self.c))


@dataclass(frozen=True)
class ScaledEigen:
    """``beta * phi`` with ``phi`` the discrete first eigenfunction of the grid."""

    beta: float
    normalization: str = Normalization.SUP_ONE.value

    def values(self, grid: Grid) -> np.ndarray:
        return self.beta * first_eigenpair(grid, self.normalization).phi


@dataclass(frozen=True)
class SineMode:
    """``c`` times the continuous first mode (sine on intervals, J0 on discs)."""

    c: float

    def values(self, grid: Grid) -> np.ndarray:
        return self.c * mode_shape(grid)


@dataclass(frozen=True)
class Bump:
    """``(A^2 - |x - center|^2 / T)_+``."""

    A: float
    T: float

    def values(self, grid: Grid) -> np.ndarray:
        rho = grid.distance_to_center()
        return np.clip(self.A**2 - rho**2 / self.T, 0.0, None)


@dataclass(frozen=True, eq=False)
class Nodal:
    values_: tuple

    def values(self, grid: Grid) -> np.ndarray:
        v = np.asarray(self.values_, dtype=float)
        if v.size != grid.n:
            raise ValueError(f"nodal initial datum has {v.size} values, grid has {grid.n} nodes")
        return v.copy()


@dataclass(frozen=True)
class ScaledDatum:
    """``c`` times another initial datum."""

    c: float
    base: "InitialDatum"

    def values(self, grid: Grid) -> np.ndarray:
        return self.c * self.base.values(grid)


InitialDatum = Union[InitialConstant, ScaledEigen, SineMode, Bump, Nodal, ScaledDatum]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    exponents: Exponents
    a: CoefficientDescriptor
    b: CoefficientDescriptor
    k: KernelDescriptor
    u0: InitialDatum
    domain: DomainDescriptor

    def fixture_context(self) -> FixtureContext:
        return FixtureContext(self.exponents, self.domain, analytic_lambda1(self.domain))

    def with_u0(self, u0: InitialDatum) -> "ProblemSpec":
        return ProblemSpec(self.exponents, self.a, self.b, self.k, u0, self.domain)

    def with_exponents(self, exponents: Exponents) -> "ProblemSpec":
        return ProblemSpec(exponents, self.a, self.b, self.k, self.u0, self.domain)

    def is_flat(self) -> bool:
        """Coefficients ``a``, ``b`` and the kernel weight are constant in space."""
        flat = (SpatialConstant,)
        ctx = self.fixture_context()
        sa, _ = _split_coefficient(self.a, "a", ctx)
        sb, _ = _split_coefficient(self.b, "b", ctx)
        sk, _ = _kernel_split(self.k, ctx)
        return isinstance(sa, flat) and isinstance(sb, flat) and (sk is None or isinstance(sk, flat))


def _split_coefficient(c: CoefficientDescriptor, which: str, ctx: FixtureContext):
    if isinstance(c, Fixture):
        return _fixture_coefficient(c, which, ctx)
    return c.split(ctx)


class CompiledProblem:
    """A :class:`ProblemSpec` bound to a grid.

    ``a_at(t)``/``b_at(t)`` return nodal fields and ``kernel_rows(t)`` the
    ``(boundary, nodes)`` matrix of ``k(x_i, y_j, t)``; ``kernel_quad(t)`` has the
    quadrature weights folded in.
    """

    def __init__(self, spec: ProblemSpec, grid: Grid):
        if grid.descriptor != spec.domain:
            raise ValueError("grid and problem domain differ")
        self.spec = spec
        self.grid = grid
        ctx = spec.fixture_context()
        sa, self.a_time = _split_coefficient(spec.a, "a", ctx)
        sb, self.b_time = _split_coefficient(spec.b, "b", ctx)
        self.a_profile, self.b_profile = sa, sb
        self.a_space = sa.values(grid)
        self.b_space = sb.values(grid)
        sk, self.k_time = _kernel_split(spec.k, ctx)
        self.k_profile = sk
        nb = grid.boundary_idx.size
        if sk is None:
            self.k_space = None
            self.k_rows_space = np.zeros((nb, grid.n))
        else:
            self.k_space = sk.values(grid)
            self.k_rows_space = np.tile(self.k_space, (nb, 1))
        self.k_quad_space = self.k_rows_space * grid.quad_weights
        # kernel mass carried by interior and by boundary nodes (rows are identical)
        qw = self.k_quad_space[0] if nb else np.zeros(grid.n)
        self.k_weight_interior = qw[grid.interior_idx].copy()
        self.k_weight_boundary = float(qw[grid.boundary_idx].sum())
        self.u0 = spec.u0.values(grid)

    @property
    def has_kernel(self) -> bool:
        return self.k_space is not None

    def a_at(self, t: float) -> np.ndarray:
        return self.a_space * self.a_time(t)

    def b_at(self, t: float) -> np.ndarray:
        return self.b_space * self.b_time(t)

    def kernel_rows(self, t: float) -> np.ndarray:
        return self.k_rows_space * self.k_time(t)

    def kernel_quad(self, t: float) -> np.ndarray:
        return self.k_quad_space * self.k_time(t)


def compile_problem(spec: ProblemSpec, grid: Grid) -> CompiledProblem:
    key = ("compiled", spec)
    try:
        return grid._cache[key]
    except (KeyError, TypeError):
        pass
    cp = CompiledProblem(spec, grid)
    try:
        grid._cache[key] = cp
    except TypeError:
        pass
    return cp


def eval_coefficients(spec: ProblemSpec, grid: Grid, t: float):
    """Nodal ``a``, ``b`` and boundary kernel rows at time ``t``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    cp = compile_problem(spec, grid)
    a, b, k = cp.a_at(t), cp.b_at(t), cp.kernel_rows(t)
    for name, v in (("a", a), ("b", b), ("k", k)):
        if v.size and v.min() < 0:
            raise HypothesisError(f"coefficient {name} is negative at t={t}; coefficients must be nonnegative")
    return a, b, k


@dataclass(frozen=True)
class CompatibilityReport:
    residual: float
    tolerance: float
    passed: bool


def _is_exact_form(u0: InitialDatum) -> bool:
    if isinstance(u0, ScaledDatum):
        return _is_exact_form(u0.base)
    return not isinstance(u0, Nodal)


def check_compatibility(spec: ProblemSpec, grid: Grid) -> CompatibilityReport:
    """Boundary mismatch ``max |u0(x) - int k(x, y, 0) u0(y)^l dy|`` over boundary nodes."""
    cp = compile_problem(spec, grid)
    u0 = cp.u0
    rhs = cp.kernel_quad(0.0) @ np.power(np.clip(u0, 0.0, None), spec.exponents.l)
    residual = float(np.abs(u0[grid.boundary_idx] - rhs).max())
    tol = 1e-8 if _is_exact_form(spec.u0) else 1e-3
    return CompatibilityReport(residual, tol, residual <= tol)
