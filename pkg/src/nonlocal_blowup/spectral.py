"""First Dirichlet eigenpair of -Laplace on the grid and on enlarged domains."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import NumericalError
from .domain import Disc, Grid, Interval, build_grid, integrate, laplacian_apply, laplacian_matrix

# first zero of the Bessel function J0
BESSEL_J0_ZERO = 2.404825557695773


class Normalization(str, enum.Enum):
    INTEGRAL_ONE = "integral_one"
    SUP_ONE = "sup_one"


class EigenConvergenceError(NumericalError):
    def __init__(self, iterations: int, change: float):
        super().__init__(
            f"inverse power iteration did not converge after {iterations} iterations "
            f"(last relative change {change:.3e})"
        )
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class EigenPair:
    lambda1: float
    phi: np.ndarray
    normalization: Normalization
    iterations: int = 0
    # enlarged-domain extras
    margin: float = 0.0
    ratio_d: float = float("nan")

    def scaled(self, normalization: Normalization, grid: Grid) -> "EigenPair":
        phi = _normalize(self.phi, grid, normalization)
        return EigenPair(self.lambda1, phi, normalization, self.iterations, self.margin, self.ratio_d)


def _normalize(phi: np.ndarray, grid: Grid, normalization: Normalization) -> np.ndarray:
    normalization = Normalization(normalization)
    if normalization is Normalization.INTEGRAL_ONE:
        return phi / integrate(grid, phi)
    return phi / phi.max()


def _rayleigh(grid: Grid, v: np.ndarray, full: np.ndarray) -> float:
    lap = laplacian_apply(grid, full)
    w = grid.quad_weights[grid.interior_idx]
    return float(-(w * lap * v).sum() / (w * v * v).sum())


def first_eigenpair(
    grid: Grid,
    normalization: Normalization | str = Normalization.INTEGRAL_ONE,
    *,
    rtol: float = 1e-12,
    max_iter: int = 500,
) -> EigenPair:
    """Smallest eigenvalue of -Laplace with zero boundary data, by inverse iteration.

    Iterates until successive eigenvalue estimates agree to ``rtol`` and the
    discrete residual ``|Lap phi + lambda phi|`` is at round-off level.
    """
    normalization = Normalization(normalization)
    key = ("eig", normalization)
    if key in grid._cache:
        return grid._cache[key]

    lu = spla.splu(-laplacian_matrix(grid))
    interior = grid.interior_idx
    full = np.zeros(grid.n)
    v = np.ones(interior.size)
    lam_old = np.inf
    change = np.inf
    for it in range(1, max_iter + 1):
        v = lu.solve(v)
        v /= np.abs(v).max()
        full[interior] = v
        lam = _rayleigh(grid, v, full)
        change = abs(lam - lam_old) / abs(lam)
        lam_old = lam
        if change < rtol:
            res = np.abs(laplacian_apply(grid, full) + lam * v).max()
            # round-off floor of the stencil itself
            floor = 100 * np.finfo(float).eps * 4.0 / grid.h**2
            if res <= 1e-11 * lam + floor:
                break
    else:
        raise EigenConvergenceError(max_iter, change)

    if full[interior].sum() < 0:
        full = -full
    phi = _normalize(full, grid, normalization)
    pair = EigenPair(lam, phi, normalization, it)
    grid._cache[key] = pair
    return pair


def _enlarged_grid(grid: Grid, margin: float) -> tuple[Grid, np.ndarray]:
    """Grid of the enlarged domain sharing spacing and nodes with ``grid``.

    The margin is rounded up to a whole number of cells; returns the grid and
    the indices of the original nodes inside it.
    """
    cells = max(1, int(np.ceil(margin / grid.h - 1e-9)))
    d = grid.descriptor
    if isinstance(d, Interval):
        m = cells * grid.h
        big = build_grid(Interval(d.a_end - m, d.b_end + m), grid.n + 2 * cells)
        idx = np.arange(cells, cells + grid.n)
    else:
        m = cells * grid.h
        big = build_grid(Disc(d.radius + m), grid.n + cells)
        idx = np.arange(grid.n)
    return big, idx


def enlarged_eigenpair(
    grid: Grid, margin: float, normalization: Normalization | str = Normalization.SUP_ONE
) -> EigenPair:
    """Eigenpair of a concentric enlarged domain, restricted to the nodes of ``grid``.

    ``phi`` is normalized on the enlarged domain and is positive on all of the
    closed original domain.  ``ratio_d`` is ``sup phi / inf_Omega phi`` and
    ``margin`` the effective (cell-rounded) margin.
    """
    if not margin > 0:
        raise ValueError(f"margin must be positive, got {margin}")
    normalization = Normalization(normalization)
    big, idx = _enlarged_grid(grid, margin)
    pair = first_eigenpair(big, normalization)
    phi = pair.phi[idx].copy()
    eff = (big.n - grid.n) * grid.h
    if isinstance(grid.descriptor, Interval):
        eff /= 2
    ratio = float(pair.phi.max() / phi.min())
    return EigenPair(pair.lambda1, phi, normalization, pair.iterations, eff, ratio)


def enlarged_lambda_analytic(grid: Grid, margin: float) -> float:
    d = grid.descriptor
    if isinstance(d, Interval):
        return (np.pi / (d.measure + 2 * margin)) ** 2
    return (BESSEL_J0_ZERO / (d.radius + margin)) ** 2


def margin_for_window(grid: Grid, lower: float, upper: float, *, steps: int = 60) -> float:
    """Margin whose enlarged first eigenvalue lies in ``(lower, upper)``.

    Bisection on the continuous eigenvalue toward the window midpoint; the
    discrete eigenvalue of the cell-rounded margin is checked afterwards by the
    caller.
    """
    if not lower < upper:
        raise ValueError(f"empty eigenvalue window ({lower}, {upper})")
    target = 0.5 * (lower + upper)
    lo, hi = 0.0, grid.descriptor.inradius
    while enlarged_lambda_analytic(grid, hi) > target:
        hi *= 2
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if enlarged_lambda_analytic(grid, mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def normal_derivative(grid: Grid, phi: np.ndarray) -> np.ndarray:
    """One-sided outward normal derivative at the boundary nodes."""
    h = grid.h
    if isinstance(grid.descriptor, Interval):
        return np.array([-(phi[1] - phi[0]) / h, (phi[-1] - phi[-2]) / h])
    return np.array([(phi[-1] - phi[-2]) / h])
