import math

import numpy as np
import pytest

from nonlocal_blowup.domain import Disc, Interval, build_grid, integrate, laplacian_apply
from nonlocal_blowup.spectral import (
    BESSEL_J0_ZERO,
    EigenConvergenceError,
    Normalization,
    enlarged_eigenpair,
    enlarged_lambda_analytic,
    first_eigenpair,
    margin_for_window,
    normal_derivative,
)


def test_bessel_zero():
    from scipy.special import j0

    assert abs(j0(BESSEL_J0_ZERO)) < 1e-14


@pytest.mark.parametrize("dom", [Interval(0, 1), Disc(1.0)])
def test_discrete_eigen_relation(dom):
    g = build_grid(dom, 81)
    pair = first_eigenpair(g)
    res = laplacian_apply(g, pair.phi) + pair.lambda1 * pair.phi[g.interior_idx]
    assert np.abs(res).max() < 1e-8 * pair.lambda1 * pair.phi.max()
    assert np.all(pair.phi[g.interior_idx] > 0)
    assert np.all(pair.phi[g.boundary_idx] == 0)


def test_interval_eigenvalue_closed_form():
    # the discrete eigenvalue of the 3-point stencil is (4/h^2) sin^2(pi h / 2)
    g = build_grid(Interval(0, 1), 51)
    exact = 4 / g.h**2 * math.sin(math.pi * g.h / 2) ** 2
    assert first_eigenpair(g).lambda1 == pytest.approx(exact, rel=1e-11)


@pytest.mark.parametrize("dom,exact", [(Interval(0, 1), math.pi**2), (Disc(1.0), BESSEL_J0_ZERO**2)])
def test_second_order_convergence(dom, exact):
    errs = [abs(first_eigenpair(build_grid(dom, n)).lambda1 - exact) for n in (41, 81)]
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_normalizations():
    g = build_grid(Interval(0, 2), 41)
    a = first_eigenpair(g, Normalization.INTEGRAL_ONE)
    b = first_eigenpair(g, "sup_one")
    assert integrate(g, a.phi) == pytest.approx(1.0)
    assert b.phi.max() == pytest.approx(1.0)
    np.testing.assert_allclose(a.scaled(Normalization.SUP_ONE, g).phi, b.phi, rtol=1e-10)


def test_non_convergence_raises():
    with pytest.raises(EigenConvergenceError):
        first_eigenpair(build_grid(Interval(0, 1), 401), max_iter=1)


@pytest.mark.parametrize("dom", [Interval(0, 1), Disc(1.0)])
def test_enlarged_pair(dom):
    g = build_grid(dom, 61)
    lam1 = first_eigenpair(g).lambda1
    pair = enlarged_eigenpair(g, 0.1)
    assert pair.lambda1 < lam1
    assert pair.lambda1 == pytest.approx(enlarged_lambda_analytic(g, pair.margin), rel=5e-3)
    assert pair.phi.min() > 0 and pair.ratio_d >= 1
    assert pair.phi.size == g.n
    # margin is a whole number of cells
    assert pair.margin / g.h == pytest.approx(round(pair.margin / g.h))


def test_margin_for_window():
    g = build_grid(Interval(0, 1), 41)
    m = margin_for_window(g, 5.0, 7.0)
    assert 5.0 < enlarged_lambda_analytic(g, m) < 7.0
    with pytest.raises(ValueError):
        margin_for_window(g, 3.0, 3.0)


def test_normal_derivative_sign():
    g = build_grid(Interval(0, 1), 101)
    dn = normal_derivative(g, first_eigenpair(g, "sup_one").phi)
    # outward derivative of a positive eigenfunction is negative, ~ -pi for sin(pi x)
    np.testing.assert_allclose(dn, -math.pi, rtol=1e-3)
