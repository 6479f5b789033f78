import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from nonlocal_blowup.certificates import (
    FAMILIES,
    Candidate,
    Kind,
    candidate_field,
    const_C_A,
    const_C_eps,
    layer_D,
    layer_sbar,
    lower_bound_c1,
    make_recipe,
    self_similar_gamma,
    verify_candidate,
)
from nonlocal_blowup.domain import Disc, Interval, build_grid
from nonlocal_blowup.errors import HypothesisError
from nonlocal_blowup.model import (
    Constant,
    Exponents,
    Fixture,
    InitialConstant,
    KernelZero,
    ProblemSpec,
    ScaledEigen,
    SeparableTime,
    SpatialConstant,
    TemporalRamp,
    UniformConstant,
)

UNIT = Interval(0, 1)
RAMP = SeparableTime(TemporalRamp(1.0), SpatialConstant(0.5))


def problem(e, k=KernelZero(), u0=InitialConstant(0.0), dom=UNIT, a=1.0, b=1.0):
    return ProblemSpec(Exponents(*e), Constant(a), Constant(b), k, u0, dom)


LAYER = problem((0.5, 0.25, 4, 1.25), UniformConstant(1.0), InitialConstant(1.0))


# ---------------------------------------------------------------------------
# closed-form constants


@settings(max_examples=60)
@given(st.floats(0.2, 4.0), st.floats(0.3, 2.0), st.floats(1e-3, 0.3), st.floats(0.35, 0.65))
def test_C_eps_bounds_layer_integral(beta, l, eps, omega):
    if eps >= omega:
        return
    exact = quad(lambda s: (s + eps) ** (-beta * l), 0.0, omega, epsabs=0, epsrel=1e-11)[0]
    assert const_C_eps(beta, l, eps, omega) >= exact * (1 - 1e-9)


def test_C_eps_log_branch():
    assert const_C_eps(1.0, 1.0, 0.01, 0.5) == pytest.approx(-math.log(0.01))
    with pytest.raises(ValueError):
        const_C_eps(1.0, 1.0, 0.5, 0.5)


@pytest.mark.parametrize("A", [0.5, 1.0, 3.0])
def test_C_A_closed_forms(A):
    assert const_C_A(1.0, A, 1) == pytest.approx(4 * A**3 / 3, rel=1e-12)
    assert const_C_A(1.0, A, 2) == pytest.approx(math.pi * A**4 / 2, rel=1e-12)
    assert const_C_A(0.0, A, 1) == pytest.approx(2 * A, rel=1e-12)


@settings(max_examples=60)
@given(st.floats(0.05, 2.0), st.floats(1e-4, 0.05), st.floats(0.2, 1.0), st.floats(0.01, 1.0))
def test_layer_D_monotone_and_bounded(gamma, eps, omega, eps_bar):
    sbar = layer_sbar(eps_bar, eps, omega, gamma)
    if sbar <= 0:
        return
    s = np.linspace(0.0, sbar, 50)
    D = layer_D(s, eps, omega, gamma)
    assert np.all(np.diff(D) >= -1e-12)
    assert np.all(D >= 1.0) and np.all(D <= 1.0 + eps_bar + 1e-9)
    assert layer_D(sbar, eps, omega, gamma) == pytest.approx(1.0 + eps_bar, rel=1e-9)


def test_self_similar_gamma():
    # n = 1, r = p = 1.5, q = 1: max(1 / 4, 3 / 4) * 1.1
    assert self_similar_gamma(1, 1.5, 1.5, 1.0) == pytest.approx(0.825)


# ---------------------------------------------------------------------------
# lower bound c1


def test_lower_bound_c1_scaling():
    s = problem((1, 1, 1.5, 2), dom=Interval(0, 1))
    inner, mid = Interval(0.4, 0.6), Interval(0.2, 0.8)
    c_a = lower_bound_c1(s, inner, mid, 1.0, 0.05, rho=0.5)
    c_b = lower_bound_c1(s, inner, mid, 2.0, 0.05, rho=0.5)
    assert c_b == pytest.approx(2 * c_a, rel=1e-12)
    assert lower_bound_c1(s, inner, mid, 1.0, 0.1, rho=0.5) > c_a
    # heat flow from a cutoff equal to 1 on omega0 stays below 1, so c1 > C
    assert c_a > 1.0
    with pytest.raises(ValueError):
        lower_bound_c1(s, mid, inner, 1.0, 0.05)


# ---------------------------------------------------------------------------
# candidates and verification


def test_candidate_json_roundtrip():
    c = Candidate("LayerPower", {"A": 2.0, "eps": 0.1}, "Supersolution", 0.0, 0.5)
    assert Candidate.from_json(c.to_json()) == c
    assert c.kind is Kind.SUPERSOLUTION
    with pytest.raises(ValueError):
        Candidate("Nope", {}, "Supersolution")
    with pytest.raises(ValueError):
        Candidate("LayerPower", {}, "Supersolution", 0.5, 0.5)


def test_recipe_requires_known_family_and_horizon():
    g = build_grid(UNIT, 41)
    with pytest.raises(ValueError):
        make_recipe("Nope", LAYER, g)
    with pytest.raises(ValueError):
        make_recipe("LayerPower", LAYER, g, options={"horizon": 0.0})


@pytest.mark.parametrize(
    "family,e",
    [
        ("LayerPower", (1, 1, 2, 1.5)),  # l outside the window of the layer branch
        ("EigenQuotient", (1, 1, 2, 2)),  # max(r+p, l) > 1
        ("SelfSimilar", (0.5, 0.5, 2, 1)),  # r+p <= max(q, 1)
        ("EnlargedEigenExp", (1, 1, 2.5, 2)),  # q > r+p
    ],
)
def test_recipe_outside_its_window(family, e):
    with pytest.raises(HypothesisError):
        make_recipe(family, problem(e, UniformConstant(1.0)), build_grid(UNIT, 41))


def test_exact_solution_residual_vanishes():
    fx = Fixture("Remark310", {"sigma": 1.0})
    s = ProblemSpec(Exponents(1, 1, 2, 2), fx, fx, fx, InitialConstant(1.0), UNIT)
    g = build_grid(UNIT, 51)
    c = make_recipe("ExactRemark310", s, g)
    rep = verify_candidate(c, s, g)
    assert rep.passed and rep.kind is Kind.EXACT
    assert abs(rep.interior_min_residual) < 1e-9 and abs(rep.boundary_min_residual) < 1e-9


def test_time_grid_must_lie_in_region():
    g = build_grid(UNIT, 41)
    c = Candidate("FlatExp", {"amplitude": 0.1, "lambda1": math.pi**2}, "Supersolution", 0.0, 0.5)
    fx = Fixture("Remark36", {"b": 1.0, "k": 0.05})
    s = ProblemSpec(Exponents(1, 1, 2, 2), fx, fx, fx, InitialConstant(0.05), UNIT)
    with pytest.raises(ValueError):
        verify_candidate(c, s, g, np.linspace(0.0, 1.0, 5))


def test_layer_power_passes_and_flipped_kind_fails():
    g = build_grid(UNIT, 101)
    c = make_recipe("LayerPower", LAYER, g)
    rep = verify_candidate(c, LAYER, g)
    assert rep.passed and rep.initial_ordering
    flipped = Candidate(c.family, c.params, Kind.SUBSOLUTION, c.t_min, c.t_max)
    bad = verify_candidate(flipped, LAYER, g)
    assert not bad.passed and bad.interior_min_scaled < -1e-3
    js = rep.to_json()
    assert js["passed"] is True and js["initial_ordering"] == "pass"


def test_broken_parameters_fail():
    g = build_grid(UNIT, 101)
    c = make_recipe("LayerPower", LAYER, g)
    # a thousand times smaller amplitude cannot absorb the source term
    weak = Candidate(c.family, {**c.params, "A": c.params["A"] * 1e-3}, c.kind, c.t_min, c.t_max)
    assert not verify_candidate(weak, LAYER, g).passed


def test_candidate_field_is_nodal():
    g = build_grid(UNIT, 41)
    c = make_recipe("LayerPower", LAYER, g)
    v = candidate_field(c, LAYER, g, 0.0)
    assert v.shape == (41,) and np.all(v > 0)


@pytest.mark.parametrize(
    "family,e,k,u0",
    [
        ("EigenODE", (1, 1, 1.5, 2), KernelZero(), ScaledEigen(0.01)),
        ("EnlargedEigenF", (1, 1, 1, 2), RAMP, ScaledEigen(0.01)),
        ("SelfSimilar", (1.5, 1.5, 1, 1), KernelZero(), InitialConstant(0.0)),
    ],
)
def test_other_recipes_verify(family, e, k, u0):
    s = problem(e, k, u0)
    g = build_grid(UNIT, 101)
    c = make_recipe(family, s, g)
    rep = verify_candidate(c, s, g, np.linspace(c.t_min, c.t_max, 21))
    assert rep.passed, rep.to_json()


@pytest.mark.parametrize(
    "family,e,k,u0",
    [
        ("LayerPower", (0.5, 0.25, 4, 1.25), UniformConstant(1.0), InitialConstant(1.0)),
        ("SelfSimilar", (1.5, 1.5, 1, 1), KernelZero(), InitialConstant(0.0)),
        ("EnlargedEigenExp", (1, 1, 1.5, 2), RAMP, ScaledEigen(0.05)),
    ],
)
def test_disc_recipes_verify(family, e, k, u0):
    s = problem(e, k, u0, dom=Disc(1.0))
    g = build_grid(Disc(1.0), 81)
    c = make_recipe(family, s, g)
    rep = verify_candidate(c, s, g, np.linspace(c.t_min, c.t_max, 21))
    assert rep.passed, rep.to_json()


def test_families_listed():
    assert {"EigenQuotient", "LayerPower", "SelfSimilar", "EnlargedEigenF"} <= set(FAMILIES)
