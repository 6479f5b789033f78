import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_blowup.domain import Disc, Interval, build_grid, integrate
from nonlocal_blowup.errors import HypothesisError
from nonlocal_blowup.model import (
    Constant,
    ExpInTime,
    Exponents,
    InitialConstant,
    KernelZero,
    ProblemSpec,
    ScaledEigen,
    SineMode,
    UniformConstant,
)
from nonlocal_blowup.solver import (
    SolveControls,
    State,
    Trace,
    _solve_boundary_scalar,
    boundary_close,
    fit_lower_bound_d,
    functional_J,
    ode_reduction_oracle,
    read_trace_csv,
    solve,
    solve_batch,
    step,
    write_trace_csv,
)
from nonlocal_blowup.spectral import first_eigenpair

UNIT = Interval(0, 1)


def spec(e=(1, 1, 1, 1), a=0.0, b=0.0, k=KernelZero(), u0=SineMode(1.0), dom=UNIT):
    return ProblemSpec(Exponents(*e), Constant(a) if isinstance(a, float) else a, Constant(b), k, u0, dom)


def test_controls_validate():
    with pytest.raises(ValueError):
        SolveControls(t_end=0.0)
    with pytest.raises(ValueError):
        SolveControls(t_end=1.0, cfl_safety=0.6)
    with pytest.raises(ValueError):
        SolveControls(t_end=1.0, trace_stride=0)


def test_heat_decays():
    res = solve(spec(), build_grid(UNIT, 41), SolveControls(t_end=4.0))
    assert res.outcome.kind == "Decayed"
    assert res.final_state.u.max() < 1e-12


def test_disc_heat_mode():
    g = build_grid(Disc(1.0), 81)
    res = solve(spec(dom=Disc(1.0)), g, SolveControls(t_end=0.05, snapshot_times=(0.05,)))
    t, u = res.snapshots[-1]
    exact = math.exp(-(2.404825557695773**2) * t) * SineMode(1.0).values(g)
    assert np.abs(u - exact).max() < 1e-3


def test_incompatible_data_rejected():
    s = spec(k=UniformConstant(0.5), u0=InitialConstant(1.0))
    with pytest.raises(HypothesisError, match="compatibility"):
        solve(s, build_grid(UNIT, 21), SolveControls(t_end=0.1))
    res = solve(s, build_grid(UNIT, 21), SolveControls(t_end=0.01), waive_compatibility=True)
    assert res.outcome.kind == "Completed"


def test_snapshots_hit_exactly_and_traces_start_at_zero():
    times = (0.013, 0.05)
    res = solve(spec(), build_grid(UNIT, 21), SolveControls(t_end=0.05, snapshot_times=times))
    assert [t for t, _ in res.snapshots] == list(times)
    assert res.traces.t[0] == 0.0 and res.traces.t[-1] == pytest.approx(0.05)


@settings(max_examples=25)
@given(st.floats(0.5, 20.0), st.floats(0.0, 1.0), st.floats(1e-4, 0.2))
def test_boundary_newton_matches_quadratic_root(g0, base, c):
    # g = base + c g^2 has smaller root (1 - sqrt(1 - 4 c base)) / (2 c) when 4 c base < 1
    g = _solve_boundary_scalar(base, c, 2.0, g0, 1e-13, 1e12, 0.0)
    disc = 1 - 4 * c * base
    if disc > 1e-6:
        root = 2 * base / (1 + math.sqrt(disc))
        assert g == pytest.approx(root, rel=1e-10, abs=1e-14)
    elif disc < 0:
        assert g == 1e12


@settings(max_examples=25)
@given(st.floats(0.0, 5.0), st.floats(0.0, 0.99), st.floats(0.3, 1.0))
def test_boundary_closure_fixed_point(base, c, l):
    g = _solve_boundary_scalar(base, c, l, 1.0, 1e-13, 1e12, 0.0)
    assert g == pytest.approx(base + c * g**l, rel=1e-9, abs=1e-12)


def test_boundary_close_consistency():
    s = spec(e=(1, 1, 1, 2), k=UniformConstant(0.4), u0=InitialConstant(0.5))
    g = build_grid(UNIT, 41)
    u = 0.5 + 0.1 * np.sin(np.pi * g.nodes)
    gb = boundary_close(g, s, u, 0.0)
    u[g.boundary_idx] = gb
    assert gb[0] == pytest.approx(0.4 * integrate(g, u**2), rel=1e-10)


def test_step_advances():
    s = spec()
    g = build_grid(UNIT, 21)
    st0 = State(0.0, SineMode(1.0).values(g))
    st1 = step(st0, s, g, SolveControls(t_end=1.0))
    assert st1.t > 0 and st1.u.max() < st0.u.max()


def test_batch_keeps_order():
    s = spec(e=(1, 1, 2, 2), a=1.0, b=1.0, k=UniformConstant(0.5), u0=InitialConstant(0.0))
    g = build_grid(UNIT, 41)
    lo, hi = SineMode(0.5).values(g), SineMode(1.0).values(g)
    r_lo, r_hi = solve_batch(s, g, SolveControls(t_end=0.3, record_snapshots=True), [lo, hi])
    for (t1, u), (t2, v) in zip(r_lo.snapshots, r_hi.snapshots):
        assert t1 == t2 and np.all(u <= v + 1e-14)


def test_flat_solver_matches_ode_oracle():
    # u' = |Omega| u^2 - u^1.5 from u0 = 1.2, flat and l = 1 with unit kernel mass
    s = spec(e=(1, 1, 1.5, 1), a=1.0, b=1.0, k=UniformConstant(1.0), u0=InitialConstant(1.2))
    g = build_grid(UNIT, 21)
    ode = ode_reduction_oracle(s, 1.2, 10.0)
    T = ode.blowup_time
    assert T is not None
    t_check = 0.5 * T
    res = solve(s, g, SolveControls(t_end=t_check, snapshot_times=(t_check,), reaction_safety=0.02))
    u = res.snapshots[-1][1]
    assert np.abs(u - ode.u_at(t_check)).max() / ode.u_at(t_check) < 1e-4
    full = solve(s, g, SolveControls(t_end=2 * T))
    lo, hi = full.outcome.t_bracket
    assert lo <= T <= hi


def test_ode_oracle_requirements():
    with pytest.raises(HypothesisError):
        ode_reduction_oracle(spec(e=(1, 1, 1, 2), k=UniformConstant(1.0), u0=InitialConstant(1.0)), 1.0, 1.0)
    with pytest.raises(HypothesisError):
        ode_reduction_oracle(spec(k=UniformConstant(0.5), u0=InitialConstant(1.0)), 1.0, 1.0)


def test_ode_oracle_closed_form():
    # u' = u^2 from u0 = 2 blows up at 1/2
    s = spec(e=(1, 1, 1, 1), a=1.0, k=UniformConstant(1.0), u0=InitialConstant(2.0))
    ode = ode_reduction_oracle(s, 2.0, 1.0)
    assert ode.blowup_time == pytest.approx(0.5, rel=1e-10)
    assert ode.u_at(0.25) == pytest.approx(2.0 / (1 - 2 * 0.25), rel=1e-8)


def test_time_dependent_ode_oracle():
    s = ProblemSpec(Exponents(1, 1, 1, 1), ExpInTime(1.0, 1.0), Constant(0.0), UniformConstant(1.0),
                    InitialConstant(0.5), UNIT)
    ode = ode_reduction_oracle(s, 0.5, 5.0)
    # u' = e^t u^2: 1/u0 - 1/u = e^t - 1, blows up at log(1 + 1/u0) = log 3
    assert ode.blowup_time == pytest.approx(math.log(3.0), rel=1e-6)


def test_functional_J_and_lower_bound_fit():
    g = build_grid(UNIT, 41)
    eig = first_eigenpair(g)
    s = spec(u0=ScaledEigen(2.0))
    res = solve(s, g, SolveControls(t_end=0.2, snapshot_times=(0.1, 0.2)))
    # the heat flow of a discrete eigenfunction keeps J nearly constant
    J = res.traces.arrays()["J"]
    assert np.ptp(J) / J[0] < 1e-2
    assert functional_J(res.final_state, eig, g) == pytest.approx(J[-1], rel=1e-12)
    d = fit_lower_bound_d(res, eig, 0.1, g)
    assert d > 0
    with pytest.raises(ValueError):
        fit_lower_bound_d(res, eig, 5.0)


def test_trace_csv_roundtrip(tmp_path):
    tr = Trace()
    tr.append(0.0, 1.0, 0.5, 0.25, 1 / 3)
    tr.append(0.1, math.inf, 0.5, 0.25, 1e-300)
    p = tmp_path / "t.csv"
    write_trace_csv(p, tr)
    back = read_trace_csv(p)
    assert back.t == tr.t and back.I == tr.I and back.sup_norm[1] == math.inf


def test_empty_trace_is_header_only(tmp_path):
    p = tmp_path / "e.csv"
    write_trace_csv(p, Trace())
    assert p.read_text() == "t,sup_norm,mass,J,I\n"
    assert len(read_trace_csv(p)) == 0
