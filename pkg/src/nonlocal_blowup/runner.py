"""Experiment orchestration behind the command line.

:func:`run_config` loads a JSON config, executes it and writes artifacts
named after the config file (``<stem>_summary.json``, ``<stem>_trace.csv``,
...).  Exit status: 0 success, 2 schema error, 3 hypothesis violation,
4 numerical failure.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .certificates import Candidate, make_recipe, verify_candidate
from .config import ExperimentConfig, load_config
from .domain import build_grid
from .errors import HypothesisError, NumericalError
from .model import Fixture, InitialConstant, ProblemSpec, analytic_lambda1, check_compatibility, compile_problem
from .profile import verify_profile_flags
from .regimes import classify, dichotomy_experiment
from .solver import SolveResult, Trace, fit_lower_bound_d, solve, write_trace_csv
from .spectral import Normalization, first_eigenpair

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SCHEMA, EXIT_HYPOTHESIS, EXIT_NUMERICAL = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# writers


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, Decimal):
        return str(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def emit_summary(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n")


def emit_traces(path, trace: Trace) -> None:
    write_trace_csv(path, trace)


def emit_gnuplot(path, csv_name: str, title: str) -> None:
    Path(path).write_text(
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set logscale y\n"
        "set xlabel 't'\n"
        f"set title '{title}'\n"
        f"plot '{csv_name}' using 1:2 with lines, '' using 1:3 with lines\n"
    )


# ---------------------------------------------------------------------------
# experiments


def _exact_remark310_rate(spec: ProblemSpec) -> float | None:
    fx = (spec.a, spec.b, spec.k)
    if all(isinstance(c, Fixture) and c.tag == "Remark310" for c in fx) and isinstance(spec.u0, InitialConstant):
        if spec.u0.c == 1.0:
            return spec.a.remark310_rate(spec.fixture_context())
    return None


def _outcome_summary(res: SolveResult) -> dict:
    return {
        "outcome": res.outcome.to_json(),
        "steps": res.steps,
        "t_final": res.final_state.t,
        "sup_final": float(res.final_state.u.max()),
        "time_error_estimate": res.time_error,
    }


def run_solve(cfg: ExperimentConfig, spec: ProblemSpec, grid, out: Path, stem: str, gnuplot: bool) -> dict:
    controls = cfg.controls.build()
    rate = _exact_remark310_rate(spec)
    if rate is not None and not controls.snapshot_times:
        controls = dataclasses.replace(controls, snapshot_times=tuple(np.linspace(0.0, controls.t_end, 11)[1:]))
    res = solve(spec, grid, controls, waive_compatibility=cfg.waive_compatibility)
    eig = first_eigenpair(grid, Normalization.INTEGRAL_ONE)
    summary = {"lambda1": eig.lambda1, **_outcome_summary(res)}
    if rate is not None:
        errs = [float(np.abs(u - math.exp(-rate * t)).max()) for t, u in res.snapshots]
        errs.append(float(np.abs(res.final_state.u - math.exp(-rate * res.final_state.t)).max()))
        summary["exact_rate"] = rate
        summary["max_sup_error"] = max(errs)
    if cfg.fit_lower_bound_t0 is not None:
        summary["d_lower_bound"] = fit_lower_bound_d(res, eig, cfg.fit_lower_bound_t0, grid)
    emit_traces(out / f"{stem}_trace.csv", res.traces)
    if gnuplot:
        emit_gnuplot(out / f"{stem}_trace.gp", f"{stem}_trace.csv", stem)
    return summary


def _candidate_from_cfg(cfg: ExperimentConfig, spec, grid) -> Candidate:
    cc = cfg.candidate
    if cc is None:
        raise HypothesisError("certify needs a 'candidate' block")
    if cc.params is None:
        opts = {"horizon": cfg.controls.t_end, **cc.recipe_options}
        return make_recipe(cc.family, spec, grid, options=opts)
    region = cc.region or {}
    if cc.kind is None:
        raise HypothesisError("an explicit candidate needs its 'kind'")
    return Candidate(
        cc.family, dict(cc.params), cc.kind, region.get("t_min", 0.0), region.get("t_max", cfg.controls.t_end)
    )


def run_certify(cfg: ExperimentConfig, spec, grid, out: Path, stem: str, gnuplot: bool) -> dict:
    cand = _candidate_from_cfg(cfg, spec, grid)
    t_grid = np.linspace(cand.t_min, cand.t_max, cfg.t_samples)
    rep = verify_candidate(cand, spec, grid, t_grid)
    emit_summary(out / f"{stem}_candidate.json", cand.to_json())
    return {"candidate": cand.to_json(), "residuals": rep.to_json()}


def _profile(cfg: ExperimentConfig, spec: ProblemSpec):
    c = cfg.classify
    g = build_grid(spec.domain, 65)
    return verify_profile_flags(spec, c.hypotheses, c.horizon, c.samples, grid=g, assert_names=c.asserted)


def run_classify(cfg: ExperimentConfig, spec, grid, out: Path, stem: str, gnuplot: bool) -> dict:
    prof = _profile(cfg, spec)
    verdict = classify(spec.exponents, prof)
    summary = {"verdict": verdict.to_json(), "profile": prof.to_json()}
    if cfg.scales:
        rep = dichotomy_experiment(
            spec, grid, cfg.scales, cfg.controls.build(), waive_compatibility=cfg.waive_compatibility
        )
        summary["dichotomy"] = rep.to_json()
    return summary


# sweeps ---------------------------------------------------------------------

_EXPONENT_AXES = ("r", "p", "q", "l", "r+p")
_SCALAR_AXES = {"a.c": ("a", "c"), "b.c": ("b", "c"), "k.k0": ("k", "k0")}


def _apply_axis(d: dict, name: str, value: Decimal) -> None:
    if name == "r+p":
        half = value / 2
        d["spec"]["exponents"]["r"] = str(half)
        d["spec"]["exponents"]["p"] = str(half)
    elif name in ("r", "p", "q", "l"):
        d["spec"]["exponents"][name] = str(value)
    elif name in _SCALAR_AXES:
        block, key = _SCALAR_AXES[name]
        if key not in d["spec"][block]:
            raise HypothesisError(f"sweep axis {name} needs a coefficient with field '{key}'")
        d["spec"][block][key] = float(value)
    else:
        raise HypothesisError(f"unknown sweep axis {name!r}; use one of {_EXPONENT_AXES + tuple(_SCALAR_AXES)}")


def sweep_cells(cfg: ExperimentConfig) -> list[tuple]:
    axes = cfg.sweep.axes
    cells = list(itertools.product(*[sorted(a.values) for a in axes])) if axes else [()]
    if len(cells) > cfg.sweep.max_cells:
        raise HypothesisError(f"sweep has {len(cells)} cells, cap is {cfg.sweep.max_cells}")
    return cells


def _sweep_cell(cfg: ExperimentConfig, values: tuple) -> dict:
    row = {a.name: str(v) for a, v in zip(cfg.sweep.axes, values)}
    try:
        d = cfg.model_dump(mode="json")
        for a, v in zip(cfg.sweep.axes, values):
            _apply_axis(d, a.name, v)
        cell = ExperimentConfig.model_validate(d)
        spec = cell.spec.build()
        verdict = classify(spec.exponents, _profile(cell, spec))
        row["predicates"] = ";".join(f"{p.predicate}({p.branch})" for p in verdict.predictions) or "Indeterminate"
        if cfg.sweep.scales:
            grid = build_grid(spec.domain, cell.grid.n)
            rep = dichotomy_experiment(
                spec, grid, cfg.sweep.scales, cell.controls.build(), waive_compatibility=cell.waive_compatibility
            )
            for c, k in zip(rep.scales, rep.outcomes):
                row[f"scale_{c:g}"] = k
        row["error"] = ""
    except (HypothesisError, NumericalError, ValidationError, ValueError) as exc:
        row.setdefault("predicates", "")
        row["error"] = f"{type(exc).__name__}: {str(exc).splitlines()[0]}"
    return row


def sweep(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    """Rows of the regime map in lexicographic axis order."""
    cells = sweep_cells(cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda v: _sweep_cell(cfg, v), cells))
    return [_sweep_cell(cfg, v) for v in cells]


def write_sweep_csv(path, cfg: ExperimentConfig, rows: list[dict]) -> None:
    cols = [a.name for a in cfg.sweep.axes] + ["predicates"]
    cols += [f"scale_{c:g}" for c in cfg.sweep.scales] + ["error"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({c: row.get(c, "") for c in cols})


def run_sweep(cfg: ExperimentConfig, spec, grid, out: Path, stem: str, gnuplot: bool, threads: int = 1) -> dict:
    rows = sweep(cfg, threads)
    write_sweep_csv(out / f"{stem}_sweep.csv", cfg, rows)
    return {"cells": len(rows), "failed_cells": sum(1 for r in rows if r["error"])}


# compare --------------------------------------------------------------------


def compare(cfg: ExperimentConfig, spec: ProblemSpec, grid) -> tuple[dict, SolveResult, SolveResult]:
    """Solve from ``u0`` and from ``second_u0`` and measure ``max(u - v)`` at shared times."""
    if cfg.second_u0 is None:
        raise HypothesisError("compare needs 'second_u0' (the upper initial datum)")
    spec_v = spec.with_u0(cfg.second_u0.build())
    u0 = compile_problem(spec, grid).u0
    v0 = compile_problem(spec_v, grid).u0
    if np.any(u0 > v0):
        i = int(np.argmax(u0 - v0))
        raise HypothesisError(f"comparison needs u0 <= v0 at every node; fails at x={grid.nodes[i]:.6g}")
    e = spec.exponents
    if min(e.r, e.p, e.l) < 1 and u0.min() <= 0 and v0.min() <= 0:
        raise HypothesisError(
            "comparison principle proviso: if min(r,p,l) < 1 one of the initial data must be strictly positive"
        )
    controls = cfg.controls.build()
    if not controls.snapshot_times:
        controls = dataclasses.replace(controls, snapshot_times=tuple(np.linspace(0.0, controls.t_end, 21)[1:]))
    ru = solve(spec, grid, controls, waive_compatibility=cfg.waive_compatibility)
    rv = solve(spec_v, grid, controls, waive_compatibility=cfg.waive_compatibility)
    vs = dict((round(t, 12), v) for t, v in rv.snapshots)
    worst, worst_rel, worst_t = -np.inf, -np.inf, None
    compared = 0
    for t, u in [(0.0, u0)] + list(ru.snapshots):
        v = v0 if t == 0.0 else vs.get(round(t, 12))
        if v is None:
            continue
        compared += 1
        viol = float((u - v).max())
        rel = viol / max(float(np.abs(v).max()), 1e-300)
        if rel > worst_rel:
            worst, worst_rel, worst_t = viol, rel, t
    report = {
        "compared_times": compared,
        "max_violation": worst,
        "max_relative_violation": worst_rel,
        "worst_time": worst_t,
        "tolerance": 1e-8,
        "ordered": bool(worst_rel <= 1e-8),
        "outcome_u": ru.outcome.to_json(),
        "outcome_v": rv.outcome.to_json(),
    }
    return report, ru, rv


def run_compare(cfg: ExperimentConfig, spec, grid, out: Path, stem: str, gnuplot: bool) -> dict:
    report, ru, rv = compare(cfg, spec, grid)
    emit_traces(out / f"{stem}_trace_u.csv", ru.traces)
    emit_traces(out / f"{stem}_trace_v.csv", rv.traces)
    if gnuplot:
        emit_gnuplot(out / f"{stem}_trace_u.gp", f"{stem}_trace_u.csv", f"{stem} lower")
        emit_gnuplot(out / f"{stem}_trace_v.gp", f"{stem}_trace_v.csv", f"{stem} upper")
    return {"comparison": report}


def run_eig(cfg: ExperimentConfig, spec, grid, out: Path, stem: str, gnuplot: bool) -> dict:
    pair = first_eigenpair(grid, cfg.normalization)
    exact = analytic_lambda1(spec.domain)
    with open(out / f"{stem}_eigenfunction.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "phi"])
        for x, v in zip(grid.nodes, pair.phi):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])
    return {
        "lambda1": pair.lambda1,
        "lambda1_continuous": exact,
        "relative_error": abs(pair.lambda1 - exact) / exact,
        "iterations": pair.iterations,
        "normalization": pair.normalization.value,
    }


_RUNNERS = {
    "solve": run_solve,
    "certify": run_certify,
    "classify": run_classify,
    "compare": run_compare,
    "eig": run_eig,
}


def execute(cfg: ExperimentConfig, out: Path, stem: str, *, threads: int = 1, gnuplot: bool = False) -> dict:
    """Run ``cfg`` and write its artifacts into ``out``; returns the summary."""
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.spec.build()
    grid = build_grid(spec.domain, cfg.grid.n)
    if cfg.kind == "sweep":
        body = run_sweep(cfg, spec, grid, out, stem, gnuplot, threads)
    else:
        body = _RUNNERS[cfg.kind](cfg, spec, grid, out, stem, gnuplot)
    summary = {
        "kind": cfg.kind,
        "config_hash": cfg.config_hash(),
        "version": __version__,
        "grid_n": grid.n,
        **body,
    }
    if cfg.kind in ("solve", "compare", "certify"):
        summary["compatibility"] = dataclasses.asdict(check_compatibility(spec, grid))
    emit_summary(out / f"{stem}_summary.json", summary)
    return summary


def run_config(
    path,
    out_dir=None,
    *,
    threads: int = 1,
    gnuplot: bool = False,
    expected_kind: str | None = None,
) -> int:
    """Load, run and write artifacts; returns the process exit status."""
    path = Path(path)
    try:
        cfg = load_config(path)
    except ValidationError as exc:
        log.error("schema error in %s:\n%s", path, exc)
        return EXIT_SCHEMA
    except (OSError, ValueError) as exc:
        log.error("cannot read config %s: %s", path, exc)
        return EXIT_SCHEMA
    if expected_kind is not None and cfg.kind != expected_kind:
        log.error("config kind %r does not match subcommand %r", cfg.kind, expected_kind)
        return EXIT_SCHEMA
    out = Path(out_dir) if out_dir is not None else path.parent
    try:
        execute(cfg, out, path.stem, threads=threads, gnuplot=gnuplot)
    except HypothesisError as exc:
        log.error("hypothesis violation: %s", exc)
        return EXIT_HYPOTHESIS
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # values that pass the schema but are inconsistent with each other
        log.error("invalid configuration: %s", exc)
        return EXIT_SCHEMA
    return EXIT_OK
