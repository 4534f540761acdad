"""Command line driver: ``fracnehari {solve,sweep,fibering,moser,superlinear,lambda0}``.

Every subcommand writes ``summary.json`` to ``--out`` plus its CSV tables and
returns 0 on success, 2 on configuration or hypothesis errors, 3 when a
solver does not converge and 4 on a mountain-pass level violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .config import SCHEMA_VERSION, ExperimentConfig
from .errors import (
    ConfigurationError,
    FracNehariError,
    HypothesisFailure,
    LevelViolationError,
    NoProjectionError,
)
from .fibering import lambda0_estimate, project, random_direction
from .model import concave_term
from .moser import moser_basis, moser_family, mt_sup_harness, plateau_slope
from .pipeline import EXIT_CONFIG, EXIT_LEVEL, EXIT_NONCONVERGED, EXIT_OK, run_two_solutions
from .superlinear import default_model, mp_solve, quadratic_model, scaled_quadratic_model

log = logging.getLogger("fracnehari")

SUMMARY = "summary.json"


# output helpers -----------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path: Path, data: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: Path, header: list, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for v in r])


def _envelope(command: str, cfg: ExperimentConfig) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "seed": cfg.seed,
            "config": cfg.to_dict()}


def _lambda0(cfg, basis):
    params = cfg.build_params(basis, 1.0)
    est = lambda0_estimate(params, n_samples=cfg.lambda0.n_samples, seed=cfg.seed, r=cfg.lambda0.r)
    block = {"C_star_hat": est.C_star_hat, "a": est.a, "C_f": est.C_f,
             "lambda0_hat": est.lambda0_hat, "samples_used": est.samples_used, "r": est.r}
    return est, block


def _resolve_lambda(cfg, lambda0_hat):
    if cfg.params.lam is not None:
        return float(cfg.params.lam)
    return cfg.params.lambda_factor * lambda0_hat


# commands -----------------------------------------------------------------------


def run_solve(cfg: ExperimentConfig, out: Path, workers: int | None = None):
    """lambda0 estimate, N+ minimiser and mountain pass at one lambda."""
    out.mkdir(parents=True, exist_ok=True)
    basis = cfg.build_basis()
    est, l0 = _lambda0(cfg, basis)
    lam = _resolve_lambda(cfg, est.lambda0_hat)
    params = cfg.build_params(basis, lam)
    s = cfg.solver
    res = run_two_solutions(
        params, n_starts=s.n_starts, seed=cfg.seed, tol_grad=s.tol_grad, tol_res=s.tol_res,
        tol_res_second=s.tol_res_second, max_iter=s.max_iter, path_nodes=s.path_nodes,
        deform_max_steps=s.deform_max_steps, deform_tol=s.deform_tol,
        lambda0_hat=est.lambda0_hat, n_jobs=workers,
    )
    x = basis.nodes
    cols = [x]
    for rec in (res.first, res.second):
        if rec is None:
            cols += [np.full(x.size, np.nan)] * 2
        else:
            cols += list(basis.synthesize(rec.field))
    rows = [[None if (isinstance(v, float) and math.isnan(v)) else v for v in r]
            for r in zip(*[c.tolist() for c in cols])]
    write_csv(out / "solutions.csv", ["x", "w1_first", "w2_first", "w1_second", "w2_second"], rows)

    summary = _envelope("solve", cfg)
    summary.update(lambda0=l0, **{"lambda": lam})
    summary.update(_result_block(res, params))
    if res.first is not None:
        prof = project(res.first.field, params)
        write_csv(out / "fibering.csv", ["t", "psi", "lambda_B"],
                  [(t, p, lam * prof.B) for t, p in prof.psi_samples])
        summary["fibering"] = {"t_plus": prof.t_plus, "t_star": prof.t_star,
                               "t_minus": prof.t_minus, "case": prof.case_tag}
    return summary, res.exit_code


def _result_block(res, params) -> dict:
    first = None if res.first is None else res.first.summary()
    second = None if res.second is None else res.second.summary()
    block = {"status": res.status, "exit_code": res.exit_code, "first": first, "second": second,
             "level": res.level, "gap": res.gap, "errors": res.errors}
    if res.first is not None:
        E = res.first.energy
        block["level_window"] = [E, E + math.pi / 2]
        u, v = params.traces(res.first.field)
        C = float(params.basis.grid.integrate(np.abs(u) ** params.alpha * np.abs(v) ** params.beta))
        a, pq = params.ab, params.pq
        block["theta_upper_bound"] = -(a - pq) * (a - 2) / (2 * pq) * C
    return block


def _sweep_one(cfg, basis, lam, lambda0_hat):
    params = cfg.build_params(basis, lam)
    s = cfg.solver
    return run_two_solutions(
        params, n_starts=s.n_starts, seed=cfg.seed, tol_grad=s.tol_grad, tol_res=s.tol_res,
        tol_res_second=s.tol_res_second, max_iter=s.max_iter, path_nodes=s.path_nodes,
        deform_max_steps=s.deform_max_steps, deform_tol=s.deform_tol, lambda0_hat=lambda0_hat,
    )


SWEEP_HEADER = ["lambda", "theta", "rho", "second_energy", "norm_first", "norm_second", "gap",
                "converged_first", "converged_second", "dominates", "status"]


def run_sweep(cfg: ExperimentConfig, out: Path, workers: int | None = None):
    """Two-solution pipeline over ascending lambda; one CSV row per lambda."""
    out.mkdir(parents=True, exist_ok=True)
    basis = cfg.build_basis()
    est, l0 = _lambda0(cfg, basis)
    lams = cfg.sweep_lambdas(est.lambda0_hat)
    if workers and workers > 1:
        results = Parallel(n_jobs=workers)(
            delayed(_sweep_one)(cfg, basis, lam, est.lambda0_hat) for lam in lams)
    else:
        results = [_sweep_one(cfg, basis, lam, est.lambda0_hat) for lam in lams]
    rows = [r.row() for r in results]
    write_csv(out / "sweep.csv", SWEEP_HEADER, [[row[k] for k in SWEEP_HEADER] for row in rows])
    summary = _envelope("sweep", cfg)
    summary.update(lambda0=l0, rows=rows, errors={str(r.lam): r.errors for r in results if r.errors})
    code = EXIT_OK if all(r.exit_code == EXIT_OK for r in results) else EXIT_NONCONVERGED
    if any(r.exit_code == EXIT_LEVEL for r in results):
        code = EXIT_LEVEL
    summary["exit_code"] = code
    return summary, code


def run_fibering(cfg: ExperimentConfig, out: Path, workers: int | None = None):
    """Fibering profile of one seeded positive random direction."""
    out.mkdir(parents=True, exist_ok=True)
    basis = cfg.build_basis()
    est, l0 = _lambda0(cfg, basis)
    lam = _resolve_lambda(cfg, est.lambda0_hat)
    params = cfg.build_params(basis, lam)
    w = random_direction(basis, np.random.default_rng([cfg.seed, 0]), positive=True)
    summary = _envelope("fibering", cfg)
    summary.update(lambda0=l0, **{"lambda": lam, "B": concave_term(w, params)})
    try:
        prof = project(w, params)
    except NoProjectionError as exc:
        summary.update(status="no_projection", message=str(exc), exit_code=EXIT_NONCONVERGED)
        return summary, EXIT_NONCONVERGED
    write_csv(out / "fibering.csv", ["t", "psi", "lambda_B"],
              [(t, p, lam * prof.B) for t, p in prof.psi_samples])
    summary.update(status="ok", exit_code=EXIT_OK, case=prof.case_tag, t_plus=prof.t_plus,
                   t_star=prof.t_star, t_minus=prof.t_minus)
    return summary, EXIT_OK


def run_lambda0(cfg: ExperimentConfig, out: Path, workers: int | None = None):
    """Sampled estimate of the multiplicity threshold lambda0."""
    out.mkdir(parents=True, exist_ok=True)
    _, l0 = _lambda0(cfg, cfg.build_basis())
    summary = _envelope("lambda0", cfg)
    summary.update(lambda0=l0, exit_code=EXIT_OK)
    return summary, EXIT_OK


def run_moser(cfg: ExperimentConfig, out: Path, workers: int | None = None):
    """Plateau law and Trudinger-Moser growth tables."""
    out.mkdir(parents=True, exist_ok=True)
    m = cfg.moser
    basis = moser_basis(max(m.k_values), m.modes_per_k)
    fam = moser_family(m.k_values, basis)
    write_csv(out / "moser_plateau.csv", ["k", "plateau", "plateau_sq", "pair_plateau_sq", "raw_norm"],
              [(k, p, p * p, p * p / 2, r) for k, p, r in zip(fam.k_values, fam.plateau, fam.raw_norms)])
    rows, reports = [], {}
    for f in m.a_factors:
        a = f * math.pi
        rep = mt_sup_harness(m.n_samples, a, cfg.seed, basis, m.k_values, fam)
        rows += [(f, a, k, v) for k, v in rep.growth]
        k_lo, k_hi = min(m.k_values), max(m.k_values)
        reports[repr(float(f))] = {
            "a": a, "max": rep.max_value, "argmax": rep.argmax, "random_max": rep.random_max,
            "increasing": rep.increasing, "ratio_kmax_kmin": rep.growth_ratio(k_hi, k_lo),
            "ratio_4096_64": rep.growth_ratio() if {64, 4096} <= set(m.k_values) else None,
            "finite": not rep.overflowed,
        }
    write_csv(out / "moser.csv", ["a_over_pi", "a", "k", "value"], rows)
    summary = _envelope("moser", cfg)
    summary.update(plateau_slope=plateau_slope(fam), pair_plateau_slope=plateau_slope(fam, pair=True),
                   slope_target=1 / math.pi, pair_slope_target=1 / (2 * math.pi),
                   harness=reports, exit_code=EXIT_OK)
    return summary, EXIT_OK


_MODELS = {
    "default": default_model,
    "quadratic": quadratic_model,
    "lambda1_quadratic": lambda: scaled_quadratic_model(math.pi),
}


def run_superlinear(cfg: ExperimentConfig, out: Path, workers: int | None = None):
    """Hypothesis check and mountain-pass solution of the superlinear system."""
    out.mkdir(parents=True, exist_ok=True)
    basis = cfg.build_basis()
    model = _MODELS[cfg.superlinear.model]()
    summary = _envelope("superlinear", cfg)
    summary["model"] = model.name
    s = cfg.solver
    try:
        res = mp_solve(model, basis, seed=cfg.seed, n_nodes=s.path_nodes,
                       max_steps=s.deform_max_steps, tol=s.deform_tol, tol_grad=s.tol_grad)
    except HypothesisFailure as exc:
        summary.update(status="hypothesis_failure", failed=exc.failed, exit_code=EXIT_CONFIG)
        return summary, EXIT_CONFIG
    except LevelViolationError as exc:
        summary.update(status="level_violation", message=str(exc), exit_code=EXIT_LEVEL)
        return summary, EXIT_LEVEL
    except FracNehariError as exc:
        summary.update(status="failed", error=type(exc).__name__, message=str(exc),
                       exit_code=EXIT_NONCONVERGED)
        return summary, EXIT_NONCONVERGED
    u, v = basis.synthesize(res.record.field)
    write_csv(out / "superlinear.csv", ["x", "w1", "w2"], zip(basis.nodes, u, v))
    code = EXIT_OK if res.record.converged else EXIT_NONCONVERGED
    summary.update(status="ok" if code == EXIT_OK else "not_converged", exit_code=code,
                   hypotheses={"passed": res.hypotheses.all_pass, **res.hypotheses.details},
                   level=res.level, rim=res.rim, weak_residual=res.weak_residual,
                   record=res.record.summary(), pi_over_2=math.pi / 2)
    return summary, code


COMMANDS = {
    "solve": run_solve,
    "sweep": run_sweep,
    "fibering": run_fibering,
    "moser": run_moser,
    "superlinear": run_superlinear,
    "lambda0": run_lambda0,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracnehari", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).splitlines()[0])
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--workers", type=int, default=None, help="parallel workers")
        p.add_argument("--lambda", dest="lam", type=float, help="override lambda")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.lam is not None:
        cfg.params.lam = args.lam
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = load_config(args)
        summary, code = COMMANDS[args.command](cfg, args.out, args.workers)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary["timing"] = {"wall_time_s": time.perf_counter() - t0}
    write_json(args.out / SUMMARY, summary)
    print(json.dumps({"command": args.command, "exit_code": code, "out": str(args.out)}))
    return code


if __name__ == "__main__":
    sys.exit(main())
