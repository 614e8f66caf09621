"""Command-line entry point ``evolsolve``.

Exit status: 0 on success, 1 on a solver or check failure, 2 on a
configuration error.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import diagnostics, records
from .config import load_config
from .continuation import direct_monolithic_solve, solve_ibvp
from .domain import validate_problem
from .errors import ConfigParseError, ConfigValidationError, EvolsolveError, ExpressionError, ValidationError
from .manufacture import convergence_study, solution_error
from .norms import check_compatibility
from .operators import lopatinskii_check

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
COMMANDS = ("solve", "check", "diagnose", "study", "bench")


class ConfigProblem(Exception):
    """Raised inside a command for input errors that map to exit status 2."""


def build_parser():
    parser = argparse.ArgumentParser(prog="evolsolve", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the run configuration")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
    parser.add_argument("--refinements", type=int, help="refinement levels for study (overrides run.refinements)")
    parser.add_argument("--theta0", type=float, help="sector angle in radians (overrides diagnostics.theta0)")
    return parser


def _apply_overrides(cfg, args):
    overrides = {}
    if args.out is not None:
        overrides["output__dir"] = args.out
    if args.seed is not None:
        overrides["run__seed"] = args.seed
    if args.refinements is not None:
        overrides["run__refinements"] = args.refinements
    if args.theta0 is not None:
        overrides["diagnostics__theta0"] = args.theta0
    return cfg.with_overrides(**overrides) if overrides else cfg


def _problem(cfg):
    try:
        return validate_problem(cfg.problem_spec())
    except (ValidationError, ExpressionError) as exc:
        raise ConfigProblem(str(exc)) from exc


def _error_payload(exc):
    return {"type": type(exc).__name__, "message": str(exc)}


def _finish(out, command, status, payload, cfg):
    records.write_json(os.path.join(out, "summary.json"), {"command": command, "status": status, **payload})
    with open(os.path.join(out, "effective.cfg"), "w", encoding="utf-8") as fh:
        fh.write(cfg.effective_text())


def cmd_solve(cfg, out):
    problem = _problem(cfg)
    settings = cfg.solver_settings()
    try:
        u, report = solve_ibvp(problem, settings=settings)
    except EvolsolveError as exc:
        payload = {"error": _error_payload(exc)}
        compat = getattr(exc, "report", None)
        if compat is not None:
            records.write_csv(os.path.join(out, "compat.csv"), records.COMPAT_COLUMNS, records.compat_rows(compat))
        _finish(out, "solve", "failed", payload, cfg)
        print(f"solve failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    error = solution_error(u, cfg["problem.exact"], problem) if cfg.manufactured else None
    records.write_csv(os.path.join(out, "report.csv"), records.REPORT_COLUMNS, records.report_rows(report, error))
    if cfg["output.solution"]:
        records.write_csv(os.path.join(out, "solution.csv"), records.SOLUTION_COLUMNS, records.solution_rows(u))
    payload = {
        "windows": len(report.windows),
        "iterations": report.total_iterations,
        "halvings": report.halvings,
        "calibration": report.calibration,
        "factorizations": report.factorizations,
        "c_est": report.c_est,
        "error": error,
        "wall_time": report.wall_time,
    }
    _finish(out, "solve", "ok", payload, cfg)
    msg = f"solved: {len(report.windows)} window(s), {report.total_iterations} iterations"
    if error is not None:
        msg += f", error {error:.3e}"
    print(msg)
    return EXIT_OK


def cmd_check(cfg, out):
    problem = _problem(cfg)
    report = check_compatibility(problem)
    lop = lopatinskii_check(problem)
    records.write_csv(os.path.join(out, "compat.csv"), records.COMPAT_COLUMNS, records.compat_rows(report))
    passed = report.passed and lop.passed
    payload = {
        "compatible": report.passed,
        "lopatinskii": lop.passed,
        "regimes": {e.side: e.regime for e in report.entries},
    }
    _finish(out, "check", "ok" if passed else "failed", payload, cfg)
    for e in report.entries:
        print(f"{e.side:5s} {e.kind:9s} k={e.k:.4f} regime={e.regime:9s} {'pass' if e.passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_diagnose(cfg, out):
    problem = _problem(cfg)
    seed = cfg["run.seed"]
    n = problem.time_grid.n_steps
    taus = np.unique(np.linspace(0, n, cfg["diagnostics.n_taus"]).round().astype(int))
    radii = np.logspace(np.log10(cfg["diagnostics.r_min"]), np.log10(cfg["diagnostics.r_max"]), cfg["diagnostics.n_radii"])
    try:
        sector = diagnostics.sector_bound(
            problem, cfg["diagnostics.theta0"], taus, radii, iterations=cfg["diagnostics.iterations"], seed=seed
        )
        tables = [diagnostics.modulus_of_continuity(problem, c, cfg["diagnostics.deltas"]) for c in "ABQ"]
        forcings, labels = diagnostics.default_forcings(problem, cfg["diagnostics.n_random"], seed)
        maxreg = diagnostics.maxreg_ratio(problem, cfg["diagnostics.gammas"], forcings, labels)
    except EvolsolveError as exc:
        _finish(out, "diagnose", "failed", {"error": _error_payload(exc)}, cfg)
        print(f"diagnose failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    records.write_csv(os.path.join(out, "sector.csv"), records.SECTOR_COLUMNS, records.sector_rows(sector))
    records.write_csv(os.path.join(out, "moduli.csv"), records.MODULI_COLUMNS, records.moduli_rows(tables))
    records.write_csv(os.path.join(out, "maxreg.csv"), records.MAXREG_COLUMNS, records.maxreg_rows(maxreg))
    payload = {
        "sector_bound": sector.bound,
        "label": sector.label,
        "maxreg_spread": float(np.max(maxreg.spread())),
    }
    _finish(out, "diagnose", "ok", payload, cfg)
    print(f"sector bound {sector.bound:.6f} ({sector.label}); max-regularity spread {payload['maxreg_spread']:.3f}")
    return EXIT_OK


def cmd_study(cfg, out):
    if not cfg.manufactured:
        raise ConfigProblem("study needs problem.exact")
    _problem(cfg)
    kinds = ("time", "space") if cfg["run.study"] == "both" else (cfg["run.study"],)
    rows = []
    orders = {}
    try:
        for kind in kinds:
            result = convergence_study(
                cfg["problem.exact"], cfg.skeleton(), cfg["run.refinements"], kind, cfg.solver_settings()
            )
            rows.extend(records.study_rows(result))
            orders[kind] = result.order
    except EvolsolveError as exc:
        _finish(out, "study", "failed", {"error": _error_payload(exc)}, cfg)
        print(f"study failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    records.write_csv(os.path.join(out, "study.csv"), records.STUDY_COLUMNS, rows)
    _finish(out, "study", "ok", {"orders": orders}, cfg)
    for kind, order in orders.items():
        print(f"{kind} order: {order if isinstance(order, str) else f'{order:.3f}'}")
    return EXIT_OK


def cmd_bench(cfg, out):
    problem = _problem(cfg)
    try:
        start = time.perf_counter()
        u, report = solve_ibvp(problem, settings=cfg.solver_settings())
        t_contraction = time.perf_counter() - start
        direct, info = direct_monolithic_solve(problem, return_info=True)
    except EvolsolveError as exc:
        _finish(out, "bench", "failed", {"error": _error_payload(exc)}, cfg)
        print(f"bench failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    row = {
        "schema": records.SCHEMA,
        "windows": len(report.windows),
        "total_iterations": report.total_iterations,
        "factorizations_contraction": report.factorizations,
        "factorizations_direct": info.factorizations,
        "walltime_ratio": t_contraction / info.wall_time if info.wall_time > 0 else float("inf"),
        "max_abs_diff": float(np.max(np.abs(u.frames - direct.frames))),
    }
    records.write_csv(os.path.join(out, "bench.csv"), records.BENCH_COLUMNS, [row])
    _finish(out, "bench", "ok", {k: v for k, v in row.items() if k != "schema"}, cfg)
    print(
        f"factorizations: contraction {row['factorizations_contraction']}, direct {row['factorizations_direct']}; "
        f"walltime ratio {row['walltime_ratio']:.2f}"
    )
    return EXIT_OK


HANDLERS = {
    "solve": cmd_solve,
    "check": cmd_check,
    "diagnose": cmd_diagnose,
    "study": cmd_study,
    "bench": cmd_bench,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigParseError as exc:
        for line, message in exc.errors:
            print(f"{args.config}:{line}: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigValidationError as exc:
        for message in exc.errors:
            print(f"{args.config}: {message}", file=sys.stderr)
        return EXIT_CONFIG
    out = records.ensure_dir(cfg["output.dir"])
    try:
        return HANDLERS[args.command](cfg, out)
    except ConfigProblem as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        _finish(out, args.command, "config-error", {"error": {"type": "ConfigError", "message": str(exc)}}, cfg)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
