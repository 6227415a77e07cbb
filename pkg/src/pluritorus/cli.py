"""Command line front end.

Subcommands: ``ma``, ``npp``, ``envelope``, ``volume``, ``solve``,
``delta`` and ``verify``.  Every run reads one TOML configuration, writes
JSON summaries plus CSV node tables into the output directory, and prints
a single summary line.  Identical configuration and seed produce
bit-identical output files.

Exit codes: 0 success, 2 non-convergence, 3 infeasible or non-psef,
4 invalid arguments or parse errors, 5 sampling exhausted.

Environment overrides: ``PLURITORUS_OUTPUT_DIR`` replaces the output
directory and ``PLURITORUS_THREADS`` caps worker threads.  All numerical
kernels are single-threaded with fixed-order reductions, so results are
bit-identical for every thread count; the value is accepted and ignored
by design.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import verify as verify_mod
from .envelopes import envelope
from .errors import InfeasibleError, InvalidArgumentError, exit_code_for
from .forms import identity_metric
from .measures import delta_theta_estimate, ma, npp_mixed
from .qpsh import QPshFunction
from .serialize import (RunConfig, measure_summary, save_measure_csv,
                        save_potential_csv, write_json)
from .solver import SolverSetup, solve_normalized, solve_twisted
from .volumes import NOT_PSEF, vol_class


def _out_dir(args, cfg) -> str:
    out = os.environ.get("PLURITORUS_OUTPUT_DIR") or args.out \
        or (cfg.param("output_dir") if cfg else None) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _base_summary(cfg) -> dict:
    return {"seed": cfg.param("seed", 0)}


def _cmd_ma(args) -> int:
    cfg = RunConfig.load(args.config)
    grid = cfg.grid()
    form = cfg.form(grid)
    u = cfg.potential(grid)
    measure = ma(form, u)
    out = _out_dir(args, cfg)
    save_measure_csv(os.path.join(out, "measure.csv"), measure)
    summary = _base_summary(cfg) | measure_summary(measure)
    write_json(os.path.join(out, "ma.json"), summary)
    print(f"ma: total_mass={summary['total_mass']!r} support={summary['support_size']}")
    return 0


def _cmd_npp(args) -> int:
    cfg = RunConfig.load(args.config)
    grid = cfg.grid()
    form = cfg.form(grid)
    u = cfg.potential(grid)
    d = grid.dim
    measure = npp_mixed([form] * d, [u] * d)
    out = _out_dir(args, cfg)
    save_measure_csv(os.path.join(out, "measure.csv"), measure)
    summary = _base_summary(cfg) | measure_summary(measure)
    write_json(os.path.join(out, "npp.json"), summary)
    print(f"npp: total_mass={summary['total_mass']!r} support={summary['support_size']}")
    return 0


def _cmd_envelope(args) -> int:
    cfg = RunConfig.load(args.config)
    grid = cfg.grid()
    form = cfg.form(grid)
    obstacle = cfg.field_or_value("obstacle", grid, default=0.0)
    res = envelope(form, obstacle)
    out = _out_dir(args, cfg)
    save_potential_csv(os.path.join(out, "envelope.csv"), res.env)
    summary = _base_summary(cfg) | {
        "status": res.status,
        "sweeps": res.sweeps,
        "update_norms": list(res.update_norms),
    }
    write_json(os.path.join(out, "envelope.json"), summary)
    print(f"envelope: status={res.status} sweeps={res.sweeps}")
    if not res.converged:
        raise InfeasibleError(f"envelope status: {res.status}")
    return 0


def _cmd_volume(args) -> int:
    cfg = RunConfig.load(args.config)
    grid = cfg.grid()
    form = cfg.form(grid)
    metric = cfg.metric(grid) or identity_metric(grid)
    eps_list = cfg.param("eps_list", [0.5, 0.25, 0.125, 0.0625])
    report = vol_class(form, metric, eps_list)
    out = _out_dir(args, cfg)
    summary = _base_summary(cfg) | {
        "vol_big": report.vol_big,
        "lower_est": report.lower_est,
        "upper_est": report.upper_est,
        "eps_trace": [[e, v] for e, v in report.eps_trace],
        "status": report.status,
        "notes": list(report.notes),
    }
    write_json(os.path.join(out, "volume.json"), summary)
    print(f"volume: vol={report.vol_big!r} status={report.status}")
    if report.status == NOT_PSEF:
        raise InfeasibleError("class is not psef")
    return 0


def _cmd_solve(args) -> int:
    cfg = RunConfig.load(args.config)
    grid = cfg.grid()
    form = cfg.form(grid)
    dV = cfg.volume(grid)
    f = cfg.field_or_value("density", grid, default=1.0)
    rho_vals = cfg.field_or_value("rho", grid, default=0.0)
    rho = QPshFunction(grid, rho_vals)
    lam = float(cfg.param("lambda", 1.0))
    p = float(cfg.param("p", 2.0))
    setup = SolverSetup(form, rho, f, dV, lam=lam, p=p, metric=cfg.metric(grid))
    mode = cfg.param("mode", "normalized")
    if mode == "twisted":
        result = solve_twisted(setup)
    elif mode == "normalized":
        result = solve_normalized(setup)
    else:
        raise InvalidArgumentError(f"config: unknown solve mode {mode!r}")
    out = _out_dir(args, cfg)
    save_potential_csv(os.path.join(out, "phi.csv"), result.phi)
    summary = _base_summary(cfg) | result.summary() | {"mode": mode}
    write_json(os.path.join(out, "solve.json"), summary)
    print(f"solve[{mode}]: c={result.c!r} residual={result.residual_inf:.3e} "
          f"iterations={result.iterations}")
    return 0


def _cmd_delta(args) -> int:
    cfg = RunConfig.load(args.config)
    grid = cfg.grid()
    form = cfg.form(grid)
    samples = int(cfg.param("samples", 20))
    seed = int(cfg.param("seed", 0))
    c_bound = float(cfg.param("C_bound", 1.0))
    defect = delta_theta_estimate(form, c_bound, samples, seed, metric=cfg.metric(grid))
    out = _out_dir(args, cfg)
    summary = _base_summary(cfg) | {
        "estimate": defect.estimate,
        "samples": defect.samples,
        "kind": form.kind,
        "note": "sampled lower estimate of the mass defect",
    }
    write_json(os.path.join(out, "delta.json"), summary)
    print(f"delta: estimate={defect.estimate!r} samples={defect.samples}")
    return 0


def _cmd_verify(args) -> int:
    report = verify_mod.run_suites(args.suite, args.seed)
    out = args.out or os.environ.get("PLURITORUS_OUTPUT_DIR")
    if out:
        os.makedirs(out, exist_ok=True)
        write_json(os.path.join(out, "verify_report.json"), report)
    failures = report["failures"]
    for rec in failures:
        print(f"FAIL {rec['suite']}.{rec['name']}: {rec['detail']}")
    print(f"verify: {len(report['checks']) - len(failures)}/{len(report['checks'])} "
          f"checks passed (seed={args.seed})")
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pluritorus",
        description="Monge-Ampere products, envelopes, volumes and solves on the grid torus")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, doc in [
        ("ma", _cmd_ma, "product measure of one potential"),
        ("npp", _cmd_npp, "truncated product (pole-aware) of one potential"),
        ("envelope", _cmd_envelope, "envelope below an obstacle"),
        ("volume", _cmd_volume, "volume of a class along shrinking perturbations"),
        ("solve", _cmd_solve, "twisted or normalized equation"),
        ("delta", _cmd_delta, "sampled mass-defect estimate"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.set_defaults(fn=fn)
    pv = sub.add_parser("verify", help="run the invariant property suites")
    pv.add_argument("--suite", nargs="+", default=["all"],
                    choices=sorted(verify_mod.SUITES) + ["all"])
    pv.add_argument("--seed", type=int, default=1)
    pv.add_argument("--out", default=None, help="output directory for the report")
    pv.set_defaults(fn=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 4 if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except Exception as exc:  # mapped exit codes, one-line diagnostics
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
