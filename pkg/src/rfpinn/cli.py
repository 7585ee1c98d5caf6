"""Command line entry point: ``rfpinn {sample,approx,solve,sweep,slope}``.

Configs are YAML mappings whose keys are :class:`~rfpinn.experiments.SweepPlan`
fields (plus ``m``/``seed`` for ``sample``).  Every run writes
``manifest.json`` with the resolved config into ``--out``.  On failure the
exit code is nonzero and a JSON error record goes to stderr (and
``error.json`` when ``--out`` exists).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import pathlib
import platform
import sys
import traceback

import numpy as np
import yaml

from . import _accel, experiments, sampling

EXIT_USAGE = 2
EXIT_FAILURE = 1


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise ValueError(f"config {path} must contain a mapping, got {type(cfg).__name__}")
    return cfg


def _apply_determinism(args):
    if not args.deterministic:
        return
    # fixed reduction order: one BLAS thread, one numba thread
    from threadpoolctl import threadpool_limits

    threadpool_limits(1)
    if _accel.USE_NUMBA:
        import numba

        numba.set_num_threads(1)


def _manifest(args, resolved):
    return {
        "command": args.command,
        "config_path": args.config,
        "resolved_config": resolved,
        "seed": args.seed,
        "threads": args.threads,
        "deterministic": bool(args.deterministic),
        "backend": _accel.backend_name(),
        "build_id": experiments.build_id(),
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _plan(cfg, args, experiment):
    cfg = dict(cfg)
    cfg.setdefault("experiment", experiment)
    if args.seed is not None:
        cfg["seeds"] = [args.seed]
    return experiments.SweepPlan.from_dict(cfg)


# subcommands ------------------------------------------------------------------


def cmd_sample(cfg, args, out):
    cfg = dict(cfg)
    m = int(cfg.pop("m", 1000))
    seed = args.seed if args.seed is not None else int(cfg.pop("seed", 0))
    cfg.pop("seed", None)
    cfg.setdefault("prior", "compact")
    cfg.setdefault("d", 1)
    if cfg["prior"] == "compact":
        cfg.setdefault("M", 2.0)
    prior = sampling.prior_from_params(cfg)
    bank = sampling.sample(prior, m, seed, threads=args.threads)
    sampling.save_bank(bank, out / "bank.csv")
    resolved = {"m": m, "seed": seed, **prior.params()}
    return resolved, {"bank": str(out / "bank.csv"), "m": m}


def cmd_approx(cfg, args, out):
    plan = _plan(cfg, args, "approx_rate")
    rows = experiments.run_approx_rate(plan, threads=args.threads)
    experiments.write_csv(rows, "approx_rate", out / "approx_rate.csv")
    result = {"csv": str(out / "approx_rate.csv"), "rows": len(rows)}
    pts = experiments.aggregate(rows, "h2_err_sq", by="m", how="mean")
    if len(pts) >= 3:
        result["h2_slope"] = experiments.fit_loglog_slope(pts)[0]
    return plan.as_dict(), result


def cmd_sweep(cfg, args, out):
    experiment = cfg.get("experiment", "loss_decay")
    if experiment == "approx_rate":
        return cmd_approx(cfg, args, out)
    if experiment == "solve":
        return cmd_solve(cfg, args, out)
    plan = _plan(cfg, args, "loss_decay")
    rows = experiments.run_loss_decay(plan, threads=args.threads)
    experiments.write_csv(rows, "loss_decay", out / "loss_decay.csv")
    pts = experiments.aggregate(rows, "test_loss", by="m", how="median")
    result = {"csv": str(out / "loss_decay.csv"), "rows": len(rows),
              "median_test_loss": pts}
    if len(pts) >= 3:
        result["slope"] = experiments.fit_loglog_slope(pts)[0]
    return plan.as_dict(), result


def cmd_solve(cfg, args, out):
    plan = _plan(cfg, args, "solve")
    summary, report = experiments.run_solve(plan)
    report.write_csv(out / "solve_trace.csv")
    _write_json(out / "solve_summary.json", summary)
    return plan.as_dict(), summary


def cmd_slope(cfg, args, out):
    rows = experiments.read_csv(args.input)
    pts = experiments.aggregate(rows, args.y, by=args.x, how=args.agg)
    slope, icpt, r2 = experiments.fit_loglog_slope(pts)
    result = {"slope": slope, "intercept": icpt, "r2": r2, "points": pts}
    return {"input": args.input, "x": args.x, "y": args.y, "agg": args.agg}, result


COMMANDS = {
    "sample": cmd_sample,
    "approx": cmd_approx,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "slope": cmd_slope,
}


def build_parser():
    p = argparse.ArgumentParser(prog="rfpinn", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--out", default="rfpinn-out", help="output directory")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                        help="override the seed (u64)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--deterministic", action="store_true",
                        help="single-threaded reductions for bitwise reproducibility")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("sample", "approx", "solve", "sweep"):
        sub.add_parser(name, parents=[common])
    sp = sub.add_parser("slope", parents=[common], help="log-log slope of a CSV column")
    sp.add_argument("--input", required=True, help="CSV written by a sweep")
    sp.add_argument("--x", default="m")
    sp.add_argument("--y", default="test_loss")
    sp.add_argument("--agg", choices=("median", "mean"), default="median")
    return p


def _error_record(exc, command):
    return {
        "status": "error",
        "command": command,
        "error_type": type(exc).__name__,
        "message": str(exc),
        "traceback": traceback.format_exception_only(type(exc), exc)[-1].strip(),
    }


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = pathlib.Path(args.out)
    try:
        if args.threads < 1:
            raise ValueError(f"--threads must be >= 1, got {args.threads}")
        out.mkdir(parents=True, exist_ok=True)
        _apply_determinism(args)
        cfg = _load_config(args.config)
        resolved, result = COMMANDS[args.command](cfg, args, out)
        manifest = _manifest(args, resolved)
        manifest["result"] = result
        _write_json(out / "manifest.json", manifest)
        print(json.dumps({"status": "ok", **result}, sort_keys=True, default=_json_default))
        return 0
    except Exception as exc:
        record = _error_record(exc, args.command)
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        if out.is_dir() and os.access(out, os.W_OK):
            _write_json(out / "error.json", record)
        return EXIT_FAILURE
