"""Command-line entry point.

Exit codes: 0 ok, 1 input error, 2 degenerate run, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .adversary import CorruptionBudget, STRATEGIES, corrupt, exhaustive_worst_case, one_step_error
from .biht import biht_run
from .ensemble import (
    CsvFormatError,
    clean_responses,
    read_matrix_csv,
    read_responses_csv,
    sample_gaussian_matrix,
    sample_sparse_unit,
)
from .errors import InvalidArgument, ResourceError
from .harness import (
    DEFAULT_M0_FACTOR,
    ExperimentConfig,
    dataset_csv,
    emit_plot_data,
    run_experiment,
    summary_csv,
    sweep,
)
from .linops import hamming_distance
from .rng import Rng
from .theory import constants
from .verify import audit_raic

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_USAGE = 0, 1, 2, 64
ADVERSARY_CHOICES = [s.replace("_", "-") for s in STRATEGIES]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="robust-biht", description="Binary iterative hard thresholding under adversarial sign flips.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    r = sub.add_parser("recover", help="run BIHT on a synthetic or file-based instance")
    r.add_argument("--n", type=int, default=100)
    r.add_argument("--k", type=int, default=3)
    r.add_argument("--m", type=int, default=800)
    r.add_argument("--tau", type=float, default=0.0)
    r.add_argument("--adversary", choices=ADVERSARY_CHOICES, default="min-margin")
    r.add_argument("--T", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--matrix", help="measurement matrix CSV (row per line)")
    r.add_argument("--responses", help="responses CSV of +1/-1")
    r.add_argument("--format", choices=["json"], default="json")

    e = sub.add_parser("experiment", help="Monte-Carlo trials, optionally swept over a grid")
    e.add_argument("--config", help="JSON config file (schema 1); flags override it")
    e.add_argument("--n", type=int)
    e.add_argument("--k", type=int)
    e.add_argument("--m", type=int)
    e.add_argument("--m-mode", choices=["explicit", "scaled-m0"])
    e.add_argument("--m-factor", type=float)
    e.add_argument("--tau", type=float)
    e.add_argument("--adversary", choices=ADVERSARY_CHOICES)
    e.add_argument("--trials", type=int)
    e.add_argument("--T", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--epsilon", type=float, help="empirical epsilon for the theory curve")
    e.add_argument("--rho", type=float)
    e.add_argument("--experimental-recorrupt", action="store_true",
                   help="recompute the corruption from every iterate (outside the fixed-y model)")
    e.add_argument("--grid-tau", type=_csv_floats)
    e.add_argument("--grid-m", type=_csv_ints)
    e.add_argument("--grid-k", type=_csv_ints)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--format", choices=["csv", "json"], default="csv")
    e.add_argument("--summary", help="write the per-iteration summary CSV to this path")

    a = sub.add_parser("audit-raic", help="empirical audit of the approximate invertibility bound")
    a.add_argument("--n", type=int, default=50)
    a.add_argument("--k", type=int, default=3)
    a.add_argument("--m", type=int, default=1500)
    a.add_argument("--tau", type=float, default=0.02)
    a.add_argument("--delta", type=float, default=0.25)
    a.add_argument("--pairs", type=int, default=200)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--adversary", choices=ADVERSARY_CHOICES, default="min-margin")
    a.add_argument("--format", choices=["json"], default="json")

    o = sub.add_parser("oracle", help="exhaustive worst-case flip pattern for one BIHT step")
    o.add_argument("--n", type=int, default=6)
    o.add_argument("--k", type=int, default=2)
    o.add_argument("--m", type=int, default=8)
    o.add_argument("--budget", type=int, default=2)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--format", choices=["json"], default="json")

    c = sub.add_parser("constants", help="print the universal constants and their checks")
    c.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    c.add_argument("--format", choices=["json"], default="json")
    return p


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


def cmd_recover(args, out) -> int:
    rng = Rng(args.seed)
    strategy = args.adversary.replace("-", "_")
    truth = None
    flips = 0
    if args.matrix or args.responses:
        if not (args.matrix and args.responses):
            raise InvalidArgument("--matrix and --responses must be given together")
        A = read_matrix_csv(args.matrix).rows
        y = read_responses_csv(args.responses)
        m, n = A.shape
        if y.size != m:
            raise InvalidArgument(f"responses length ≠ m ({y.size} vs {m})")
        init = sample_sparse_unit(n, args.k, rng)
    else:
        m, n = args.m, args.n
        A = sample_gaussian_matrix(m, n, rng).rows
        x = sample_sparse_unit(n, args.k, rng)
        init = sample_sparse_unit(n, args.k, rng)
        truth = x.dense()
        y = clean_responses(A, truth)
        if args.tau > 0:
            ctx = {"A": A, "x": truth, "x_prev": init.dense(), "k": args.k}
            clean = y
            y, _ = corrupt(clean, CorruptionBudget(args.tau, m), strategy, ctx, rng)
            flips = hamming_distance(y, clean)
    trace = biht_run(A, y, args.k, args.T, init, truth=truth)
    doc = {
        "n": n,
        "k": args.k,
        "m": m,
        "tau": args.tau,
        "adversary": args.adversary,
        "seed": args.seed,
        "flips": flips,
        "fixed_point_at": trace.fixed_point_at,
        "degenerate_at": trace.degenerate_at,
        "trace": trace.to_records(),
    }
    out.write(_dump(doc) + "\n")
    return EXIT_DEGENERATE if trace.degenerate_at is not None else EXIT_OK


def _experiment_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = {"schema": 1}
    overrides = {
        "n": args.n, "k": args.k, "m": args.m, "m_mode": args.m_mode, "m_factor": args.m_factor,
        "tau": args.tau, "adversary": args.adversary, "trials": args.trials, "T": args.T,
        "master_seed": args.seed, "epsilon_target": args.epsilon, "rho": args.rho,
    }
    data.update({key: v for key, v in overrides.items() if v is not None})
    if args.experimental_recorrupt:
        data["recorrupt"] = True
    for key in ("n", "k"):
        if key not in data:
            raise InvalidArgument(f"{key}: required (flag or config)")
    if "m" not in data and data.get("m_mode") != "scaled-m0":
        data["m_mode"] = "scaled-m0"
        data.setdefault("m_factor", DEFAULT_M0_FACTOR)
    return ExperimentConfig.from_dict(data)


def cmd_experiment(args, out) -> int:
    cfg = _experiment_config(args)
    grid = {key: v for key, v in (("tau", args.grid_tau), ("m", args.grid_m), ("k", args.grid_k)) if v}
    if grid:
        points = sweep(cfg, grid, workers=args.workers)
        all_records = [r for p in points for r in p.records]
        if args.format == "csv":
            out.write(dataset_csv(points))
        else:
            out.write(_dump([
                {"params": p.params, "m": p.config.resolved_m,
                 "records": [_record_json(r) for r in p.records]}
                for p in points
            ]) + "\n")
        summary_records, summary_tau = points[0].records, points[0].config.tau
    else:
        all_records = run_experiment(cfg, workers=args.workers)
        if args.format == "csv":
            out.write(dataset_csv(all_records))
        else:
            out.write(_dump({"config": json.loads(cfg.to_json()), "m": cfg.resolved_m,
                             "records": [_record_json(r) for r in all_records]}) + "\n")
        summary_records, summary_tau = all_records, cfg.tau
    if args.summary:
        rows = emit_plot_data(summary_records, cfg.epsilon_target, summary_tau)
        with open(args.summary, "w", encoding="ascii", newline="") as fh:
            fh.write(summary_csv(rows))
    return EXIT_OK


def _record_json(rec) -> dict:
    d = asdict(rec)
    d.pop("wall_time")
    return d


def cmd_audit(args, out) -> int:
    rng = Rng(args.seed)
    A = sample_gaussian_matrix(args.m, args.n, rng).rows
    report = audit_raic(A, args.tau, args.delta, args.pairs, args.adversary.replace("-", "_"), args.seed, args.k)
    doc = {"n": args.n, "k": args.k, "m": args.m, "tau": args.tau, "delta": args.delta,
           "adversary": args.adversary, "seed": args.seed, **report.as_dict()}
    out.write(_dump(doc) + "\n")
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    rng = Rng(args.seed)
    A = sample_gaussian_matrix(args.m, args.n, rng).rows
    x = sample_sparse_unit(args.n, args.k, rng).dense()
    x_prev = sample_sparse_unit(args.n, args.k, rng).dense()
    pattern = exhaustive_worst_case(A, x, x_prev, args.k, args.budget)
    y = clean_responses(A, x).copy()
    y[list(pattern.flipped)] *= -1
    doc = {
        "n": args.n, "k": args.k, "m": args.m, "budget": args.budget, "seed": args.seed,
        "pattern": list(pattern.flipped),
        "max_error": one_step_error(A, y, x, x_prev, args.k),
        "noiseless_error": one_step_error(A, clean_responses(A, x), x, x_prev, args.k),
    }
    out.write(_dump(doc) + "\n")
    return EXIT_OK


def cmd_constants(args, out) -> int:
    c = constants()
    doc = {"a": c.a, "b": c.b, "c1": c.c1, "c2": c.c2, "c3": c.c3, "c4": c.c4, "c": c.c,
           "checks": c.checks()}
    out.write(_dump(doc) + "\n")
    return EXIT_OK


COMMANDS = {
    "recover": cmd_recover,
    "experiment": cmd_experiment,
    "audit-raic": cmd_audit,
    "oracle": cmd_oracle,
    "constants": cmd_constants,
}


def dispatch(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(err)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except CsvFormatError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (InvalidArgument, ResourceError, OSError, json.JSONDecodeError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
