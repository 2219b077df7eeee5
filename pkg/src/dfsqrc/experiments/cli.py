"""Command-line entry point: ``dfsqrc {equilibrate,traces,learn,validate,dump-dfs}``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from ..dfs import build_singlet_basis, dump_basis_csv
from ..errors import ConfigError, GenerationError, IntegrationError, NumericalError
from ..hilbert import N_RESERVOIR
from . import pipelines as pl
from .config import BASES, METHODS, load_config
from .validate import run_checks, summary

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file overriding the paper-defaults preset")
    common.add_argument("--seed", type=int)
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--basis", choices=BASES)
    common.add_argument("--n-train", type=int, help="single training-set size instead of the configured sweep")
    common.add_argument("--n-test", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")

    parser = argparse.ArgumentParser(prog="dfsqrc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibrate", parents=[common], help="teacher-free equilibration trajectories")
    sub.add_parser("traces", parents=[common], help="singlet expectations while reading two teachers")
    sub.add_parser("learn", parents=[common], help="error curve over training-set sizes")
    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    sub.add_parser("dump-dfs", parents=[common], help="write the singlet basis as CSV")
    return parser


def config_from_args(args):
    overrides = {
        "seed": args.seed,
        "method": args.method,
        "basis": args.basis,
        "sweep": (args.n_train,) if args.n_train is not None else None,
        "n_test": args.n_test,
        "n_runs": args.runs,
        "workers": args.workers,
    }
    return load_config(args.config, overrides)


def _equilibrate(cfg, out: Path) -> int:
    for init, traj in pl.equilibration_runs(cfg).items():
        pl.write_csv(out / f"equilibrate_{init}.csv", pl.TRAJECTORY_HEADER, pl.trajectory_rows(traj))
    return EXIT_OK


def _traces(cfg, out: Path) -> int:
    for name, traj in pl.traces(cfg).items():
        pl.write_csv(out / f"traces_{name}.csv", pl.TRAJECTORY_HEADER, pl.trajectory_rows(traj))
    return EXIT_OK


def _learn(cfg, out: Path) -> int:
    start = time.perf_counter()
    results = pl.learn(cfg)
    for r in results:
        if r.diagnostic:
            print(f"run {r.run} skipped: {r.diagnostic}", file=sys.stderr)
    rows = pl.error_curve(cfg, results)
    record = pl.run_record(cfg, results, time.perf_counter() - start)
    (out / "run_record.json").write_text(json.dumps(record, indent=2) + "\n")
    if not rows:
        print("no run completed", file=sys.stderr)
        return EXIT_INVARIANT
    pl.write_csv(out / "error_curve.csv", pl.CURVE_HEADER, rows)
    for n, mean, lo, hi in rows:
        print(f"n_train={n:4d}  mean={mean:.3f}  min={lo:.3f}  max={hi:.3f}")
    return EXIT_OK


def _validate(cfg, out: Path) -> int:
    report = run_checks(cfg)
    print(summary(report))
    return EXIT_OK if all(r["ok"] for r in report) else EXIT_INVARIANT


def _dump_dfs(cfg, out: Path) -> int:
    dump_basis_csv(build_singlet_basis(N_RESERVOIR), out / "dfs_basis.csv")
    return EXIT_OK


COMMANDS = {
    "equilibrate": _equilibrate,
    "traces": _traces,
    "learn": _learn,
    "validate": _validate,
    "dump-dfs": _dump_dfs,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory {args.out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args.out)
    except (IntegrationError, GenerationError, NumericalError) as exc:
        print(f"{type(exc).__name__}: {exc}\nconfig:\n{cfg.to_ini()}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
