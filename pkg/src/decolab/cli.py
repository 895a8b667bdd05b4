"""Command line entry point: ``decolab run`` and ``decolab list``.

Exit status is 0 when every in-run tolerance passes, 1 on a tolerance breach
or numerical failure (a ``<experiment>_failures.json`` report is written) and
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import datetime as _dt
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .errors import ConfigError, DecolabError
from .experiments import ExperimentResult, Table, run

__all__ = ["main", "run_experiment", "write_table", "format_value"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def format_value(v) -> str:
    """Deterministic text for a CSV cell; floats use the shortest round-trip form."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        raise TypeError("complex values must be split into _re/_im columns")
    return str(v)


def write_table(table: Table, path: str) -> None:
    """Write a table as CSV with a ``name [unit]`` header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{name} [{unit}]" for name, unit in table.columns])
        for row in table.rows:
            w.writerow([format_value(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def _thread_limit(threads: int | None):
    if threads is None:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # optional dependency
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)
        return contextlib.nullcontext()
    return threadpool_limits(limits=threads)


def run_experiment(name: str, cfg: ExperimentConfig, threads: int | None = None) -> tuple[int, ExperimentResult | None]:
    """Run one experiment and write its CSV tables and manifest to ``cfg.out_dir``.

    Returns
    -------
    status : int
        0 if all checks pass, 1 on a tolerance breach or numerical failure.
    result : ExperimentResult or None
        None if the run aborted with an error.
    """
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    os.makedirs(cfg.out_dir, exist_ok=True)
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    error = None
    result = None
    with _thread_limit(threads):
        try:
            result = run(name, cfg)
        except DecolabError as exc:
            error = {"type": type(exc).__name__, "message": str(exc),
                     "diagnostics": _jsonable(getattr(exc, "diagnostics", {}))}
    wall = time.perf_counter() - t0

    files = []
    if result is not None:
        for table in result.tables:
            fname = f"{name}_{table.name}.csv"
            write_table(table, os.path.join(cfg.out_dir, fname))
            files.append(fname)
    checks = [dataclasses.asdict(c) for c in result.checks] if result is not None else []
    passed = error is None and result is not None and result.passed
    status = EXIT_OK if passed else EXIT_FAIL
    report_name = f"{name}_failures.json"
    if status == EXIT_OK:
        with contextlib.suppress(FileNotFoundError):
            os.remove(os.path.join(cfg.out_dir, report_name))
    else:
        report = {
            "experiment": name,
            "seed": cfg.seed,
            "error": error,
            "failed_checks": [c for c in checks if not c["passed"]],
        }
        with open(os.path.join(cfg.out_dir, report_name), "w", encoding="utf-8") as fh:
            json.dump(_jsonable(report), fh, indent=2)
        files.append(report_name)
    manifest = {
        "experiment": name,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "library_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "threads": threads,
        "started_utc": started.isoformat(),
        "wall_time_s": wall,
        "passed": passed,
        "checks": checks,
        "info": result.info if result is not None else {},
        "files": files,
    }
    with open(os.path.join(cfg.out_dir, f"{name}_manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(manifest), fh, indent=2)
    return status, result


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decolab", description="Damped quantum oscillator experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment", choices=sorted(EXPERIMENTS), metavar="experiment",
                   help="one of: " + ", ".join(sorted(EXPERIMENTS)))
    r.add_argument("--config", help="TOML config file (defaults apply when omitted)")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--out", help="output directory (overrides out_dir)")
    r.add_argument("--threads", type=int, help="cap on BLAS threads")
    sub.add_parser("list", help="list experiments")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "list":
        width = max(map(len, EXPERIMENTS))
        for name, desc in EXPERIMENTS.items():
            print(f"{name:<{width}}  {desc}")
        return EXIT_OK

    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if cfg.experiment is not None and cfg.experiment != args.experiment:
            raise ConfigError(f"config names experiment {cfg.experiment!r} but {args.experiment!r} was requested")
        overrides = {"experiment": args.experiment}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        cfg = dataclasses.replace(cfg, **overrides)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except (ConfigError, OSError) as exc:
        print(f"decolab: {exc}", file=sys.stderr)
        return EXIT_USAGE

    print(f"decolab {__version__}: {args.experiment} (seed {cfg.seed}, eps = {cfg.epsilon:g})")
    status, result = run_experiment(args.experiment, cfg, args.threads)
    if result is not None:
        for c in result.checks:
            print(f"  {'PASS' if c.passed else 'FAIL'}  {c.name}  ({c.value:.4g} vs {c.threshold:.4g})")
    print(f"{'passed' if status == EXIT_OK else 'FAILED'}; results in {cfg.out_dir}")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
