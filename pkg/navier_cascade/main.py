"""
Command-line entry point.

    python -m navier_cascade.main estimate --config configs/small_data.json --x 1,0,0 --t 0.5
    python -m navier_cascade.main field --config configs/small_data.json --grid="-1:1:4,-1:1:4,-1:1:4;0.5" --out field.csv
    python -m navier_cascade.main verify --suite samplers
    python -m navier_cascade.main sample-diag --n 20000 --out samplers.csv
    python -m navier_cascade.main runs list --status failed

Environment (a .env file is honored): CASCADE_LOG_LEVEL, CASCADE_RUNS_DIR, CASCADE_WORKERS.
"""
import argparse
import asyncio
import csv
import logging
import os
import sys
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from navier_cascade import __version__
from navier_cascade.cascade import build_problem_spec
from navier_cascade.engine import EstimatorEngine, SpaceTimePoint
from navier_cascade.errors import (
    ConfigError,
    ContractionError,
    DataError,
    DomainError,
    NumericError,
    SamplerHealthError,
)
from navier_cascade.models.config import CascadeMode, RunConfig, config_hash, load_config
from navier_cascade.models.report import EstimateOutput, Provenance, RunRecord, RunStatus
from navier_cascade.oracle import oracle_tolerance
from navier_cascade.storage import FilesystemStorage, Storage, StorageError
from navier_cascade.storage import oracle_rows, report_rows, write_field_csv, write_histogram_csv
from navier_cascade.verify import SUITE_MAP, run_suites, sampler_histograms

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_IO = 4

RUNTIME_ERRORS = (DataError, NumericError, SamplerHealthError, ContractionError, DomainError)

# commands that write run records
COMMAND_NAMES = ("estimate", "field", "verify", "sample-diag")


def _vector(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three components, got {len(values)}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="navier-cascade",
                                     description="Monte Carlo cascades for 3-D Navier-Stokes")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, type=Path, help="RunConfig JSON file")
        p.add_argument("--n", type=int, help="Cascades per point (overrides the config)")
        p.add_argument("--seed", type=int, help="Master seed (overrides the config)")
        p.add_argument("--workers", type=int, help="Worker processes (default: CASCADE_WORKERS or the config)")
        p.add_argument("--depth-cap", type=int, help="Depth at which nodes keep only their data term")
        p.add_argument("--mode", choices=[m.value for m in CascadeMode], help="Functional: xi or upsilon")

    estimate = sub.add_parser("estimate", help="Estimate u(x,t) at one point")
    run_options(estimate)
    estimate.add_argument("--x", required=True, type=_vector, help="Point as x1,x2,x3")
    estimate.add_argument("--t", required=True, type=float, help="Time t > 0")

    field = sub.add_parser("field", help="Estimate u on a grid and write CSV")
    run_options(field)
    field.add_argument("--grid", required=True,
                       help="x1a:x1b:n1,x2a:x2b:n2,x3a:x3b:n3;t1,t2,..., L,n,t[,t...] for the n³ cell "
                            "centers of [-L,L]³, or a CSV file of x1,x2,x3,t rows")
    field.add_argument("--out", required=True, type=Path, help="Output CSV")
    field.add_argument("--source", choices=["mc", "oracle"], default="mc", help="Estimator or Picard oracle")

    verify = sub.add_parser("verify", help="Run verification suites")
    verify.add_argument("--suite", choices=[*SUITE_MAP, "all"], default="all")
    verify.add_argument("--n", type=int, help="Sample count (suite default when absent)")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--workers", type=int)

    diag = sub.add_parser("sample-diag", help="Dump sampler histograms as CSV")
    diag.add_argument("--n", type=int, default=100_000)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--out", type=Path, help="Output CSV (stdout when absent)")

    runs = sub.add_parser("runs", help="Inspect stored run records (needs CASCADE_RUNS_DIR)")
    actions = runs.add_subparsers(dest="action", required=True)
    listing = actions.add_parser("list", help="List run records, oldest first")
    listing.add_argument("--command", dest="filter_command", choices=[*COMMAND_NAMES], help="Only this command")
    listing.add_argument("--status", choices=[s.value for s in RunStatus], help="Only this status")
    show = actions.add_parser("show", help="Print one run record")
    show.add_argument("run_id")
    return parser


def _workers(args: argparse.Namespace, default: int = 1) -> int:
    if getattr(args, "workers", None):
        return args.workers
    env = os.getenv("CASCADE_WORKERS")
    return int(env) if env else default


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load --config and fold the command-line overrides in, validating again"""
    config = load_config(args.config)
    overrides: Dict[str, Any] = {}
    for flag, key in (("n", "n"), ("seed", "seed"), ("depth_cap", "depth_cap"), ("mode", "mode")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    overrides["workers"] = _workers(args, config.workers)
    return RunConfig(**{**config.model_dump(), **overrides})


def _grid_axis(text: str) -> np.ndarray:
    lo, hi, count = text.split(":")
    n = int(count)
    if n < 1:
        raise ValueError(f"axis {text!r} needs at least one node")
    return np.linspace(float(lo), float(hi), n)


def parse_grid(text: str) -> List[SpaceTimePoint]:
    """Grid points, times outermost, from one of three forms:

    - "x1a:x1b:n1,x2a:x2b:n2,x3a:x3b:n3;t1,t2,...": n_i evenly spaced nodes
      from x_ia to x_ib, endpoints included, on each axis
    - "L,n,t[,t...]": the n³ cell centers of [-L,L]³
    - a CSV file of x1,x2,x3,t rows
    """
    path = Path(text)
    if path.exists():
        points = []
        with path.open(newline="") as fh:
            for row in csv.reader(line for line in fh if not line.startswith("#")):
                if not row:
                    continue
                try:
                    x1, x2, x3, t = (float(v) for v in row[:4])
                except ValueError:
                    continue  # header
                points.append((np.array([x1, x2, x3]), t))
        if not points:
            raise ConfigError(f"grid file {path} holds no points")
        return points
    if ";" in text:
        try:
            box, time_list = text.split(";")
            axes = [_grid_axis(part) for part in box.split(",")]
            times = [float(v) for v in time_list.split(",")]
        except ValueError as e:
            raise ConfigError(f"grid must read x1a:x1b:n1,x2a:x2b:n2,x3a:x3b:n3;t1,t2,..., got {text!r} ({e})")
        if len(axes) != 3:
            raise ConfigError(f"grid {text!r} needs three axes, got {len(axes)}")
    else:
        try:
            parts = [float(v) for v in text.split(",")]
            half_width, n, times = parts[0], int(parts[1]), parts[2:]
        except (ValueError, IndexError):
            raise ConfigError(f"grid must be a CSV file, x1a:x1b:n1,...;t1,... or L,n,t[,t...], got {text!r}")
        if n < 1 or half_width <= 0:
            raise ConfigError(f"grid {text!r} needs L > 0 and n >= 1")
        # cell centers, so an even n never lands on the origin
        axes = [-half_width + (np.arange(n) + 0.5) * (2.0 * half_width / n)] * 3
    if not times or any(t <= 0 for t in times):
        raise ConfigError(f"grid {text!r} needs at least one time, all positive")
    return [(np.array([a, b, c]), t) for t in times for a in axes[0] for b in axes[1] for c in axes[2]]


def _storage() -> Optional[Storage]:
    runs_dir = os.getenv("CASCADE_RUNS_DIR")
    return FilesystemStorage.for_runs(runs_dir) if runs_dir else None


async def _start_record(storage: Optional[Storage], command: str, config: Optional[RunConfig],
                        seed: Optional[int]) -> Optional[RunRecord]:
    if storage is None:
        return None
    record = RunRecord(
        run_id=str(uuid.uuid4()),
        command=command,
        status=RunStatus.RUNNING,
        config_hash=config_hash(config) if config else None,
        seed=seed,
        version=__version__,
    )
    return await storage.create_run(record)


async def _finish_record(storage: Optional[Storage], record: Optional[RunRecord], reports: Sequence[Any] = (),
                         error: Optional[BaseException] = None) -> None:
    if storage is None or record is None:
        return
    record.status = RunStatus.FAILED if error else RunStatus.COMPLETED
    record.completed_at = datetime.now(timezone.utc)
    record.reports = [r.model_dump(mode="json") for r in reports]
    record.error = str(error) if error else None
    await storage.update_run(record)


async def cmd_estimate(args: argparse.Namespace, config: RunConfig) -> Tuple[int, List[Any]]:
    spec = build_problem_spec(config)
    engine = EstimatorEngine(config.workers)
    report = await engine.estimate(spec, np.array(args.x), args.t, config.n, config.seed, config.depth_cap,
                                   config.mode)
    provenance = Provenance(version=__version__, seed=config.seed, config_hash=config_hash(config))
    print(EstimateOutput(provenance=provenance, report=report).model_dump_json(indent=4))
    return EXIT_OK, [report]


async def cmd_field(args: argparse.Namespace, config: RunConfig) -> Tuple[int, List[Any]]:
    spec = build_problem_spec(config)
    points = parse_grid(args.grid)
    if args.source == "oracle":
        values, tolerance, _ = await asyncio.to_thread(oracle_tolerance, spec, config.oracle, points)
        rows = oracle_rows(np.array([x for x, _ in points]), [t for _, t in points], values, tolerance)
        reports: List[Any] = []
    else:
        engine = EstimatorEngine(config.workers)
        reports = await engine.evaluate_grid(spec, points, config.n, config.seed, config.depth_cap, config.mode)
        rows = report_rows(reports)
    path = write_field_csv(str(args.out), rows, __version__, config.seed, config_hash(config))
    print(path)
    return EXIT_OK, reports


async def cmd_verify(args: argparse.Namespace, config: Optional[RunConfig] = None) -> Tuple[int, List[Any]]:
    results = await asyncio.to_thread(run_suites, [args.suite], args.n, args.seed, _workers(args))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.suite:<9} {r.name:<28} observed={r.observed:.6g}  "
              f"required {r.required}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return (EXIT_VERIFY_FAILED if failed else EXIT_OK), results


async def cmd_sample_diag(args: argparse.Namespace, config: Optional[RunConfig] = None) -> Tuple[int, List[Any]]:
    rows = await asyncio.to_thread(sampler_histograms, args.n, args.seed)
    if args.out is None:
        write_histogram_csv(sys.stdout, rows)
    else:
        try:
            with args.out.open("w", newline="") as fh:
                write_histogram_csv(fh, rows)
        except OSError as e:
            raise StorageError(f"cannot write {args.out}: {e}") from e
    return EXIT_OK, []


async def cmd_runs(args: argparse.Namespace, config: Optional[RunConfig] = None) -> Tuple[int, List[Any]]:
    storage = _storage()
    if storage is None:
        raise ConfigError("runs needs CASCADE_RUNS_DIR to point at a run-record directory")
    if args.action == "show":
        print((await storage.get_run(args.run_id)).model_dump_json(indent=4))
        return EXIT_OK, []
    status = RunStatus(args.status) if args.status else None
    for record in await storage.list_runs(command=args.filter_command, status=status):
        print(f"{record.run_id}  {record.command:<11} {record.status.value:<9} "
              f"{record.created_at.isoformat()}  seed={record.seed}")
    return EXIT_OK, []


COMMAND_MAP = {
    "estimate": cmd_estimate,
    "field": cmd_field,
    "verify": cmd_verify,
    "sample-diag": cmd_sample_diag,
    "runs": cmd_runs,
}

# commands that only read run records do not write one
UNRECORDED_COMMANDS = {"runs"}


async def run_command(args: argparse.Namespace) -> int:
    config = resolve_config(args) if getattr(args, "config", None) is not None else None
    storage = None if args.command in UNRECORDED_COMMANDS else _storage()
    seed = config.seed if config else getattr(args, "seed", None)
    record = await _start_record(storage, args.command, config, seed)
    try:
        code, reports = await COMMAND_MAP[args.command](args, config)
    except Exception as e:
        await _finish_record(storage, record, error=e)
        raise
    await _finish_record(storage, record, reports)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(level=os.getenv("CASCADE_LOG_LEVEL", "INFO").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return asyncio.run(run_command(args))
    except (ConfigError, ValidationError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except RUNTIME_ERRORS as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        return EXIT_DATA
    except (OSError, StorageError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
