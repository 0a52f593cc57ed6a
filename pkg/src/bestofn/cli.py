"""Command-line front end: ingest result pools, estimate, report.

Subcommands: summarize, boon, curve, compare. Human-readable tables go to
stdout; ``--output`` additionally writes a versioned JSON report (and, for
curve, a CSV with columns m,expected_best_test,ci_lo,ci_hi next to it).
Scores are taken verbatim from the input files; the tool never rescales
between fractions and percents.

Exit codes: 0 success, 2 usage error, 3 input/data error, 4 estimator or
resampling error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .errors import (
    DegeneratePoolError,
    InsufficientDataError,
    InvalidDataError,
    PoolFileError,
    ResamplingDegenerateError,
)
from .estimators import (
    Direction,
    EstimatorKind,
    ResultPool,
    RunRecord,
    anderson_darling_normality,
    boon_nonparametric,
    boon_parametric_gaussian,
    summarize,
)
from .resampling import (
    ResamplingConfig,
    best_of_m_curve,
    bootstrap_ci,
    compare_architectures,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_ESTIMATOR = 4

SCHEMA_VERSION = 1
SEED_ENV_VAR = "BESTOFN_SEED"

DEFAULT_N = 5
DEFAULT_REPLICATES = 10_000
DEFAULT_LEVEL = 0.95
DEFAULT_COLUMNS = ("validation", "test")


@dataclass(frozen=True)
class PoolFile:
    """Where and how to read one result pool."""

    path: str
    format: str  # "csv" | "jsonl"
    val_column: str
    test_column: str
    direction: Direction


def _detect_format(path: str, explicit: str | None) -> str:
    if explicit in ("csv", "jsonl"):
        return explicit
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".ndjson") else "csv"


def _parse_score(raw, line_num: int, column: str, bad_rows: list) -> float | None:
    if raw is None or (isinstance(raw, str) and raw.strip() == ""):
        bad_rows.append((line_num, f"missing {column!r} value"))
        return None
    try:
        value = float(raw)
    except (TypeError, ValueError):
        bad_rows.append((line_num, f"non-numeric {column!r} value {raw!r}"))
        return None
    if not math.isfinite(value):
        bad_rows.append((line_num, f"non-finite {column!r} value {raw!r}"))
        return None
    return value


def load_pool(pool_file: PoolFile) -> ResultPool:
    """Read a pool file, rejecting malformed rows by line number.

    Any rejected row fails the whole load: partial ingestion would silently
    change m, and m is part of every downstream estimate.
    """
    records: list[RunRecord] = []
    bad_rows: list[tuple[int, str]] = []
    if pool_file.format == "csv":
        _read_csv(pool_file, records, bad_rows)
    else:
        _read_jsonl(pool_file, records, bad_rows)
    if bad_rows:
        raise PoolFileError(f"malformed rows in {pool_file.path}", bad_rows)
    if not records:
        raise PoolFileError(f"no data rows in {pool_file.path}")
    return ResultPool(
        records=tuple(records),
        direction=pool_file.direction,
        metric_name=pool_file.test_column,
    )


def _read_csv(pool_file: PoolFile, records: list, bad_rows: list) -> None:
    with open(pool_file.path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in (pool_file.val_column, pool_file.test_column):
            if column not in header:
                raise PoolFileError(
                    f"column {column!r} not found in {pool_file.path} "
                    f"(header: {', '.join(header) or 'empty'})"
                )
        for row in reader:
            line = reader.line_num
            v = _parse_score(row.get(pool_file.val_column), line, pool_file.val_column, bad_rows)
            t = _parse_score(row.get(pool_file.test_column), line, pool_file.test_column, bad_rows)
            if v is not None and t is not None:
                records.append(RunRecord(v, t))


def _read_jsonl(pool_file: PoolFile, records: list, bad_rows: list) -> None:
    with open(pool_file.path, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                bad_rows.append((line_num, f"invalid JSON ({exc.msg})"))
                continue
            if not isinstance(obj, dict):
                bad_rows.append((line_num, "expected a JSON object"))
                continue
            missing = [c for c in (pool_file.val_column, pool_file.test_column) if c not in obj]
            if missing:
                bad_rows.append((line_num, f"missing field(s) {', '.join(missing)}"))
                continue
            v = _parse_score(obj[pool_file.val_column], line_num, pool_file.val_column, bad_rows)
            t = _parse_score(obj[pool_file.test_column], line_num, pool_file.test_column, bad_rows)
            if v is not None and t is not None:
                records.append(RunRecord(v, t))


def _pool_fingerprint(pool_file: PoolFile, pool: ResultPool) -> dict:
    return {
        "path": pool_file.path,
        "format": pool_file.format,
        "columns": {"validation": pool_file.val_column, "test": pool_file.test_column},
        "m": pool.m,
        "metric": pool.metric_name,
        "direction": pool.direction.value,
    }


def _ci_dict(ci) -> dict:
    return {
        "lo": ci.lo,
        "hi": ci.hi,
        "level": ci.level,
        "method": ci.method.value,
        "replicates": ci.replicates,
    }


def _base_report(args: argparse.Namespace, argv: list[str]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "bestofn", "version": __version__},
        "command": ["bestofn", *argv],
        "subcommand": args.subcommand,
        "seed": getattr(args, "seed", None),
        "defaults": {
            "n": DEFAULT_N,
            "replicates": DEFAULT_REPLICATES,
            "level": DEFAULT_LEVEL,
        },
    }


def _write_report(report: dict, output: str | None) -> None:
    if output is None:
        return
    with open(output, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.6g}"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_summarize(args: argparse.Namespace, argv: list[str]) -> int:
    pool_file = _pool_file_from_args(args, args.input)
    pool = load_pool(pool_file)
    s = summarize(pool)
    normality = None
    if pool.m >= 8 and s.std_test and s.std_test > 0.0:
        ad = anderson_darling_normality(pool.test_scores)
        normality = {"statistic": ad.statistic, "reject_at_5pct": ad.reject_at_5pct}

    report = _base_report(args, argv)
    report["pools"] = [_pool_fingerprint(pool_file, pool)]
    report["summary"] = {
        "m": s.m,
        "mean_test": s.mean_test,
        "std_test": s.std_test,
        "iqr_test": s.iqr_test,
        "range_test": list(s.range_test),
        "spearman_val_test": s.spearman_val_test,
        "pearson_val_test": s.pearson_val_test,
        "normality": normality,
    }
    _write_report(report, args.output)

    print(f"pool: {pool_file.path} (m={pool.m}, metric={pool.metric_name}, "
          f"direction={pool.direction.value})")
    print(f"  mean_test     {_fmt(s.mean_test)}")
    print(f"  std_test      {_fmt(s.std_test)}")
    print(f"  iqr_test      {_fmt(s.iqr_test)}")
    print(f"  range_test    {_fmt(s.range_test[0])} .. {_fmt(s.range_test[1])}")
    print(f"  spearman      {_fmt(s.spearman_val_test)}")
    print(f"  pearson       {_fmt(s.pearson_val_test)}")
    if normality is None:
        print("  normality     - (needs m >= 8 and nonzero spread)")
    else:
        verdict = "rejected" if normality["reject_at_5pct"] else "not rejected"
        print(f"  normality     A2*={normality['statistic']:.4g} "
              f"(Gaussian {verdict} at 5%)")
    return EXIT_OK


def _cmd_boon(args: argparse.Namespace, argv: list[str]) -> int:
    pool_file = _pool_file_from_args(args, args.input)
    pool = load_pool(pool_file)
    kind = (
        EstimatorKind.GAUSSIAN_PARAMETRIC
        if args.estimator == "gaussian"
        else EstimatorKind.NONPARAMETRIC
    )
    config = _config_from_args(args)

    estimates = []
    for n in args.n:
        if kind is EstimatorKind.GAUSSIAN_PARAMETRIC:
            try:
                est = boon_parametric_gaussian(pool, n)
            except DegeneratePoolError as exc:
                raise DegeneratePoolError(
                    f"{exc}; rerun with --estimator nonparametric, which needs no spread"
                ) from exc
        else:
            est = boon_nonparametric(pool, n)
        entry = {
            "n": est.n,
            "m": est.m,
            "value": est.value,
            "estimator": est.estimator_kind.value,
            "extrapolative": est.extrapolative,
            "ci": None,
        }
        if args.bootstrap is not None:
            if kind is EstimatorKind.GAUSSIAN_PARAMETRIC:
                stat = lambda p, n=n: boon_parametric_gaussian(p, n).value  # noqa: E731
            else:
                stat = lambda p, n=n: boon_nonparametric(p, n).value  # noqa: E731
            ci = bootstrap_ci(pool, stat, config, workers=args.workers)
            entry["ci"] = _ci_dict(ci)
        estimates.append(entry)

    report = _base_report(args, argv)
    report["pools"] = [_pool_fingerprint(pool_file, pool)]
    report["n_values"] = list(args.n)
    report["estimator"] = kind.value
    report["estimates"] = estimates
    _write_report(report, args.output)

    print(f"pool: {pool_file.path} (m={pool.m}, direction={pool.direction.value})")
    print(f"{'n':>4}  {'estimator':<20} {'value':>12}  {'ci_lo':>12}  {'ci_hi':>12}  flags")
    for e in estimates:
        lo = e["ci"]["lo"] if e["ci"] else None
        hi = e["ci"]["hi"] if e["ci"] else None
        flags = "extrapolative" if e["extrapolative"] else ""
        print(f"{e['n']:>4}  {e['estimator']:<20} {_fmt(e['value']):>12}  "
              f"{_fmt(lo):>12}  {_fmt(hi):>12}  {flags}")
    return EXIT_OK


def _cmd_curve(args: argparse.Namespace, argv: list[str]) -> int:
    pool_file = _pool_file_from_args(args, args.input)
    pool = load_pool(pool_file)
    if args.m_max < 1:
        raise ValueError(f"--m-max must be >= 1, got {args.m_max}")
    config = _config_from_args(args)
    points = best_of_m_curve(
        pool,
        m_values=list(range(1, args.m_max + 1)),
        samples_per_m=args.samples_per_m,
        config=config,
        workers=args.workers,
    )

    report = _base_report(args, argv)
    report["pools"] = [_pool_fingerprint(pool_file, pool)]
    report["samples_per_m"] = args.samples_per_m
    report["curve"] = [
        {
            "m": p.m,
            "expected_best_test": p.expected_best_test,
            "ci_lo": p.ci.lo if p.ci else None,
            "ci_hi": p.ci.hi if p.ci else None,
            "mc_se": p.mc_se,
        }
        for p in points
    ]
    curve_csv = None
    if args.output is not None:
        curve_csv = str(Path(args.output).with_suffix("")) + ".curve.csv"
        with open(curve_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "expected_best_test", "ci_lo", "ci_hi"])
            for p in points:
                writer.writerow([
                    p.m,
                    repr(p.expected_best_test),
                    repr(p.ci.lo) if p.ci else "",
                    repr(p.ci.hi) if p.ci else "",
                ])
        report["curve_csv"] = curve_csv
    _write_report(report, args.output)

    print(f"pool: {pool_file.path} (m={pool.m}, direction={pool.direction.value})")
    print(f"{'m':>4}  {'expected_best_test':>20}  {'ci_lo':>12}  {'ci_hi':>12}")
    for p in points:
        print(f"{p.m:>4}  {_fmt(p.expected_best_test):>20}  "
              f"{_fmt(p.ci.lo if p.ci else None):>12}  {_fmt(p.ci.hi if p.ci else None):>12}")
    if curve_csv:
        print(f"curve data written to {curve_csv}")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace, argv: list[str]) -> int:
    file_a = _pool_file_from_args(args, args.input_a)
    file_b = _pool_file_from_args(args, args.input_b)
    pool_a = load_pool(file_a)
    pool_b = load_pool(file_b)
    config = _config_from_args(args)
    n = args.n[0] if isinstance(args.n, list) else args.n
    result = compare_architectures(pool_a, pool_b, n, config, workers=args.workers)

    report = _base_report(args, argv)
    report["pools"] = [_pool_fingerprint(file_a, pool_a), _pool_fingerprint(file_b, pool_b)]
    report["comparison"] = {
        "n": n,
        "delta": result.delta,
        "significant": result.significant,
        "ci": _ci_dict(result.ci),
    }
    _write_report(report, args.output)

    verdict = "significant" if result.significant else "not significant"
    print(f"best-out-of-{n} difference (B - A): {_fmt(result.delta)}")
    print(f"{int(config.level * 100)}% CI: [{_fmt(result.ci.lo)}, {_fmt(result.ci.hi)}] "
          f"({verdict}: zero {'outside' if result.significant else 'inside'} the interval)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc


def _parse_n_list(raw: str) -> list[int]:
    try:
        values = [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid n list {raw!r}") from exc
    if not values or any(n < 1 for n in values):
        raise argparse.ArgumentTypeError(f"n values must be positive integers, got {raw!r}")
    return values


def _parse_bandwidth(raw: str):
    if raw == "auto":
        return "auto"
    try:
        value = float(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f'bandwidth must be "auto" or a number, got {raw!r}') from exc
    if value < 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"bandwidth must be non-negative, got {raw!r}")
    return value


def _add_input_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--format", choices=["csv", "jsonl"], default=None,
                     help="input format (default: by file extension)")
    sub.add_argument("--columns", default=",".join(DEFAULT_COLUMNS), metavar="VAL,TEST",
                     help="validation and test column/field names (default: validation,test)")
    sub.add_argument("--direction", choices=["max", "min"], default="max",
                     help="whether better scores are larger (max) or smaller (min)")
    sub.add_argument("--output", default=None, metavar="PATH",
                     help="write the JSON report here (curve also writes <PATH stem>.curve.csv)")


def _add_sampling_flags(sub: argparse.ArgumentParser, bootstrap_default) -> None:
    if bootstrap_default is None:
        sub.add_argument("--bootstrap", type=int, default=None, nargs="?",
                         const=DEFAULT_REPLICATES, metavar="B",
                         help="attach bootstrap CIs using B replicates (default B: 10000)")
    else:
        sub.add_argument("--bootstrap", type=int, default=bootstrap_default, metavar="B",
                         help=f"replicate count (default: {bootstrap_default})")
    sub.add_argument("--level", type=float, default=DEFAULT_LEVEL,
                     help="confidence level (default: 0.95)")
    sub.add_argument("--seed", type=int, default=None,
                     help=f"master seed (default: ${SEED_ENV_VAR} or 0)")
    sub.add_argument("--bandwidth", type=_parse_bandwidth, default="auto",
                     help='smoothing bandwidth: "auto" or a number (default: auto)')
    sub.add_argument("--workers", type=int, default=1,
                     help="worker threads for replicate evaluation (default: 1)")


def _pool_file_from_args(args: argparse.Namespace, path: str) -> PoolFile:
    columns = [c.strip() for c in args.columns.split(",")]
    if len(columns) != 2 or not all(columns):
        raise ValueError(f"--columns expects two comma-separated names, got {args.columns!r}")
    return PoolFile(
        path=path,
        format=_detect_format(path, args.format),
        val_column=columns[0],
        test_column=columns[1],
        direction=Direction.MINIMIZE if args.direction == "min" else Direction.MAXIMIZE,
    )


def _config_from_args(args: argparse.Namespace) -> ResamplingConfig:
    replicates = args.bootstrap if args.bootstrap is not None else DEFAULT_REPLICATES
    return ResamplingConfig(
        replicates=replicates,
        level=args.level,
        seed=args.seed,
        bandwidth=getattr(args, "bandwidth", "auto"),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bestofn",
        description="Expected best-out-of-n performance from repeated-training result pools.",
    )
    parser.add_argument("--version", action="version", version=f"bestofn {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    p = subparsers.add_parser("summarize", help="descriptive statistics of a result pool")
    p.add_argument("input", help="pool file (CSV or JSONL)")
    _add_input_flags(p)
    p.set_defaults(func=_cmd_summarize)

    p = subparsers.add_parser("boon", help="best-out-of-n estimates, optionally with CIs")
    p.add_argument("input", help="pool file (CSV or JSONL)")
    p.add_argument("--n", type=_parse_n_list, default=[DEFAULT_N],
                   help="comma-separated n values (default: 5)")
    p.add_argument("--estimator", choices=["nonparametric", "gaussian"],
                   default="nonparametric")
    _add_input_flags(p)
    _add_sampling_flags(p, bootstrap_default=None)
    p.set_defaults(func=_cmd_boon)

    p = subparsers.add_parser("curve", help="expected best-validation test score vs pool size")
    p.add_argument("input", help="pool file (CSV or JSONL)")
    p.add_argument("--m-max", type=int, default=20, help="largest pool size (default: 20)")
    p.add_argument("--samples-per-m", type=int, default=10_000,
                   help="Monte Carlo samples per pool size (default: 10000)")
    _add_input_flags(p)
    _add_sampling_flags(p, bootstrap_default=DEFAULT_REPLICATES)
    p.set_defaults(func=_cmd_curve)

    p = subparsers.add_parser("compare", help="CI on the best-out-of-n difference of two pools")
    p.add_argument("input_a", help="baseline pool file")
    p.add_argument("input_b", help="candidate pool file")
    p.add_argument("--n", type=_parse_n_list, default=[DEFAULT_N],
                   help="n for the compared estimates (default: 5)")
    _add_input_flags(p)
    _add_sampling_flags(p, bootstrap_default=DEFAULT_REPLICATES)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "seed", None) is None and hasattr(args, "seed"):
            args.seed = _default_seed()
        return args.func(args, argv)
    except (InsufficientDataError, DegeneratePoolError, ResamplingDegenerateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except (PoolFileError, InvalidDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
