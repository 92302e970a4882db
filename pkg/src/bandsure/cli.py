"""Command line entry point: ``bandsure run | select | verify``.

Exit status is 0 on success, 1 on invalid input and 2 on runtime failure
(including a failed oracle check in ``verify``).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .bandwidth import METHODS, select
from .harness import ESTIMATORS, ScenarioSpec, emit_report, run_scenario
from .verify import CSV_FIELDS, SUITES, run_suite

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; invalid input must exit with 1 here
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _estimator_list(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in ESTIMATORS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown estimators {bad}; choose from {', '.join(ESTIMATORS)}")
    return names


def _uint64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bandsure", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate one (p, n, alpha) scenario")
    run.add_argument("--p", type=int, required=True)
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--alpha", type=float, required=True)
    run.add_argument("--rho", type=float, default=0.6)
    run.add_argument("--reps", type=int, default=100)
    run.add_argument("--seed", type=_uint64, default=0)
    run.add_argument("--estimators", type=_estimator_list, default=ESTIMATORS,
                     help=f"comma separated subset of {','.join(ESTIMATORS)}")
    run.add_argument("--diagonal", type=float, default=1.0)
    run.add_argument("--folds", type=int, default=10)
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--workers", type=int, default=1)

    sel = sub.add_parser("select", help="choose a bandwidth for an n x p data CSV")
    sel.add_argument("--input", type=Path, required=True)
    sel.add_argument("--method", choices=METHODS, required=True)
    sel.add_argument("--folds", type=int, default=10)
    sel.add_argument("--seed", type=_uint64, default=0)

    ver = sub.add_parser("verify", help="run oracle checks, CSV rows to stdout")
    ver.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    ver.add_argument("--seed", type=_uint64, default=0)
    return parser


def _load_matrix(path: Path) -> np.ndarray:
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]  # header line
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.size == 0:
        raise ValueError(f"{path}: expected a rectangular n x p numeric table")
    return data


def _cmd_run(args) -> int:
    spec = ScenarioSpec(p=args.p, n=args.n, alpha=args.alpha, rho=args.rho, reps=args.reps,
                        seed=args.seed, estimators=args.estimators, diagonal=args.diagonal,
                        folds=args.folds)
    report = run_scenario(spec, workers=args.workers)
    written = emit_report(report, args.out, args.format)
    for s in report.summary():
        mean = "NA" if s.mean is None else f"{s.mean:.4f}"
        sd = "NA" if s.sd is None else f"{s.sd:.4f}"
        print(f"{s.estimator:>13}  mean={mean}  sd={sd}  n_ok={s.count}")
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    if report.failures:
        print(f"{len(report.failures)} estimator cell(s) failed; see log", file=sys.stderr)
    return EXIT_OK


def _cmd_select(args) -> int:
    data = _load_matrix(args.input)
    res = select(data, args.method, folds=args.folds, rng=np.random.default_rng(args.seed))
    print(f"method={res.method} k={res.k}")
    print("K,criterion")
    for k, v in res.curve:
        print(f"{k},{v!r}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    rows = run_suite(args.suite, args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow(["" if v is None else v for v in r.as_row().values()])
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "select": _cmd_select, "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except (ValueError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"bandsure {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"bandsure {args.command}: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
