"""Simulation scenarios: squared operator-norm errors of tuned estimators.

Each replication draws its data from its own seeded stream, computes the
sample covariance once and hands it to every requested estimator. Results are
keyed by replication index, so the report does not depend on how many worker
processes ran the replications.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import multiprocessing
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bandwidth import cv_select, select_sure, select_taper
from .datagen import DATA, FOLDS, make_rng, mvn_sample
from .estimators import PopulationModel, taper_weights
from .matcore import band, cholesky, op_norm

log = logging.getLogger(__name__)

__all__ = [
    "ESTIMATORS",
    "TAPER_ALIASES",
    "ScenarioSpec",
    "ReplicationRecord",
    "EstimatorSummary",
    "SimulationReport",
    "run_scenario",
    "emit_report",
    "read_report",
    "summary_path",
]

ESTIMATORS = ("cv_op", "cv_l11", "taper_sure", "band_sure_f", "band_sure_op")
# other names in use for the tapering column
TAPER_ALIASES = ("P_YZ", "P_FZ")

LONG_HEADER = ("alpha", "p", "n", "estimator", "replication", "selected_k", "sq_op_error")
SUMMARY_HEADER = ("alpha", "p", "n", "estimator", "mean", "sd")


@dataclass(frozen=True)
class ScenarioSpec:
    p: int
    n: int
    alpha: float
    rho: float = 0.6
    reps: int = 100
    seed: int = 0
    estimators: tuple[str, ...] = ESTIMATORS
    diagonal: float = 1.0
    folds: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.n < 3:
            raise ValueError("n must be >= 3 for the Sure criteria")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ValueError(f"unknown estimators {unknown}; choose from {ESTIMATORS}")
        if len(set(self.estimators)) != len(self.estimators):
            raise ValueError("duplicate estimators")
        if any(e.startswith("cv_") for e in self.estimators) and self.n < 2 * self.folds:
            raise ValueError(f"cross-validation needs n >= {2 * self.folds} for {self.folds} folds")

    def model(self) -> PopulationModel:
        return PopulationModel(self.p, self.rho, self.alpha, self.diagonal)


@dataclass(frozen=True)
class ReplicationRecord:
    estimator: str
    replication: int
    selected_k: int | None
    sq_op_error: float | None

    @property
    def failed(self) -> bool:
        return self.sq_op_error is None


@dataclass(frozen=True)
class EstimatorSummary:
    estimator: str
    mean: float | None
    sd: float | None
    count: int


@dataclass
class SimulationReport:
    spec: ScenarioSpec
    records: list[ReplicationRecord]
    failures: list[dict] = field(default_factory=list)

    def errors(self, estimator: str) -> np.ndarray:
        return np.array([r.sq_op_error for r in self.records
                         if r.estimator == estimator and not r.failed], dtype=np.float64)

    def selected(self, estimator: str) -> np.ndarray:
        return np.array([r.selected_k for r in self.records
                         if r.estimator == estimator and not r.failed], dtype=np.int64)

    def summary(self) -> list[EstimatorSummary]:
        out = []
        for est in self.spec.estimators:
            errs = self.errors(est)
            mean = float(np.mean(errs)) if errs.size else None
            sd = float(np.std(errs, ddof=1)) if errs.size > 1 else None
            out.append(EstimatorSummary(est, mean, sd, int(errs.size)))
        return out

    def summary_for(self, estimator: str) -> EstimatorSummary:
        for s in self.summary():
            if s.estimator == estimator:
                return s
        raise KeyError(estimator)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _fit(name: str, shat, x, n: int, spec: ScenarioSpec, rep: int):
    if name == "band_sure_f":
        k = select_sure(shat, n, "sure_f").k
        return k, band(shat, k)
    if name == "band_sure_op":
        k = select_sure(shat, n, "sure_op").k
        return k, band(shat, k)
    if name == "taper_sure":
        k = select_taper(shat, n).k
        p = shat.shape[0]
        offs = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :])
        return k, np.asarray(shat) * taper_weights(k, p)[offs]
    if name in ("cv_op", "cv_l11"):
        rng = make_rng(spec.seed, rep, FOLDS)
        k = cv_select(x, loss=name[3:], folds=spec.folds, rng=rng).k
        return k, band(shat, k)
    raise ValueError(f"unknown estimator {name!r}")


def _replicate(spec: ScenarioSpec, sigma: np.ndarray, chol: np.ndarray, rep: int):
    x = mvn_sample(chol, spec.n, make_rng(spec.seed, rep, DATA))
    xc = x - x.mean(axis=0)
    shat = xc.T @ xc / (spec.n - 1)
    shat = 0.5 * (shat + shat.T)
    records, failures = [], []
    for name in spec.estimators:
        try:
            k, est = _fit(name, shat, x, spec.n, spec, rep)
            err = op_norm(np.asarray(est) - sigma) ** 2
            records.append(ReplicationRecord(name, rep, int(k), float(err)))
        except Exception as exc:  # a failed cell must not abort the run
            records.append(ReplicationRecord(name, rep, None, None))
            failures.append({
                "estimator": name,
                "replication": rep,
                "error": f"{type(exc).__name__}: {exc}",
                "traceback": traceback.format_exc(),
            })
    return rep, records, failures


def _replicate_many(args):
    spec, sigma, chol, reps = args
    return [_replicate(spec, sigma, chol, r) for r in reps]


def run_scenario(spec: ScenarioSpec, workers: int = 1) -> SimulationReport:
    sigma = np.asarray(spec.model().sigma())
    chol = cholesky(sigma)
    reps = list(range(spec.reps))
    if workers <= 1 or spec.reps == 1:
        results = [_replicate(spec, sigma, chol, r) for r in reps]
    else:
        chunks = [reps[i::workers] for i in range(workers)]
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = [item for part in pool.map(_replicate_many,
                                                 [(spec, sigma, chol, c) for c in chunks if c])
                       for item in part]
    results.sort(key=lambda r: r[0])
    by_est = {name: [] for name in spec.estimators}
    failures = []
    for _, records, fails in results:
        for rec in records:
            by_est[rec.estimator].append(rec)
        failures.extend(fails)
    for f in failures:
        log.warning("estimator %s failed in replication %d: %s",
                    f["estimator"], f["replication"], f["error"])
    ordered = [rec for name in spec.estimators for rec in by_est[name]]
    return SimulationReport(spec, ordered, failures)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    # repr is the shortest string that round-trips the double exactly
    return repr(float(x))


def _parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def _parse_int(s: str) -> int | None:
    return None if s == "" else int(s)


def summary_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_summary{path.suffix or '.csv'}")


def long_rows(report: SimulationReport) -> list[list[str]]:
    s = report.spec
    return [[_num(s.alpha), _num(s.p), _num(s.n), r.estimator, _num(r.replication),
             _num(r.selected_k), _num(r.sq_op_error)] for r in report.records]


def summary_rows(report: SimulationReport) -> list[list[str]]:
    s = report.spec
    return [[_num(s.alpha), _num(s.p), _num(s.n), e.estimator, _num(e.mean), _num(e.sd)]
            for e in report.summary()]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _spec_dict(spec: ScenarioSpec) -> dict:
    d = asdict(spec)
    d["estimators"] = list(spec.estimators)
    return d


def emit_report(report: SimulationReport, path: str | Path, fmt: str = "csv") -> list[Path]:
    """Write the long-form rows and the per-estimator summary.

    CSV writes ``path`` plus ``<stem>_summary.csv`` next to it; JSON writes a
    single document holding the spec, rows, summary and failures. Returns the
    written paths.
    """
    path = Path(path)
    if fmt == "csv":
        side = summary_path(path)
        path.write_text(_csv_text(LONG_HEADER, long_rows(report)))
        side.write_text(_csv_text(SUMMARY_HEADER, summary_rows(report)))
        return [path, side]
    if fmt == "json":
        doc = {
            "spec": _spec_dict(report.spec),
            "rows": [dict(zip(LONG_HEADER, row)) for row in long_rows(report)],
            "summary": [dict(zip(SUMMARY_HEADER, row)) for row in summary_rows(report)],
            "failures": [{k: v for k, v in f.items() if k != "traceback"} for f in report.failures],
        }
        path.write_text(json.dumps(doc, indent=1) + "\n")
        return [path]
    raise ValueError(f"unknown report format {fmt!r}")


def _records_from_rows(rows) -> tuple[dict, list[ReplicationRecord]]:
    meta = {}
    records = []
    for row in rows:
        meta = {"alpha": float(row["alpha"]), "p": int(row["p"]), "n": int(row["n"])}
        records.append(ReplicationRecord(row["estimator"], int(row["replication"]),
                                         _parse_int(row["selected_k"]),
                                         _parse_float(row["sq_op_error"])))
    return meta, records


def read_report(path: str | Path, fmt: str = "csv", spec: ScenarioSpec | None = None) -> SimulationReport:
    """Inverse of :func:`emit_report`.

    A CSV report does not carry the full scenario, so ``spec`` should be given
    for it; otherwise one is reconstructed from the rows with default seed.
    """
    path = Path(path)
    if fmt == "json":
        doc = json.loads(path.read_text())
        d = doc["spec"]
        spec = ScenarioSpec(**{**d, "estimators": tuple(d["estimators"])})
        _, records = _records_from_rows(doc["rows"])
        return SimulationReport(spec, records, doc.get("failures", []))
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    meta, records = _records_from_rows(rows)
    if spec is None:
        names = tuple(dict.fromkeys(r.estimator for r in records))
        reps = 1 + max((r.replication for r in records), default=0)
        spec = ScenarioSpec(p=meta.get("p", 1), n=meta.get("n", 3), alpha=meta.get("alpha", 1.0),
                            reps=reps, estimators=names)
    return SimulationReport(spec, records)


def recompute_summary(long_csv: str | Path) -> dict[str, tuple[float, float | None]]:
    """Mean and sd per estimator straight from a long-form CSV."""
    with Path(long_csv).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    vals: dict[str, list[float]] = {}
    for row in rows:
        vals.setdefault(row["estimator"], [])
        if row["sq_op_error"] != "":
            vals[row["estimator"]].append(float(row["sq_op_error"]))
    out = {}
    for est, v in vals.items():
        mean = math.fsum(v) / len(v) if v else float("nan")
        sd = math.sqrt(math.fsum((x - mean) ** 2 for x in v) / (len(v) - 1)) if len(v) > 1 else None
        out[est] = (mean, sd)
    return out
