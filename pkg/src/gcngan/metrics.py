"""Evaluation metrics for predicted weighted snapshots."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import Matrix, ShapeError, check_same_shape, check_square

log = logging.getLogger(__name__)


class UndefinedMetric(ValueError):
    """A metric cannot be computed for this input (e.g. KL of an all-zero matrix)."""


def _check_pair(truth: Matrix, pred: Matrix) -> int:
    check_same_shape(truth, pred, "truth and prediction")
    return check_square(truth, "truth")


def mse(truth: Matrix, pred: Matrix) -> float:
    """Squared Frobenius error divided by N^2 (diagonal included)."""
    n = _check_pair(truth, pred)
    d = truth - pred
    return float(np.sum(d * d)) / (n * n)


def edgewise_kl(truth: Matrix, pred: Matrix) -> float:
    """KL divergence between the sum-normalised truth and prediction.

    Entries where either normalised value is zero contribute nothing.
    Natural logarithm.
    """
    _check_pair(truth, pred)
    if np.any(truth < 0) or np.any(pred < 0):
        raise ValueError("edge-wise KL requires non-negative matrices")
    st, sp = float(np.sum(truth)), float(np.sum(pred))
    if st <= 0 or sp <= 0:
        raise UndefinedMetric("edge-wise KL undefined for an all-zero matrix")
    p, q = truth / st, pred / sp
    both = (p > 0) & (q > 0)
    return float(np.sum(p[both] * np.log(p[both] / q[both])))


def mismatch_rate(truth: Matrix, pred: Matrix) -> float:
    """Fraction of off-diagonal entries whose zero/non-zero status disagrees."""
    n = _check_pair(truth, pred)
    if n < 2:
        raise ShapeError("mismatch rate needs at least 2 nodes")
    differ = (truth == 0) != (pred == 0)
    np.fill_diagonal(differ, False)
    return float(np.count_nonzero(differ)) / (n * (n - 1))


@dataclass(frozen=True)
class SliceScore:
    slice: int
    mse: float
    kl: float | None
    mismatch: float


def score(slice_index: int, truth: Matrix, pred: Matrix) -> SliceScore:
    try:
        kl = edgewise_kl(truth, pred)
    except UndefinedMetric as exc:
        log.warning("slice %d: %s; excluded from the KL average", slice_index, exc)
        kl = None
    return SliceScore(slice_index, mse(truth, pred), kl, mismatch_rate(truth, pred))


@dataclass(frozen=True)
class MetricsReport:
    per_slice: list[SliceScore]
    mse: float
    kl: float | None
    mismatch: float


def aggregate(scores: list[SliceScore]) -> MetricsReport:
    """Column-wise arithmetic means; slices with undefined KL are skipped for KL only."""
    if not scores:
        raise ValueError("no slices to aggregate")
    kls = [s.kl for s in scores if s.kl is not None]
    return MetricsReport(
        per_slice=list(scores),
        mse=float(np.mean([s.mse for s in scores])),
        kl=float(np.mean(kls)) if kls else None,
        mismatch=float(np.mean([s.mismatch for s in scores])),
    )


def _fmt(v: float | None) -> str:
    return "nan" if v is None or math.isnan(v) else repr(float(v))


def write_report_csv(report: MetricsReport, path) -> None:
    """Columns ``slice,mse,kl,mismatch``; last row holds the averages."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slice", "mse", "kl", "mismatch"])
        for s in report.per_slice:
            w.writerow([s.slice, _fmt(s.mse), _fmt(s.kl), _fmt(s.mismatch)])
        w.writerow(["average", _fmt(report.mse), _fmt(report.kl), _fmt(report.mismatch)])


def read_report_csv(path) -> MetricsReport:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["slice", "mse", "kl", "mismatch"] or rows[-1][0] != "average":
        raise ValueError(f"{path}: not a metrics report")

    def num(x):
        v = float(x)
        return None if math.isnan(v) else v

    scores = [SliceScore(int(r[0]), float(r[1]), num(r[2]), float(r[3])) for r in rows[1:-1]]
    avg = rows[-1]
    return MetricsReport(scores, float(avg[1]), num(avg[2]), float(avg[3]))
