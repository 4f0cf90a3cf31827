"""Photo-z style accuracy metrics, overall and per redshift bin.

For predictions ``p`` and truths ``y`` with scaled residual
``delta = (p - y) / (1 + y)``:

* ``sigma_nmad = 1.4826 * median(|delta - median(delta)|)``
* ``outlier_fraction`` = share of rows with ``|delta| > 0.15``

Bins are keyed on the true value: ``[0,2]``, ``(2,4]``, ``(4,inf)``. The
first bin also takes the (unphysical) values in ``(-1, 0)`` so the bins
always partition the rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["NMAD_SCALE", "OUTLIER_CUT", "BINS", "Metrics", "EvalReport", "evaluate"]

NMAD_SCALE = 1.4826
OUTLIER_CUT = 0.15
#: (label, lower bound exclusive, upper bound inclusive)
BINS = (("[0,2]", -math.inf, 2.0), ("(2,4]", 2.0, 4.0), ("(4,inf)", 4.0, math.inf))


@dataclass(frozen=True)
class Metrics:
    count: int
    rmse: float
    mae: float
    sigma_nmad: float
    outlier_fraction: float

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "rmse": self.rmse,
            "mae": self.mae,
            "sigma_nmad": self.sigma_nmad,
            "outlier_fraction": self.outlier_fraction,
        }


def _metrics(pred: np.ndarray, y: np.ndarray) -> Metrics:
    err = pred - y
    delta = err / (1.0 + y)
    return Metrics(
        count=int(y.shape[0]),
        rmse=float(np.sqrt(np.mean(err * err))),
        mae=float(np.mean(np.abs(err))),
        sigma_nmad=float(NMAD_SCALE * np.median(np.abs(delta - np.median(delta)))),
        outlier_fraction=float(np.mean(np.abs(delta) > OUTLIER_CUT)),
    )


@dataclass(frozen=True)
class EvalReport:
    overall: Metrics
    bins: dict  # label -> Metrics, empty bins omitted

    @property
    def rmse(self) -> float:
        return self.overall.rmse

    @property
    def mae(self) -> float:
        return self.overall.mae

    @property
    def sigma_nmad(self) -> float:
        return self.overall.sigma_nmad

    @property
    def outlier_fraction(self) -> float:
        return self.overall.outlier_fraction

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.as_dict(),
            "bins": {label: m.as_dict() for label, m in self.bins.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scope", "count", "rmse", "mae", "sigma_nmad", "outlier_fraction"])
        rows = [("all", self.overall), *self.bins.items()]
        for scope, m in rows:
            w.writerow([scope, m.count, repr(m.rmse), repr(m.mae),
                        repr(m.sigma_nmad), repr(m.outlier_fraction)])
        return buf.getvalue()


def evaluate(pred, y) -> EvalReport:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if pred.shape != y.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions, {y.shape[0]} targets")
    if y.shape[0] == 0:
        raise ValueError("cannot evaluate an empty sample")
    if not np.all(y > -1.0):
        raise ValueError("targets must be > -1 (scaled residuals divide by 1 + y)")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite predictions or targets")
    bins = {}
    for label, lo, hi in BINS:
        mask = (y > lo) & (y <= hi)
        if mask.any():
            bins[label] = _metrics(pred[mask], y[mask])
    return EvalReport(_metrics(pred, y), bins)
