"""Filter-style feature selection by copula-entropy mutual information.

Each candidate feature is scored by its bivariate mutual information with
the target; features are ranked by score and a subset is picked either as
the top ``m`` or as everything at or above a threshold.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .dataset import Dataset, DatasetError
from .entropy import EstimatorParams, mutual_information

__all__ = [
    "SelectionReport",
    "rank_features",
    "select_top",
    "select_threshold",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SelectionReport:
    target: str
    entries: tuple[tuple[str, float], ...]
    params: EstimatorParams
    sample_count: int
    selected: tuple[str, ...] = ()
    criterion: dict | None = field(default=None, compare=True)

    @property
    def scores(self) -> dict[str, float]:
        return dict(self.entries)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "selection_report",
            "target": self.target,
            "sample_count": self.sample_count,
            "estimator": self.params.as_dict(),
            "units": "nats",
            "entries": [{"feature": n, "mi_nats": v} for n, v in self.entries],
            "criterion": self.criterion,
            "selected": list(self.selected),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "mi_nats"])
        for name, value in self.entries:
            w.writerow([name, repr(value)])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, doc: dict) -> SelectionReport:
        if doc.get("kind") != "selection_report":
            raise ValueError("not a selection report document")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
        est = doc["estimator"]
        return cls(
            target=doc["target"],
            entries=tuple((e["feature"], float(e["mi_nats"])) for e in doc["entries"]),
            params=EstimatorParams(est["k"], est["norm"], est.get("ties", "average")),
            sample_count=int(doc["sample_count"]),
            selected=tuple(doc.get("selected", ())),
            criterion=doc.get("criterion"),
        )

    @classmethod
    def from_json(cls, text: str) -> SelectionReport:
        return cls.from_dict(json.loads(text))


def rank_features(
    d: Dataset,
    target: str,
    features: Sequence[str],
    params: EstimatorParams = EstimatorParams(),
    jobs: int = 1,
) -> SelectionReport:
    """Score every feature against ``target``; nothing is selected yet.

    Entries are sorted by decreasing score, ties by feature name. With
    ``jobs > 1`` the per-feature estimates run on a thread pool (the
    neighbor kernel releases the GIL); results do not depend on ``jobs``.
    """
    features = tuple(features)
    if not features:
        raise DatasetError("no candidate features given")
    if len(set(features)) != len(features):
        raise DatasetError("candidate feature list contains duplicates")
    if target in features:
        raise DatasetError(f"target {target!r} is listed as a feature")
    for name in (target, *features):
        d.index_of(name)

    def score(name):
        return mutual_information(d, [name, target], params)

    if jobs > 1 and len(features) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(score, features))
    else:
        values = [score(f) for f in features]

    entries = sorted(zip(features, values), key=lambda e: (-e[1], e[0]))
    return SelectionReport(target, tuple(entries), params, d.row_count)


def select_top(r: SelectionReport, m: int) -> SelectionReport:
    n = len(r.entries)
    if isinstance(m, bool) or int(m) != m or not 1 <= m <= n:
        raise ValueError(f"m={m!r} out of range [1, {n}]")
    m = int(m)
    return replace(r, selected=r.feature_names[:m], criterion={"mode": "top_m", "m": m})


def select_threshold(r: SelectionReport, tau: float) -> SelectionReport:
    """Keep features with score ``>= tau``; the result may be empty."""
    tau = float(tau)
    chosen = tuple(n for n, v in r.entries if v >= tau)
    crit_tau = tau if math.isfinite(tau) else ("-inf" if tau < 0 else "inf")
    return replace(r, selected=chosen, criterion={"mode": "threshold", "tau": crit_tau})
