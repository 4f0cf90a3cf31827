"""Empirical-CDF (rank) transform into pseudo-observations.

Each column is mapped to ``F(x_t) = r_t / T`` where ``r_t`` is the rank of
``x_t``. Under ``ties="max"`` the rank is the literal count of samples
``<= x_t``; under ``ties="average"`` (default) tied values share the mean
of the ranks they would occupy.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DatasetError

__all__ = ["TIE_POLICIES", "PseudoObservations", "ecdf_transform", "pseudo_observations"]

TIE_POLICIES = ("average", "max")


@dataclass(frozen=True, eq=False)
class PseudoObservations:
    """Rank-transformed sample, ``values[t, j]`` in (0, 1]."""

    column_names: tuple[str, ...]
    values: np.ndarray

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def columns(self) -> list[np.ndarray]:
        return [self.values[:, j] for j in range(self.dim)]


def _ranks(x: np.ndarray, ties: str) -> np.ndarray:
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    # start/end (1-based, inclusive) of each run of equal sorted values
    new_run = np.empty(n, dtype=bool)
    new_run[0] = True
    np.not_equal(xs[1:], xs[:-1], out=new_run[1:])
    run_id = np.cumsum(new_run) - 1
    starts = np.flatnonzero(new_run)
    ends = np.append(starts[1:], n)
    if ties == "max":
        sorted_rank = ends[run_id].astype(np.float64)
    else:
        sorted_rank = (starts[run_id] + 1 + ends[run_id]) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = sorted_rank
    return ranks


def ecdf_transform(x, ties: str = "average") -> np.ndarray:
    """Empirical CDF of each sample of ``x``, evaluated at that sample.

    >>> ecdf_transform([3.1, 1.2, 2.5]).tolist()
    [1.0, 0.3333333333333333, 0.6666666666666666]
    """
    if ties not in TIE_POLICIES:
        raise ValueError(f"ties must be one of {TIE_POLICIES}, got {ties!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {x.shape}")
    if x.size == 0:
        raise ValueError("ecdf_transform of an empty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("ecdf_transform input contains non-finite values")
    return _ranks(x, ties) / x.shape[0]


def pseudo_observations(
    d: Dataset, column_names: Sequence[str], ties: str = "average"
) -> PseudoObservations:
    names = tuple(column_names)
    if not names:
        raise DatasetError("no columns given")
    idx = [d.index_of(n) for n in names]
    if d.row_count < 2:
        raise DatasetError(f"need at least 2 rows, got {d.row_count}")
    u = np.empty((d.row_count, len(idx)))
    for j, c in enumerate(idx):
        u[:, j] = ecdf_transform(d.data[:, c], ties)
    return PseudoObservations(names, u)
