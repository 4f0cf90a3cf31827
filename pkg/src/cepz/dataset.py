"""Tabular catalog data: loading, cleaning and train/test splitting.

A :class:`Dataset` is an immutable table of named float64 columns. The
expected photometric layout mirrors an SDSS quasar export (see
:data:`SDSS_COLUMNS`), but any set of unique column names works; roles
(target / feature / ignored) are assigned by name, never by position.
"""

from __future__ import annotations

import csv
import hashlib
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

__all__ = [
    "SDSS_COLUMNS",
    "DEFAULT_SENTINELS",
    "DatasetError",
    "Dataset",
    "ColumnRoles",
    "CleanPolicy",
    "load_csv",
    "save_csv",
    "clean",
    "split",
    "split_indices",
    "split_hash",
]

#: Redshift, five bands with their errors, and the luminosity magnitude.
SDSS_COLUMNS = (
    "z",
    "u", "sig_u",
    "g", "sig_g",
    "r", "sig_r",
    "i", "sig_i",
    "zband", "sig_z",
    "Mi",
)

DEFAULT_SENTINELS = (-9999.0, -99.0, 9999.0)


class DatasetError(ValueError):
    """Invalid input data or a violated data precondition."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Named numeric columns of equal length.

    ``data`` is a read-only ``(row_count, n_columns)`` float64 array.
    ``meta`` carries free-form annotations (e.g. the designated target of a
    synthetic dataset); it does not take part in equality.
    """

    column_names: tuple[str, ...]
    data: np.ndarray
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        names = tuple(str(n) for n in self.column_names)
        if any(n == "" for n in names):
            raise DatasetError("column names must be nonempty")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise DatasetError(f"duplicate column names: {dup}")
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim == 1 and len(names) == 0 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2 or arr.shape[1] != len(names):
            raise DatasetError(
                f"data shape {arr.shape} does not match {len(names)} column names"
            )
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[float]], meta=None) -> Dataset:
        names = list(columns)
        lengths = {len(columns[n]) for n in names}
        if len(lengths) > 1:
            raise DatasetError(f"columns have unequal lengths: {sorted(lengths)}")
        n_rows = lengths.pop() if lengths else 0
        data = np.empty((n_rows, len(names)))
        for j, n in enumerate(names):
            data[:, j] = np.asarray(columns[n], dtype=np.float64)
        return cls(tuple(names), data, meta or {})

    @property
    def row_count(self) -> int:
        return self.data.shape[0]

    @property
    def columns(self) -> list[np.ndarray]:
        return [self.data[:, j] for j in range(self.data.shape[1])]

    def index_of(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DatasetError(f"unknown column: {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.index_of(name)]

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        """Copy of the named columns as a ``(row_count, len(names))`` array."""
        idx = [self.index_of(n) for n in names]
        return np.ascontiguousarray(self.data[:, idx])

    def take(self, rows) -> Dataset:
        return Dataset(self.column_names, self.data[np.asarray(rows)], self.meta)

    def select(self, names: Sequence[str]) -> Dataset:
        return Dataset(tuple(names), self.matrix(names), self.meta)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.column_names == other.column_names and np.array_equal(
            self.data, other.data
        )

    def __repr__(self):
        return f"Dataset(columns={list(self.column_names)}, rows={self.row_count})"


@dataclass(frozen=True)
class ColumnRoles:
    """Role of each column: one target, some features, the rest ignored."""

    target: str
    features: tuple[str, ...]
    ignored: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "ignored", tuple(self.ignored))
        if not self.target:
            raise DatasetError("exactly one target column is required")
        if self.target in self.features:
            raise DatasetError(f"target {self.target!r} is also listed as a feature")
        if self.target in self.ignored:
            raise DatasetError(f"target {self.target!r} is also listed as ignored")
        if len(set(self.features)) != len(self.features):
            raise DatasetError("feature list contains duplicates")
        both = set(self.features) & set(self.ignored)
        if both:
            raise DatasetError(f"columns both feature and ignored: {sorted(both)}")

    @classmethod
    def resolve(cls, d: Dataset, target: str, features=None, ignored=()) -> ColumnRoles:
        """Check names against ``d``; ``features=None`` means every other column."""
        for name in (target, *(features or ()), *ignored):
            d.index_of(name)
        if features is None:
            skip = {target, *ignored}
            features = [n for n in d.column_names if n not in skip]
        return cls(target, tuple(features), tuple(ignored))

    @property
    def used(self) -> tuple[str, ...]:
        return (*self.features, self.target)


@dataclass(frozen=True)
class CleanPolicy:
    """Rows holding any sentinel (or non-finite) value are dropped."""

    sentinel_values: tuple[float, ...] = DEFAULT_SENTINELS
    action: str = "drop-row"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.sentinel_values)
        if not all(math.isfinite(v) for v in vals):
            raise DatasetError("sentinel values must be finite numbers")
        if self.action != "drop-row":
            raise DatasetError(f"unsupported clean action {self.action!r}")
        object.__setattr__(self, "sentinel_values", vals)


def load_csv(path, has_header: bool = True) -> Dataset:
    """Read a comma-separated numeric table.

    Without a header, columns are named ``col0 .. colN-1``. Errors name the
    1-based data row (the header is not counted) and the column.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh)]
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc

    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if has_header:
        if not rows:
            raise DatasetError(f"{path}: empty file, header expected")
        names = [c.strip() for c in rows[0]]
        body = rows[1:]
    else:
        if not rows:
            raise DatasetError(f"{path}: empty file")
        names = [f"col{j}" for j in range(len(rows[0]))]
        body = rows

    width = len(names)
    data = np.empty((len(body), width))
    for i, row in enumerate(body, start=1):
        if len(row) != width:
            raise DatasetError(
                f"{path}: ragged row {i}: {len(row)} fields, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                data[i - 1, j] = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: row {i}, column {names[j]!r}: cannot parse {cell!r}"
                ) from None
    return Dataset(tuple(names), data)


def save_csv(d: Dataset, path) -> None:
    """Write ``d`` with a header line; floats use round-trip-safe repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(d.column_names)
        for row in d.data.tolist():
            w.writerow([repr(v) for v in row])


def clean(
    d: Dataset, p: CleanPolicy = CleanPolicy(), columns: Iterable[str] | None = None
) -> tuple[Dataset, int]:
    """Drop rows with a sentinel or non-finite value in ``columns``.

    ``columns`` defaults to every column. Returns the cleaned dataset and
    the number of removed rows.
    """
    names = list(d.column_names) if columns is None else list(columns)
    block = d.matrix(names) if names else np.empty((d.row_count, 0))
    bad = ~np.isfinite(block)
    if p.sentinel_values:
        bad |= np.isin(block, np.asarray(p.sentinel_values))
    keep = ~bad.any(axis=1)
    n_kept = int(keep.sum())
    if n_kept < 2:
        raise DatasetError(
            f"too few samples after cleaning: {n_kept} of {d.row_count} rows left"
        )
    if n_kept == d.row_count:
        return d, 0
    return d.take(np.flatnonzero(keep)), d.row_count - n_kept


def split_indices(n_rows: int, train_fraction: float, seed: int):
    """Seeded permutation split; returns ``(train_rows, test_rows)``."""
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if n_rows < 2:
        raise DatasetError(f"need at least 2 rows to split, got {n_rows}")
    # round() absorbs products like 0.7 * 10 = 7.000000000000001
    n_train = math.ceil(round(train_fraction * n_rows, 9))
    if n_train <= 0 or n_train >= n_rows:
        raise DatasetError(
            f"split of {n_rows} rows at fraction {train_fraction} leaves an empty side"
            f" ({n_train} train, {n_rows - n_train} test)"
        )
    rng = np.random.Generator(np.random.Philox(seed))
    perm = rng.permutation(n_rows)
    return perm[:n_train], perm[n_train:]


def split(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    train, test = split_indices(d.row_count, train_fraction, seed)
    return d.take(train), d.take(test)


def split_hash(train_rows, test_rows) -> str:
    """Short digest identifying a partition, recorded in run reports."""
    h = hashlib.sha256()
    h.update(np.asarray(train_rows, dtype=np.int64).tobytes())
    h.update(b"|")
    h.update(np.asarray(test_rows, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]
