"""Exact k-th nearest neighbor distances.

:func:`build_index` builds a median-split kd-tree with per-node bounding
boxes; :func:`kth_distance` / :func:`kth_distances` query it, excluding the
query point itself. :func:`brute_kth_distance` is the full-scan reference
used to check the tree.

Distances to individual points are computed with the same arithmetic on
every path (tree, brute force, numba, numpy), so answers agree exactly,
not merely to a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import njit, use_numba

__all__ = [
    "NORMS",
    "PointSet",
    "NeighborIndex",
    "build_index",
    "kth_distance",
    "kth_distances",
    "brute_kth_distance",
]

NORMS = ("chebyshev", "euclidean")
_LEAF_SIZE = 16


def _norm_code(norm: str) -> int:
    try:
        return NORMS.index(norm)
    except ValueError:
        raise ValueError(f"norm must be one of {NORMS}, got {norm!r}") from None


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    norm: str = "chebyshev"

    def __post_init__(self):
        _norm_code(self.norm)
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError(f"points must be a T x d array, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise ValueError(f"a point set needs at least 2 points, got {pts.shape[0]}")
        if pts.shape[1] < 1:
            raise ValueError("points need at least one dimension")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        pts = np.ascontiguousarray(pts)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class NeighborIndex:
    """Flattened kd-tree. Leaves own the slice ``[start, end)`` of ``perm``."""

    pointset: PointSet
    perm: np.ndarray  # tree order -> original row
    tree_points: np.ndarray  # points[perm]
    start: np.ndarray
    end: np.ndarray
    left: np.ndarray  # -1 at leaves
    right: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray

    @property
    def size(self) -> int:
        return self.pointset.size

    @property
    def n_nodes(self) -> int:
        return self.start.shape[0]


def build_index(ps: PointSet, leaf_size: int = _LEAF_SIZE) -> NeighborIndex:
    """Median-split kd-tree, splitting on the widest box dimension.

    A node whose points all coincide is halved in row-index order.
    """
    pts = ps.points
    T = ps.size
    perm = np.arange(T)
    start, end, left, right, lo, hi = [], [], [], [], [], []

    def new_node(s, e):
        block = pts[perm[s:e]]
        start.append(s)
        end.append(e)
        left.append(-1)
        right.append(-1)
        lo.append(block.min(axis=0))
        hi.append(block.max(axis=0))
        return len(start) - 1

    stack = [new_node(0, T)]
    while stack:
        node = stack.pop()
        s, e = start[node], end[node]
        if e - s <= leaf_size:
            continue
        seg = perm[s:e]
        spread = hi[node] - lo[node]
        if spread.max() > 0.0:
            dim = int(np.argmax(spread))
            order = np.lexsort((seg, pts[seg, dim]))
        else:
            order = np.argsort(seg, kind="mergesort")
        perm[s:e] = seg[order]
        mid = (s + e) // 2
        left[node] = new_node(s, mid)
        right[node] = new_node(mid, e)
        stack.append(right[node])
        stack.append(left[node])

    perm = perm.copy()
    tree_points = np.ascontiguousarray(pts[perm])
    arrays = [
        np.asarray(a, dtype=np.int64) for a in (start, end, left, right)
    ] + [np.ascontiguousarray(np.vstack(b)) for b in (lo, hi)]
    for a in (perm, tree_points, *arrays):
        a.flags.writeable = False
    return NeighborIndex(ps, perm, tree_points, *arrays)


# --- query kernels -------------------------------------------------------


def _query_py(q, qi, k, norm, perm, tp, start, end, left, right, box_lo, box_hi):
    """Plain-Python/numpy twin of :func:`_query_nb` (same visiting order)."""
    d = tp.shape[1]
    best = np.full(k, np.inf)
    stack = [0]
    while stack:
        node = stack.pop()
        gap = np.maximum(np.maximum(box_lo[node] - q, q - box_hi[node]), 0.0)
        if norm == 0:
            md = gap.max()
        else:
            acc = 0.0
            for j in range(d):
                acc += gap[j] * gap[j]
            md = np.sqrt(acc)
        if md >= best[k - 1]:
            continue
        if left[node] < 0:
            s, e = start[node], end[node]
            diff = tp[s:e] - q
            if norm == 0:
                dist = np.abs(diff).max(axis=1)
            else:
                acc = np.zeros(e - s)
                for j in range(d):
                    acc += diff[:, j] * diff[:, j]
                dist = np.sqrt(acc)
            dist[perm[s:e] == qi] = np.inf
            best = np.sort(np.concatenate((best, dist)), kind="mergesort")[:k]
            continue
        a, b = left[node], right[node]
        # nearer child is visited first, so pushed last
        if _box_gap_py(q, box_lo[a], box_hi[a]) <= _box_gap_py(q, box_lo[b], box_hi[b]):
            stack.append(b)
            stack.append(a)
        else:
            stack.append(a)
            stack.append(b)
    return best[k - 1]


def _box_gap_py(q, lo, hi):
    return float(np.maximum(np.maximum(lo - q, q - hi), 0.0).max())


@njit
def _box_mindist_nb(q, lo, hi, norm):
    d = q.shape[0]
    if norm == 0:
        m = 0.0
        for j in range(d):
            g = max(lo[j] - q[j], q[j] - hi[j], 0.0)
            if g > m:
                m = g
        return m
    acc = 0.0
    for j in range(d):
        g = max(lo[j] - q[j], q[j] - hi[j], 0.0)
        acc += g * g
    return np.sqrt(acc)


@njit
def _box_gap_nb(q, lo, hi):
    m = 0.0
    for j in range(q.shape[0]):
        g = max(lo[j] - q[j], q[j] - hi[j], 0.0)
        if g > m:
            m = g
    return m


@njit
def _query_nb(q, qi, k, norm, perm, tp, start, end, left, right, box_lo, box_hi):
    d = tp.shape[1]
    best = np.full(k, np.inf)
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if _box_mindist_nb(q, box_lo[node], box_hi[node], norm) >= best[k - 1]:
            continue
        if left[node] < 0:
            for p in range(start[node], end[node]):
                if perm[p] == qi:
                    continue
                if norm == 0:
                    dist = 0.0
                    for j in range(d):
                        t = abs(tp[p, j] - q[j])
                        if t > dist:
                            dist = t
                else:
                    acc = 0.0
                    for j in range(d):
                        t = tp[p, j] - q[j]
                        acc += t * t
                    dist = np.sqrt(acc)
                if dist < best[k - 1]:
                    i = k - 1
                    while i > 0 and best[i - 1] > dist:
                        best[i] = best[i - 1]
                        i -= 1
                    best[i] = dist
            continue
        a = left[node]
        b = right[node]
        if top + 2 > stack.shape[0]:
            grown = np.empty(stack.shape[0] * 2, dtype=np.int64)
            grown[:top] = stack[:top]
            stack = grown
        if _box_gap_nb(q, box_lo[a], box_hi[a]) <= _box_gap_nb(q, box_lo[b], box_hi[b]):
            stack[top] = b
            stack[top + 1] = a
        else:
            stack[top] = a
            stack[top + 1] = b
        top += 2
    return best[k - 1]


@njit
def _query_all_nb(points, k, norm, perm, tp, start, end, left, right, box_lo, box_hi):
    T = points.shape[0]
    out = np.empty(T)
    for qi in range(T):
        out[qi] = _query_nb(
            points[qi], qi, k, norm, perm, tp, start, end, left, right, box_lo, box_hi
        )
    return out


def _tree_args(idx: NeighborIndex):
    return (idx.perm, idx.tree_points, idx.start, idx.end, idx.left, idx.right,
            idx.box_lo, idx.box_hi)


def _check_k(k: int, T: int) -> int:
    if isinstance(k, bool) or int(k) != k:
        raise ValueError(f"k must be an integer, got {k!r}")
    k = int(k)
    if not 1 <= k <= T - 1:
        raise ValueError(f"k={k} out of range [1, {T - 1}]")
    return k


def _check_row(row: int, T: int) -> int:
    if isinstance(row, bool) or int(row) != row or not 0 <= int(row) < T:
        raise ValueError(f"query_row={row!r} out of range [0, {T})")
    return int(row)


def kth_distance(idx: NeighborIndex, query_row: int, k: int) -> float:
    """Distance from point ``query_row`` to its k-th nearest other point."""
    T = idx.size
    k = _check_k(k, T)
    qi = _check_row(query_row, T)
    norm = _norm_code(idx.pointset.norm)
    q = idx.pointset.points[qi]
    fn = _query_nb if use_numba() else _query_py
    return float(fn(q, qi, k, norm, *_tree_args(idx)))


def kth_distances(idx: NeighborIndex, k: int) -> np.ndarray:
    """:func:`kth_distance` for every row, as a length-T array."""
    T = idx.size
    k = _check_k(k, T)
    norm = _norm_code(idx.pointset.norm)
    pts = idx.pointset.points
    if use_numba():
        return _query_all_nb(pts, k, norm, *_tree_args(idx))
    args = _tree_args(idx)
    return np.array([_query_py(pts[i], i, k, norm, *args) for i in range(T)])


def brute_kth_distance(ps: PointSet, query_row: int, k: int) -> float:
    """Reference answer by scanning and sorting all distances."""
    T = ps.size
    k = _check_k(k, T)
    qi = _check_row(query_row, T)
    diff = ps.points - ps.points[qi]
    if ps.norm == "chebyshev":
        dist = np.abs(diff).max(axis=1)
    else:
        acc = np.zeros(T)
        for j in range(ps.dim):
            acc += diff[:, j] * diff[:, j]
        dist = np.sqrt(acc)
    others = np.delete(dist, qi)
    return float(np.sort(others)[k - 1])
