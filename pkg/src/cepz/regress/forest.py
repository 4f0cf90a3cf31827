"""Random-forest regression.

Each tree is grown on a bootstrap resample; every split maximizes the
reduction of the squared error over a random subset of the features. Leaves
predict the mean target of their rows. All randomness comes from a
splitmix64 stream: tree ``i`` is seeded with the ``i``-th splitmix64 output
of the master seed, and that seed drives both its bootstrap draw and the
per-node feature subsets. The numba and numpy tree builders consume the
stream identically and grow the same trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._accel import njit, use_numba

__all__ = ["ForestParams", "Tree", "ForestModel", "train_forest", "splitmix64_seeds"]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix_next(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def splitmix64_seeds(seed: int, n: int) -> list[int]:
    """First ``n`` outputs of splitmix64 started at ``seed``."""
    state = int(seed) & _MASK64
    out = []
    for _ in range(n):
        state, z = _splitmix_next(state)
        out.append(z)
    return out


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 5
    features_per_split: int | None = None  # None: ceil(d / 3)
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0 or None, got {self.max_depth}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")

    def mtry(self, d: int) -> int:
        if self.features_per_split is None:
            return max(1, math.ceil(d / 3))
        return min(self.features_per_split, d)

    def as_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat tree; ``feature[n] == -1`` marks a leaf. Rows with
    ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        if use_numba():
            return _tree_predict_nb(X, self.feature, self.threshold, self.left, self.right, self.value)
        return _tree_predict_np(X, self.feature, self.threshold, self.left, self.right, self.value)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Tree:
        return cls(
            np.asarray(doc["feature"], dtype=np.int64),
            np.asarray(doc["threshold"], dtype=np.float64),
            np.asarray(doc["left"], dtype=np.int64),
            np.asarray(doc["right"], dtype=np.int64),
            np.asarray(doc["value"], dtype=np.float64),
            np.asarray(doc["n_samples"], dtype=np.int64),
        )


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[Tree, ...]
    params: ForestParams
    importance: np.ndarray
    n_features: int
    y_min: float
    y_max: float
    feature_names: tuple[str, ...] | None = None

    def predict(self, X) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        # summation rounding must not push the mean outside the leaf range
        return np.clip(acc / len(self.trees), self.y_min, self.y_max)


def _as_matrix(X, n_features: int) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim == 1:
        X = X[:, None] if n_features == 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(
            f"expected {n_features} feature columns, got array of shape {X.shape}"
        )
    return X


# --- prediction kernels ------------------------------------------------------


@njit
def _tree_predict_nb(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for r in range(n):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


def _tree_predict_np(X, feature, threshold, left, right, value):
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        rows = np.flatnonzero(active)
        nd = node[rows]
        go_left = X[rows, feature[nd]] <= threshold[nd]
        node[rows] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return value[node]


# --- tree growing kernels ----------------------------------------------------
# Both builders take the same inputs and return
# (feature, threshold, left, right, value, n_samples, n_nodes, gain_per_feature).


@njit
def _splitmix_nb(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit
def _grow_tree_nb(X, y, seed, min_leaf, max_depth, mtry):
    n, d = X.shape
    state = seed
    idx = np.empty(n, dtype=np.int64)
    for t in range(n):
        state, z = _splitmix_nb(state)
        idx[t] = np.int64(z % np.uint64(n))

    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    gains = np.zeros(d)
    feats = np.arange(d)

    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 1
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_depth[0] = 0
    n_nodes = 1
    ys = np.empty(n)
    xs = np.empty(n)

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]
        m = hi - lo
        total = 0.0
        ymin = y[idx[lo]]
        ymax = ymin
        for t in range(lo, hi):
            v = y[idx[t]]
            total += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        mean = total / m
        value[node] = mean
        n_samples[node] = m
        if m < 2 * min_leaf or ymin == ymax or (max_depth >= 0 and depth >= max_depth):
            continue

        # centered targets keep the score arithmetic well conditioned
        csum = 0.0
        for t in range(lo, hi):
            csum += y[idx[t]] - mean
        parent = csum * csum / m

        for a in range(mtry):
            state, z = _splitmix_nb(state)
            b = a + np.int64(z % np.uint64(d - a))
            tmp = feats[a]
            feats[a] = feats[b]
            feats[b] = tmp

        best_gain = 0.0
        best_f = -1
        best_pos = -1
        best_thr = 0.0
        for a in range(mtry):
            f = feats[a]
            seg = idx[lo:hi]
            for t in range(m):
                xs[t] = X[seg[t], f]
            order = np.argsort(xs[:m], kind="mergesort")
            for t in range(m):
                ys[t] = y[seg[order[t]]] - mean
            sl = 0.0
            for p in range(m - 1):
                sl += ys[p]
                nl = p + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                x0 = xs[order[p]]
                x1 = xs[order[p + 1]]
                if not x0 < x1:
                    continue
                sr = csum - sl
                gain = sl * sl / nl + sr * sr / nr - parent
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_pos = nl
                    thr = 0.5 * (x0 + x1)
                    if thr >= x1:
                        thr = x0
                    best_thr = thr
        if best_f < 0:
            continue

        seg = idx[lo:hi].copy()
        for t in range(m):
            xs[t] = X[seg[t], best_f]
        order = np.argsort(xs[:m], kind="mergesort")
        for t in range(m):
            idx[lo + t] = seg[order[t]]
        feature[node] = best_f
        threshold[node] = best_thr
        gains[best_f] += best_gain
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        mid = lo + best_pos
        # right pushed first so the left subtree is grown first
        st_node[top] = rnode
        st_lo[top] = mid
        st_hi[top] = hi
        st_depth[top] = depth + 1
        st_node[top + 1] = lnode
        st_lo[top + 1] = lo
        st_hi[top + 1] = mid
        st_depth[top + 1] = depth + 1
        top += 2
    return feature, threshold, left, right, value, n_samples, n_nodes, gains


def _grow_tree_np(X, y, seed, min_leaf, max_depth, mtry):
    n, d = X.shape
    state = int(seed) & _MASK64
    idx = np.empty(n, dtype=np.int64)
    for t in range(n):
        state, z = _splitmix_next(state)
        idx[t] = z % n

    feature, threshold, left, right, value, n_samples = [], [], [], [], [], []
    gains = np.zeros(d)
    feats = list(range(d))

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        n_samples.append(0)
        return len(feature) - 1

    stack = [(new_node(), 0, n, 0)]
    while stack:
        node, lo, hi, depth = stack.pop()
        m = hi - lo
        seg = idx[lo:hi]
        yseg = y[seg]
        # cumsum is a sequential sum, matching the numba loop bit for bit
        total = np.cumsum(yseg)[-1]
        mean = total / m
        value[node] = mean
        n_samples[node] = m
        if m < 2 * min_leaf or yseg.min() == yseg.max() or (max_depth >= 0 and depth >= max_depth):
            continue
        yc = yseg - mean
        csum = np.cumsum(yc)[-1]
        parent = csum * csum / m

        for a in range(mtry):
            state, z = _splitmix_next(state)
            b = a + z % (d - a)
            feats[a], feats[b] = feats[b], feats[a]

        best_gain, best_f, best_pos, best_thr = 0.0, -1, -1, 0.0
        nl = np.arange(1, m)
        nr = m - nl
        size_ok = (nl >= min_leaf) & (nr >= min_leaf)
        for a in range(mtry):
            f = feats[a]
            xs = X[seg, f]
            order = np.argsort(xs, kind="stable")
            xsorted = xs[order]
            sl = np.cumsum(yc[order])[:-1]
            sr = csum - sl
            gain = sl * sl / nl + sr * sr / nr - parent
            ok = size_ok & (xsorted[:-1] < xsorted[1:]) & (gain > best_gain)
            if not ok.any():
                continue
            cand = np.where(ok, gain, -np.inf)
            p = int(np.argmax(cand))
            best_gain = float(gain[p])
            best_f = f
            best_pos = p + 1
            x0, x1 = xsorted[p], xsorted[p + 1]
            thr = 0.5 * (x0 + x1)
            best_thr = x0 if thr >= x1 else thr
        if best_f < 0:
            continue

        order = np.argsort(X[seg, best_f], kind="stable")
        idx[lo:hi] = seg[order]
        feature[node] = best_f
        threshold[node] = best_thr
        gains[best_f] += best_gain
        lnode = new_node()
        rnode = new_node()
        left[node], right[node] = lnode, rnode
        mid = lo + best_pos
        stack.append((rnode, mid, hi, depth + 1))
        stack.append((lnode, lo, mid, depth + 1))

    k = len(feature)
    return (
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64),
        np.asarray(n_samples, dtype=np.int64),
        k,
        gains,
    )


def train_forest(X, y, params: ForestParams = ForestParams(), feature_names=None) -> ForestModel:
    """Fit a regression forest to ``X`` (rows x features) and ``y``."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64))
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"X must be a nonempty 2-D matrix, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data contains non-finite values")

    d = X.shape[1]
    mtry = params.mtry(d)
    max_depth = -1 if params.max_depth is None else params.max_depth
    numba_path = use_numba()
    trees = []
    gains = np.zeros(d)
    for tree_seed in splitmix64_seeds(params.seed, params.n_trees):
        if numba_path:
            out = _grow_tree_nb(X, y, np.uint64(tree_seed), params.min_leaf, max_depth, mtry)
        else:
            out = _grow_tree_np(X, y, tree_seed, params.min_leaf, max_depth, mtry)
        feat, thr, lft, rgt, val, cnt, k, g = out
        trees.append(
            Tree(feat[:k].copy(), thr[:k].copy(), lft[:k].copy(), rgt[:k].copy(), val[:k].copy(), cnt[:k].copy())
        )
        gains += g
    total = gains.sum()
    importance = gains / total if total > 0 else np.zeros(d)
    names = tuple(feature_names) if feature_names is not None else None
    return ForestModel(tuple(trees), params, importance, d, float(y.min()), float(y.max()), names)
