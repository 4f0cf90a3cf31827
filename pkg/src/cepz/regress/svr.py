"""Epsilon-insensitive support-vector regression with an RBF kernel.

The dual is solved in the single-coefficient form ``beta_i in [-C, C]``,
``sum(beta) = 0``::

    W(beta) = -1/2 beta' K beta + y' beta - eps * |beta|_1

by SMO-style pairwise ascent. Each step picks the maximal KKT violating
pair and maximizes ``W`` exactly along ``beta_i += t, beta_j -= t``. The
1-D problem is a concave piecewise quadratic, so ``W`` never decreases.
The prediction is ``f(x) = sum_i beta_i k(x, x_i) + b``. Features are
standardized with train-set mean/std before the kernel is applied; targets
are used as given.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .._accel import njit, use_numba

__all__ = ["SvrParams", "SvrModel", "train_svr", "rbf_kernel", "dual_objective"]


@dataclass(frozen=True)
class SvrParams:
    C: float = 10.0
    epsilon: float = 0.1
    gamma: float | None = None  # None: 1 / n_features
    tol: float = 1e-3
    max_iter: int = 200_000

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")

    def resolved_gamma(self, d: int) -> float:
        return 1.0 / d if self.gamma is None else float(self.gamma)

    def as_dict(self) -> dict:
        return {"C": self.C, "epsilon": self.epsilon, "gamma": self.gamma,
                "tol": self.tol, "max_iter": self.max_iter}


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray  # raw (unstandardized) training rows
    coef: np.ndarray
    bias: float
    gamma: float
    x_mean: np.ndarray
    x_scale: np.ndarray
    params: SvrParams
    converged: bool
    n_iter: int
    support_index: np.ndarray  # row numbers within the training set
    feature_names: tuple[str, ...] | None = None
    trace: np.ndarray | None = None  # dual objective after each accepted step

    @property
    def n_features(self) -> int:
        return self.x_mean.shape[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None] if self.n_features == 1 else X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} feature columns, got array of shape {X.shape}"
            )
        if self.coef.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        Z = (X - self.x_mean) / self.x_scale
        S = (self.support_vectors - self.x_mean) / self.x_scale
        return rbf_kernel(Z, S, self.gamma) @ self.coef + self.bias


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def _gram(Z: np.ndarray, gamma: float) -> np.ndarray:
    # pdist/squareform gives an exactly symmetric matrix with a unit diagonal
    K = squareform(np.exp(-gamma * pdist(Z, "sqeuclidean")))
    np.fill_diagonal(K, 1.0)
    return np.ascontiguousarray(K)


def dual_objective(K: np.ndarray, y: np.ndarray, beta: np.ndarray, epsilon: float) -> float:
    return float(-0.5 * beta @ K @ beta + y @ beta - epsilon * np.abs(beta).sum())


# --- solver kernels ------------------------------------------------------------
# Shared contract: smo(K, y, C, eps, tol, max_iter, trace_cap)
#   -> (beta, g, n_iter, status, trace, n_trace)
# status: 0 converged, 1 hit max_iter, 2 stalled (no strict ascent possible).


@njit
def _pair_step_nb(bi, bj, gi, gj, eta, eps, hi):
    """Maximize phi(t) over [0, hi] for beta_i += t, beta_j -= t.

    phi is concave and quadratic between the kinks of |beta_i + t| and
    |beta_j - t|; walk the segments left to right until the stationary
    point falls inside one.
    """
    p1 = -bi if (bi < 0.0 and -bi < hi) else hi
    p2 = bj if (bj > 0.0 and bj < hi) else hi
    if p1 > p2:
        p1, p2 = p2, p1
    a = 0.0
    for seg in range(3):
        b = p1 if seg == 0 else (p2 if seg == 1 else hi)
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        si = 1.0 if bi + mid > 0.0 else -1.0
        sj = 1.0 if bj - mid > 0.0 else -1.0
        slope0 = gi - gj - eps * (si - sj)
        if eta > 0.0:
            ts = slope0 / eta
        elif slope0 > 0.0:
            ts = np.inf
        else:
            ts = -np.inf
        if ts <= a:
            return a
        if ts < b:
            return ts
        a = b
    return a


@njit
def _phi_nb(t, bi, bj, gi, gj, eta, eps):
    return (t * (gi - gj) - 0.5 * eta * t * t
            - eps * (abs(bi + t) - abs(bi) + abs(bj - t) - abs(bj)))


@njit
def _smo_nb(K, y, C, eps, tol, max_iter, trace_cap):
    n = y.shape[0]
    beta = np.zeros(n)
    g = y.copy()
    trace = np.empty(trace_cap)
    n_trace = 0
    W = 0.0
    status = 1
    it = 0
    while it < max_iter:
        i = -1
        j = -1
        up = -np.inf
        dn = np.inf
        for m in range(n):
            if beta[m] < C:
                v = g[m] - eps if beta[m] >= 0.0 else g[m] + eps
                if v > up:
                    up = v
                    i = m
            if beta[m] > -C:
                v = g[m] - eps if beta[m] > 0.0 else g[m] + eps
                if v < dn:
                    dn = v
                    j = m
        if i < 0 or j < 0 or up - dn <= tol:
            status = 0
            break
        bi = beta[i]
        bj = beta[j]
        hi = min(C - bi, bj + C)
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t = _pair_step_nb(bi, bj, g[i], g[j], eta, eps, hi)
        gain = _phi_nb(t, bi, bj, g[i], g[j], eta, eps)
        if not (t > 0.0 and gain > 0.0):
            status = 2
            break
        nbi = bi + t
        nbj = bj - t
        if t == hi:
            # land exactly on the box edge that limited the step
            if C - bi <= bj + C:
                nbi = C
            else:
                nbj = -C
        beta[i] = min(max(nbi, -C), C)
        beta[j] = min(max(nbj, -C), C)
        ti = beta[i] - bi
        tj = bj - beta[j]
        Ki = K[i]
        Kj = K[j]
        for m in range(n):
            g[m] = g[m] - (ti * Ki[m] - tj * Kj[m])
        W = W + gain
        if n_trace < trace_cap:
            trace[n_trace] = W
            n_trace += 1
        it += 1
    return beta, g, it, status, trace, n_trace


# plain-Python twins of the scalar helpers
_pair_step_py = getattr(_pair_step_nb, "py_func", _pair_step_nb)
_phi_py = getattr(_phi_nb, "py_func", _phi_nb)


def _smo_np(K, y, C, eps, tol, max_iter, trace_cap):
    n = y.shape[0]
    beta = np.zeros(n)
    g = y.copy()
    trace = np.empty(trace_cap)
    n_trace = 0
    W = 0.0
    status = 1
    it = 0
    while it < max_iter:
        pos_or_zero = beta >= 0.0
        d_up = np.where(pos_or_zero, g - eps, g + eps)
        d_dn = np.where(beta > 0.0, g - eps, g + eps)
        up_ok = beta < C
        dn_ok = beta > -C
        if not up_ok.any() or not dn_ok.any():
            status = 0
            break
        i = int(np.argmax(np.where(up_ok, d_up, -np.inf)))
        j = int(np.argmin(np.where(dn_ok, d_dn, np.inf)))
        if d_up[i] - d_dn[j] <= tol:
            status = 0
            break
        bi = float(beta[i])
        bj = float(beta[j])
        gi = float(g[i])
        gj = float(g[j])
        hi = min(C - bi, bj + C)
        eta = float(K[i, i] + K[j, j] - 2.0 * K[i, j])
        t = _pair_step_py(bi, bj, gi, gj, eta, eps, hi)
        gain = _phi_py(t, bi, bj, gi, gj, eta, eps)
        if not (t > 0.0 and gain > 0.0):
            status = 2
            break
        nbi = bi + t
        nbj = bj - t
        if t == hi:
            if C - bi <= bj + C:
                nbi = C
            else:
                nbj = -C
        beta[i] = min(max(nbi, -C), C)
        beta[j] = min(max(nbj, -C), C)
        ti = beta[i] - bi
        tj = bj - beta[j]
        g = g - (ti * K[i] - tj * K[j])
        W = W + gain
        if n_trace < trace_cap:
            trace[n_trace] = W
            n_trace += 1
        it += 1
    return beta, g, it, status, trace, n_trace


def _bias(beta, g, C, eps):
    free = (beta != 0.0) & (np.abs(beta) < C)
    if free.any():
        return float(np.mean(g[free] - eps * np.sign(beta[free])))
    up_ok = beta < C
    dn_ok = beta > -C
    lo = np.where(beta >= 0.0, g - eps, g + eps)[up_ok]
    hi = np.where(beta > 0.0, g - eps, g + eps)[dn_ok]
    if lo.size and hi.size:
        return float(0.5 * (lo.max() + hi.min()))
    return float(lo.max() if lo.size else hi.min())


def train_svr(
    X,
    y,
    params: SvrParams = SvrParams(),
    feature_names=None,
    record_trace: bool = False,
) -> SvrModel:
    """Fit an RBF epsilon-SVR.

    Hitting ``max_iter`` (or stalling) does not raise; the returned model has
    ``converged=False`` and the caller decides what to do with it.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64))
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError(f"X must be a 2-D matrix, got shape {X.shape}")
    if X.shape[0] < 2 or y.shape != (X.shape[0],):
        raise ValueError(f"need >= 2 rows and matching y; got X {X.shape}, y {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data contains non-finite values")

    d = X.shape[1]
    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)
    x_scale[x_scale == 0.0] = 1.0
    Z = (X - x_mean) / x_scale
    gamma = params.resolved_gamma(d)
    K = _gram(Z, gamma)

    C, eps = float(params.C), float(params.epsilon)
    cap = params.max_iter if record_trace else 0
    smo = _smo_nb if use_numba() else _smo_np
    beta, g, n_iter, status, trace, n_trace = smo(K, y, C, eps, float(params.tol), int(params.max_iter), cap)
    b = _bias(beta, g, C, eps)
    sv = np.flatnonzero(beta != 0.0)
    return SvrModel(
        support_vectors=X[sv].copy(),
        coef=beta[sv].copy(),
        bias=b,
        gamma=gamma,
        x_mean=x_mean,
        x_scale=x_scale,
        params=params,
        converged=bool(status == 0),
        n_iter=int(n_iter),
        support_index=sv,
        feature_names=tuple(feature_names) if feature_names is not None else None,
        trace=trace[:n_trace].copy() if record_trace else None,
    )
