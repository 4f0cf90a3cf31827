"""k-NN differential entropy, copula entropy and mutual information.

All values are in nats. The entropy estimate for ``T`` points in ``d``
dimensions is::

    H = psi(T) - psi(k) + log(c_d) + (d / T) * sum_t log(eps_t)

where ``eps_t`` is twice the distance from point ``t`` to its k-th nearest
neighbor and ``c_d`` is the volume of the unit-diameter ball of the norm
(1 for the maximum norm). Copula entropy is this estimate applied to the
rank-transformed sample; mutual information is its negative.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DatasetError
from .knn import NORMS, PointSet, build_index, kth_distances
from .rank import TIE_POLICIES, pseudo_observations

__all__ = [
    "EULER_GAMMA",
    "EstimatorParams",
    "CeEstimate",
    "DegenerateSampleError",
    "digamma",
    "unit_ball_log_volume",
    "knn_entropy",
    "copula_entropy",
    "mutual_information",
    "entropy_decomposition_residual",
]

EULER_GAMMA = 0.57721566490153286061

# Bernoulli-number coefficients B_2n / (2n) of the asymptotic series
_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x: float) -> float:
    """Digamma function for positive real ``x``.

    Shifts the argument above 10 with ``psi(x) = psi(x + 1) - 1/x``, then
    sums the asymptotic expansion; absolute error is below 1e-13 there.
    """
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"digamma defined here for finite x > 0, got {x}")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for c in _ASYMPTOTIC:
        series += c * p
        p *= inv2
    return shift + math.log(x) - 0.5 / x - series


def unit_ball_log_volume(d: int, norm: str) -> float:
    """log volume of the ball of diameter 1 in ``d`` dimensions."""
    if norm == "chebyshev":
        return 0.0
    if norm == "euclidean":
        return 0.5 * d * math.log(math.pi) - d * math.log(2.0) - math.lgamma(1.0 + 0.5 * d)
    raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")


class DegenerateSampleError(ValueError):
    """All points coincide; the entropy estimate is undefined."""


@dataclass(frozen=True)
class EstimatorParams:
    k: int = 3
    norm: str = "chebyshev"
    ties: str = "average"

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.ties not in TIE_POLICIES:
            raise ValueError(f"ties must be one of {TIE_POLICIES}, got {self.ties!r}")

    def as_dict(self) -> dict:
        return {"k": self.k, "norm": self.norm, "ties": self.ties}


@dataclass(frozen=True)
class CeEstimate:
    """Copula entropy in nats; ``mi`` is the matching mutual information."""

    value: float
    k: int
    norm: str
    sample_count: int
    dim: int

    @property
    def mi(self) -> float:
        return -self.value


def _entropy_of(points: np.ndarray, params: EstimatorParams) -> float:
    T, d = points.shape
    if T <= params.k:
        raise ValueError(f"need more than k={params.k} samples, got {T}")
    ps = PointSet(points, params.norm)
    eps = 2.0 * kth_distances(build_index(ps), params.k)
    positive = eps > 0.0
    if not positive.any():
        raise DegenerateSampleError(
            f"all {T} points are identical within k={params.k}; entropy undefined"
        )
    if not positive.all():
        eps = np.where(positive, eps, eps[positive].min())
    # fsum is exactly rounded, hence independent of row order
    log_sum = math.fsum(np.log(eps).tolist())
    return (
        digamma(T)
        - digamma(params.k)
        + unit_ball_log_volume(d, params.norm)
        + d * log_sum / T
    )


def knn_entropy(ps, params: EstimatorParams = EstimatorParams()) -> float:
    """Differential entropy estimate (nats) of a :class:`PointSet` or array.

    A ``PointSet`` carries its own norm, which overrides ``params.norm``.
    """
    if isinstance(ps, PointSet):
        if ps.norm != params.norm:
            params = EstimatorParams(params.k, ps.norm, params.ties)
        return _entropy_of(ps.points, params)
    return _entropy_of(PointSet(ps, params.norm).points, params)


def copula_entropy(
    d: Dataset, column_names: Sequence[str], params: EstimatorParams = EstimatorParams()
) -> CeEstimate:
    """Copula entropy of the named columns (<= 0 up to estimation noise)."""
    names = tuple(column_names)
    if len(names) < 2:
        raise DatasetError(f"copula entropy needs at least 2 columns, got {len(names)}")
    if len(set(names)) != len(names):
        raise DatasetError(f"repeated column in {list(names)}")
    po = pseudo_observations(d, names, params.ties)
    value = _entropy_of(po.values, params)
    return CeEstimate(value, params.k, params.norm, po.row_count, po.dim)


def mutual_information(
    d: Dataset, column_names: Sequence[str], params: EstimatorParams = EstimatorParams()
) -> float:
    return -copula_entropy(d, column_names, params).value


def entropy_decomposition_residual(
    d: Dataset, column_names: Sequence[str], params: EstimatorParams = EstimatorParams()
) -> float:
    """Joint entropy minus (sum of marginal entropies + copula entropy).

    All three terms are estimated independently, so the residual measures
    how consistent the estimator is with itself; it shrinks as T grows.
    """
    names = tuple(column_names)
    ce = copula_entropy(d, names, params).value
    joint = _entropy_of(d.matrix(names), params)
    marginals = sum(_entropy_of(d.matrix([n]), params) for n in names)
    return joint - (marginals + ce)
