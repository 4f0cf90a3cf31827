"""Synthetic datasets with known dependence structure.

Random numbers come from numpy's counter-based Philox bit generator
(``np.random.Generator(np.random.Philox(seed))``); normals use numpy's
ziggurat sampler and uniforms its 53-bit double conversion. Fixing the
seed fixes the dataset for a given numpy release.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

__all__ = [
    "MARGINALS",
    "REGRESSION_FORMS",
    "GaussianCopulaSpec",
    "RegressionSpec",
    "rng_for",
    "gaussian_mi",
    "sample_gaussian_copula",
    "sample_regression",
]


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


#: Strictly increasing marginal transforms that can be applied per column.
MARGINALS = {
    "identity": lambda x: x,
    "exp": np.exp,
    "cube": lambda x: x * x * x,
    "logistic": _logistic,
}


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def gaussian_mi(rho: float) -> float:
    """Mutual information (nats) of a bivariate normal with correlation ``rho``."""
    return -0.5 * math.log1p(-rho * rho)


@dataclass(frozen=True, eq=False)
class GaussianCopulaSpec:
    correlation: np.ndarray
    n_rows: int
    seed: int = 0
    marginals: tuple[str, ...] | None = None
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        R = np.array(self.correlation, dtype=np.float64)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] < 1:
            raise ValueError(f"correlation must be a square matrix, got shape {R.shape}")
        if not np.array_equal(R, R.T):
            raise ValueError("correlation matrix is not symmetric")
        if not np.all(np.diag(R) == 1.0):
            raise ValueError("correlation matrix must have a unit diagonal")
        if self.n_rows < 2:
            raise ValueError(f"n_rows must be >= 2, got {self.n_rows}")
        n = R.shape[0]
        marg = tuple(self.marginals) if self.marginals is not None else ("identity",) * n
        if len(marg) != n:
            raise ValueError(f"{len(marg)} marginals given for {n} columns")
        unknown = [m for m in marg if m not in MARGINALS]
        if unknown:
            raise ValueError(f"unknown marginal transform(s) {unknown}; menu: {sorted(MARGINALS)}")
        names = (
            tuple(self.column_names)
            if self.column_names is not None
            else tuple(f"x{j + 1}" for j in range(n))
        )
        if len(names) != n:
            raise ValueError(f"{len(names)} column names given for {n} columns")
        R.flags.writeable = False
        object.__setattr__(self, "correlation", R)
        object.__setattr__(self, "marginals", marg)
        object.__setattr__(self, "column_names", names)

    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.correlation)
        except np.linalg.LinAlgError:
            raise ValueError("correlation matrix is not positive definite") from None

    @classmethod
    def bivariate(cls, rho: float, n_rows: int, seed: int = 0, marginals=None) -> GaussianCopulaSpec:
        return cls(np.array([[1.0, rho], [rho, 1.0]]), n_rows, seed, marginals)


def sample_gaussian_copula(spec: GaussianCopulaSpec) -> Dataset:
    """Draw ``z = L @ n`` row-wise, then apply each column's marginal transform.

    The pairwise mutual information of columns i, j is
    ``gaussian_mi(R[i, j])`` whatever the marginals are.
    """
    L = spec.cholesky()
    normals = rng_for(spec.seed).standard_normal((spec.n_rows, L.shape[0]))
    z = normals @ L.T
    for j, m in enumerate(spec.marginals):
        z[:, j] = MARGINALS[m](z[:, j])
    meta = {"generator": "gaussian_copula", "seed": spec.seed,
            "correlation": spec.correlation.tolist()}
    return Dataset(spec.column_names, z, meta)


def _linear(x):
    return x[:, 0]


def _additive_quadratic(x):
    return x[:, 0] + 0.5 * x[:, 1] ** 2


def _interaction(x):
    return x[:, 0] + x[:, 0] * x[:, 1]


#: name -> (number of relevant features, f)
REGRESSION_FORMS = {
    "linear": (1, _linear),
    "additive_quadratic": (2, _additive_quadratic),
    "interaction": (2, _interaction),
}


@dataclass(frozen=True)
class RegressionSpec:
    """Target ``offset + f(relevant) + N(0, noise_sd^2)``.

    Features are uniform on ``[-feature_range, feature_range]``. With the
    defaults the target spans roughly [0, 6], a redshift-like range that
    populates every evaluation bin.
    """

    form: str = "additive_quadratic"
    n_noise_features: int = 4
    noise_sd: float = 0.1
    offset: float = 2.0
    feature_range: float = 2.0
    target_name: str = "z"

    def __post_init__(self):
        if self.form not in REGRESSION_FORMS:
            raise ValueError(f"unknown form {self.form!r}; choose from {sorted(REGRESSION_FORMS)}")
        if self.n_noise_features < 0:
            raise ValueError("n_noise_features must be >= 0")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if not self.feature_range > 0:
            raise ValueError("feature_range must be > 0")


def sample_regression(n_rows: int, seed: int, spec: RegressionSpec = RegressionSpec()) -> Dataset:
    """Features ``x1..xm`` (relevant ones first) plus the target column.

    ``meta`` records the target name, the feature names and the true
    relevant subset.
    """
    if n_rows < 2:
        raise ValueError(f"n_rows must be >= 2, got {n_rows}")
    n_rel, f = REGRESSION_FORMS[spec.form]
    n_feat = n_rel + spec.n_noise_features
    rng = rng_for(seed)
    X = rng.uniform(-spec.feature_range, spec.feature_range, size=(n_rows, n_feat))
    noise = rng.standard_normal(n_rows)
    y = spec.offset + f(X) + spec.noise_sd * noise
    names = tuple(f"x{j + 1}" for j in range(n_feat))
    data = np.column_stack((X, y))
    meta = {
        "generator": "regression",
        "seed": seed,
        "form": spec.form,
        "target": spec.target_name,
        "features": names,
        "relevant": names[:n_rel],
    }
    return Dataset((*names, spec.target_name), data, meta)
