import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cepz.dataset import Dataset, DatasetError
from cepz.rank import ecdf_transform, pseudo_observations


def naive_ecdf(x):
    """Literal counting form, O(T^2): share of samples <= each sample."""
    x = np.asarray(x, dtype=float)
    return np.array([np.sum(x <= v) for v in x]) / len(x)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(1, 60), elements=finite)
small_ints = arrays(np.float64, st.integers(1, 60), elements=st.integers(-4, 4).map(float))


def test_examples():
    assert ecdf_transform([3.1, 1.2, 2.5]).tolist() == [3 / 3, 1 / 3, 2 / 3]
    assert ecdf_transform([5.0]).tolist() == [1.0]
    assert ecdf_transform([2, 2, 1]).tolist() == [2.5 / 3, 2.5 / 3, 1 / 3]
    assert ecdf_transform([2, 2, 1], ties="max").tolist() == [1.0, 1.0, 1 / 3]


def test_errors():
    with pytest.raises(ValueError, match="empty"):
        ecdf_transform([])
    with pytest.raises(ValueError, match="non-finite"):
        ecdf_transform([1.0, np.nan])
    with pytest.raises(ValueError, match="ties"):
        ecdf_transform([1.0], ties="min")


@given(small_ints)
def test_max_policy_matches_counting_definition(x):
    assert np.array_equal(ecdf_transform(x, ties="max"), naive_ecdf(x))


@given(small_ints)
def test_average_policy_matches_scipy(x):
    expected = scipy.stats.rankdata(x, method="average") / len(x)
    assert np.array_equal(ecdf_transform(x), expected)


@given(vectors)
def test_range_and_uniform_marginal(x):
    u = ecdf_transform(x)
    assert np.all((u > 0) & (u <= 1))
    if len(np.unique(x)) == len(x):
        assert np.array_equal(np.sort(u), np.arange(1, len(x) + 1) / len(x))


@given(arrays(np.float64, st.integers(2, 50), elements=st.floats(-30, 30), unique=True))
def test_monotone_invariance(x):
    u = ecdf_transform(x)
    for g in (np.exp, lambda v: v**3, lambda v: 1 / (1 + np.exp(-v)), lambda v: 7 * v - 2):
        gx = g(x)
        if len(np.unique(gx)) == len(x):  # transform kept values distinct
            assert np.array_equal(ecdf_transform(gx), u)


@given(vectors, st.randoms())
@settings(max_examples=50)
def test_permutation_equivariance(x, random):
    perm = list(range(len(x)))
    random.shuffle(perm)
    assert np.array_equal(ecdf_transform(x[perm]), ecdf_transform(x)[perm])


def test_strictly_increasing_maps_to_strictly_increasing():
    x = np.linspace(-1, 1, 17)
    assert np.all(np.diff(ecdf_transform(x)) > 0)


def test_pseudo_observations(rng):
    x = rng.standard_normal(4)
    d = Dataset(("x", "ex", "n"), np.column_stack([x, np.exp(x), rng.standard_normal(4)]))
    po = pseudo_observations(d, ["x", "ex", "n"])
    assert po.row_count == 4 and po.dim == 3
    assert np.array_equal(po.values[:, 0], po.values[:, 1])
    for col in po.columns:
        assert np.array_equal(np.sort(col), [0.25, 0.5, 0.75, 1.0])
    with pytest.raises(DatasetError, match="unknown column"):
        pseudo_observations(d, ["x", "nope"])
