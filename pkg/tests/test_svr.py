import numpy as np
import pytest

from cepz.regress import SvrParams, model_from_json, model_to_json, train_svr
from cepz.regress.svr import _gram, dual_objective
from cepz.synth import rng_for, sample_regression


def fixtures():
    r = rng_for(21)
    X1 = r.uniform(-2, 2, (80, 1))
    yield "sine", X1, np.sin(2 * X1[:, 0]) + 0.05 * r.standard_normal(80), SvrParams(C=5.0, epsilon=0.05)
    X2 = r.standard_normal((120, 3))
    yield "linear", X2, X2 @ [1.0, -0.5, 0.0] + 0.1 * r.standard_normal(120), SvrParams(C=1.0, epsilon=0.1)
    X3 = r.standard_normal((60, 2))
    yield "tight_box", X3, 5 * np.sign(X3[:, 0]) + r.standard_normal(60), SvrParams(C=0.2, epsilon=0.01)
    d = sample_regression(150, 3)
    yield "synth", d.matrix(d.meta["features"]), d.column("z"), SvrParams()


FIXTURES = list(fixtures())
IDS = [f[0] for f in FIXTURES]


def _beta_and_grad(model, X, y):
    Z = (X - model.x_mean) / model.x_scale
    K = _gram(Z, model.gamma)
    beta = np.zeros(X.shape[0])
    beta[model.support_index] = model.coef
    return K, beta, y - K @ beta


@pytest.mark.parametrize("fx", FIXTURES, ids=IDS)
def test_dual_ascent_and_box(fx, kernel_path):
    _, X, y, p = fx
    m = train_svr(X, y, p, record_trace=True)
    assert m.converged
    assert m.trace.shape[0] == m.n_iter
    assert np.all(np.diff(m.trace) >= 0.0)
    assert np.all(np.abs(m.coef) <= p.C)
    assert abs(m.coef.sum()) < 1e-9 * max(1.0, p.C * len(y))
    # the recorded running objective matches a direct evaluation
    K, beta, _ = _beta_and_grad(m, X, y)
    assert abs(m.trace[-1] - dual_objective(K, y, beta, p.epsilon)) < 1e-8 * max(1.0, abs(m.trace[-1]))


@pytest.mark.parametrize("fx", FIXTURES, ids=IDS)
def test_kkt_at_convergence(fx, kernel_path):
    _, X, y, p = fx
    m = train_svr(X, y, p)
    K, beta, g = _beta_and_grad(m, X, y)
    r = g - m.bias  # y_i - f(x_i)
    tol = p.tol + 1e-9
    eps, C = p.epsilon, p.C
    zero = beta == 0
    upper, lower = beta == C, beta == -C
    pos = (beta > 0) & ~upper
    neg = (beta < 0) & ~lower
    assert np.all(np.abs(r[zero]) <= eps + tol)
    assert np.all(np.abs(r[pos] - eps) <= tol)
    assert np.all(np.abs(r[neg] + eps) <= tol)
    assert np.all(r[upper] >= eps - tol)
    assert np.all(r[lower] <= -eps + tol)


@pytest.mark.parametrize("fx", FIXTURES[:3], ids=IDS[:3])
def test_matches_convex_solver(fx):
    cp = pytest.importorskip("cvxpy")
    _, X, y, p = fx
    m = train_svr(X, y, SvrParams(p.C, p.epsilon, tol=1e-6))
    K, beta, _ = _beta_and_grad(m, X, y)
    w = dual_objective(K, y, beta, p.epsilon)
    L = np.linalg.cholesky(K + 1e-10 * np.eye(len(y)))
    b = cp.Variable(len(y))
    prob = cp.Problem(
        cp.Maximize(-0.5 * cp.sum_squares(L.T @ b) + y @ b - p.epsilon * cp.norm1(b)),
        [cp.sum(b) == 0, b <= p.C, b >= -p.C],
    )
    prob.solve()
    assert w >= prob.value - 1e-4 * max(1.0, abs(prob.value))


def test_linear_target_accuracy(rng):
    X = rng.uniform(-1, 1, (300, 2))
    y = 0.8 * X[:, 0] - 0.4 * X[:, 1]
    m = train_svr(X[:200], y[:200], SvrParams(C=10.0, epsilon=0.01, gamma=0.5))
    assert np.sqrt(np.mean((m.predict(X[200:]) - y[200:]) ** 2)) < 0.05


def test_constant_target(rng):
    X = rng.standard_normal((50, 2))
    m = train_svr(X, np.full(50, 3.5))
    assert m.converged and m.n_iter == 0
    assert m.coef.shape == (0,)
    assert abs(m.bias - 3.5) <= 0.1 + 1e-12
    assert np.all(m.predict(rng.standard_normal((7, 2))) == m.bias)


def test_affine_feature_invariance(rng):
    X = rng.standard_normal((100, 2))
    y = np.tanh(X[:, 0]) + 0.1 * X[:, 1]
    a = train_svr(X, y)
    b = train_svr(X * [3.0, 0.01] + [100.0, -5.0], y)
    Xt = rng.standard_normal((20, 2))
    np.testing.assert_allclose(a.predict(Xt), b.predict(Xt * [3.0, 0.01] + [100.0, -5.0]), atol=1e-8)


def test_kernel_paths_agree():
    from cepz import _accel

    _, X, y, p = FIXTURES[3]
    out = []
    for flag in (True, False):
        prev = _accel.set_numba(flag)
        try:
            m = train_svr(X, y, p, record_trace=True)
        finally:
            _accel.set_numba(prev)
        out.append((m.coef.tobytes(), m.bias, m.n_iter, m.trace.tobytes()))
    assert out[0] == out[1]


def test_max_iter_reports_not_converged(kernel_path):
    _, X, y, _ = FIXTURES[3]
    m = train_svr(X[:50], y[:50], SvrParams(max_iter=3))
    assert not m.converged and m.n_iter == 3
    assert train_svr(X[:50], y[:50]).converged


def test_json_round_trip(rng):
    X = rng.standard_normal((60, 2))
    m = train_svr(X, X[:, 0] ** 2, feature_names=["p", "q"])
    back = model_from_json(model_to_json(m))
    Xt = rng.standard_normal((10, 2))
    np.testing.assert_array_equal(back.predict(Xt), m.predict(Xt))
    assert back.feature_names == ("p", "q") and back.converged == m.converged


def test_params_validation():
    for bad in ({"C": 0}, {"epsilon": -1}, {"gamma": 0}, {"tol": 0}, {"max_iter": 0}):
        with pytest.raises(ValueError):
            SvrParams(**bad)
    with pytest.raises(ValueError, match="non-finite"):
        train_svr(np.array([[1.0], [np.inf]]), np.zeros(2))
