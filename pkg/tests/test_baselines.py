import logging

import numpy as np
import pytest
from scipy.optimize import minimize

from csvm.baselines import fit_knn, fit_ridge_logistic
from csvm.core import Dataset, NoncoverageTargets
from csvm.datagen import gen_example1
from csvm.errors import DimensionError, InvalidArgumentError
from csvm.inference import evaluate_scores, robust_thresholds


def separable_1d():
    x = np.array([-3.0, -2.0, -1.5, -1.0, 1.0, 1.2, 2.0, 3.5])
    return Dataset(x[:, None], np.where(x > 0, 1, -1))


def test_large_penalty_shrinks_and_keeps_order():
    d = separable_1d()
    small = fit_ridge_logistic(d, 0.1)
    big = fit_ridge_logistic(d, 1.0)
    assert abs(big.coef[0]) < abs(small.coef[0])
    probes = np.linspace(-4, 4, 9)[:, None]
    assert np.all(np.diff(big.decision_function(probes)) > 0)


def test_gradient_small_at_solution():
    d = gen_example1(300, 5, seed=1)
    m = fit_ridge_logistic(d, 0.01, tol=1e-9)
    assert m.converged and m.grad_norm <= 1e-9


def test_symmetric_data_zero_intercept():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = np.where(rng.random(40) < 0.5, 1, -1)
    d = Dataset(np.vstack([X, -X]), np.concatenate([y, -y]))
    assert abs(fit_ridge_logistic(d, 0.05).intercept) < 1e-8


def test_matches_generic_optimizer():
    d = gen_example1(200, 4, seed=2)
    lam = 0.02
    X, y = d.features, d.labels.astype(float)

    def obj(w):
        f = X @ w[:-1] + w[-1]
        return np.mean(np.logaddexp(0.0, -y * f)) + lam * w[:-1] @ w[:-1]

    ref = minimize(obj, np.zeros(5), method="BFGS", options={"gtol": 1e-10})
    m = fit_ridge_logistic(d, lam)
    np.testing.assert_allclose(np.append(m.coef, m.intercept), ref.x, atol=1e-5)
    assert obj(np.append(m.coef, m.intercept)) <= ref.fun + 1e-12


def test_non_convergence_flag(caplog):
    d = gen_example1(100, 3, seed=3)
    with caplog.at_level(logging.WARNING):
        m = fit_ridge_logistic(d, 1e-6, max_iters=1, tol=1e-14)
    assert not m.converged and m.iterations == 1
    assert "did not converge" in caplog.text


def test_logistic_errors():
    d = separable_1d()
    with pytest.raises(InvalidArgumentError):
        fit_ridge_logistic(d, 0.0)
    with pytest.raises(InvalidArgumentError):
        fit_ridge_logistic(Dataset([[0.0], [1.0]], [1, 1]), 0.1)
    with pytest.raises(DimensionError):
        fit_ridge_logistic(d, 0.1).decision_function(np.ones((2, 2)))


def test_knn_all_neighbours_constant():
    d = gen_example1(30, 3, seed=4)
    m = fit_knn(d, d.n)
    np.testing.assert_allclose(m.decision_function(np.random.default_rng(1).normal(size=(7, 3))), d.n_pos / d.n)


def test_knn_single_neighbour_at_training_point():
    d = gen_example1(30, 3, seed=4)
    m = fit_knn(d, 1)
    np.testing.assert_array_equal(m.decision_function(d.features), (d.labels == 1).astype(float))


def test_knn_scores_discrete_and_brute_force():
    d = gen_example1(60, 3, seed=5)
    k = 7
    q = np.random.default_rng(2).normal(size=(25, 3))
    s = fit_knn(d, k).decision_function(q)
    assert set(np.round(s * k, 12)) <= set(range(k + 1))
    for row, val in zip(q, s):
        dist = [np.sum((row - x) ** 2) for x in d.features]
        idx = sorted(range(d.n), key=lambda i: (dist[i], i))[:k]
        assert val == np.mean(d.labels[idx] == 1)


def test_knn_ties_break_by_index():
    d = Dataset([[1.0], [-1.0], [1.0]], [1, -1, -1])
    # both of the first two points are at distance 1 from the origin
    assert fit_knn(d, 1).decision_function([[0.0]])[0] == 1.0
    d2 = Dataset([[-1.0], [1.0]], [-1, 1])
    assert fit_knn(d2, 1).decision_function([[0.0]])[0] == 0.0


def test_knn_errors():
    d = separable_1d()
    with pytest.raises(InvalidArgumentError):
        fit_knn(d, 0)
    with pytest.raises(InvalidArgumentError):
        fit_knn(d, d.n + 1)
    with pytest.raises(DimensionError):
        fit_knn(d, 2).decision_function(np.ones((1, 3)))


@pytest.mark.parametrize("fit", [lambda d: fit_ridge_logistic(d, 0.01), lambda d: fit_knn(d, 9)],
                         ids=["logistic", "knn"])
def test_plug_in_tuning_guarantee(fit):
    train = gen_example1(200, 5, 0, 0, 0)
    tune = gen_example1(300, 5, 0, 0, 1)
    t = NoncoverageTargets(0.05, 0.1)
    s = fit(train).decision_function(tune.features)
    rep = evaluate_scores(s, tune.labels, robust_thresholds(s, tune.labels, t), t)
    assert rep.noncoverage_neg <= 0.05 and rep.noncoverage_pos <= 0.1
