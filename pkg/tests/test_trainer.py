import numpy as np
import pytest

import csvm.trainer as trainer
from csvm.core import CsvmModel, Dataset, NoncoverageTargets
from csvm.datagen import gen_example1
from csvm.errors import InfeasibleError, InvalidArgumentError, TrainingError
from csvm.kernel import KernelSpec, gram_matrix
from csvm.qp import QpStatus, assemble_dual, solve_qp
from csvm.recover import recover_coefficients, solve_intercept_margin
from csvm.trainer import TrainConfig, compute_weights, fit_csvm, lam_prime_from_lambda, weighted_constraints

T05 = NoncoverageTargets(0.05, 0.05)


def constant_model(b, eps, y=1):
    return CsvmModel([0.0], b, eps, KernelSpec.linear(), [[0.0]], [y], [1.0])


@pytest.mark.parametrize("yf,eps,expected", [(1.0, 0.0, 1.0), (-2.0, 0.0, 1 / 3), (-0.5, 0.5, 1.0)])
def test_compute_weights_examples(yf, eps, expected):
    data = Dataset([[0.0]], [1])
    assert compute_weights(constant_model(yf, eps), data)[0] == pytest.approx(expected)


def test_lambda_mapping():
    assert lam_prime_from_lambda(0.01, 50) == pytest.approx(1.0)


def test_config_roundtrip_and_validation():
    cfg = TrainConfig(2.0, T05, KernelSpec.gaussian(0.5), adaptive=False, seed=9)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(InvalidArgumentError):
        TrainConfig(0.0, T05)
    with pytest.raises(InvalidArgumentError):
        TrainConfig(1.0, T05, max_outer_iters=0)
    with pytest.raises(InvalidArgumentError):
        TrainConfig(1.0, T05, weight_tol=0.0)


def test_non_adaptive_equals_manual_pipeline():
    data = gen_example1(80, 4, seed=2)
    cfg = TrainConfig(0.7, T05, adaptive=False)
    model, trace = fit_csvm(data, cfg)
    assert len(trace.records) == 1 and trace.converged
    K = gram_matrix(KernelSpec.linear(), data.features)
    y = data.labels
    s = solve_qp(assemble_dual(K, y, np.ones(data.n), 0.7, T05, data.n_neg, data.n_pos))
    c = recover_coefficients(s, y)
    m = solve_intercept_margin(K @ c, y, np.ones(data.n), 0.7, T05, data.n_neg, data.n_pos)
    np.testing.assert_allclose(model.coefficients, c, atol=1e-7)
    assert model.intercept == pytest.approx(m.intercept, abs=1e-6)
    assert model.epsilon == pytest.approx(m.epsilon, abs=1e-6)


def test_example1_constraints_hold():
    data = gen_example1(200, 10, seed=5)
    model, trace = fit_csvm(data, TrainConfig(lam_prime_from_lambda(0.01, 200), T05))
    # recomputed from the model, not from the trace
    y = data.labels
    f = model.decision_function(data.features)
    loss = model.weights_final * np.maximum(1 - model.epsilon - y * f, 0)
    assert loss[y == -1].sum() / data.n_neg <= 0.05 + 1e-6
    assert loss[y == 1].sum() / data.n_pos <= 0.05 + 1e-6
    neg, pos = weighted_constraints(model, data)
    assert neg == pytest.approx(loss[y == -1].sum() / data.n_neg)
    assert pos == pytest.approx(loss[y == 1].sum() / data.n_pos)
    assert 1 <= len(trace.records) <= 5
    assert all(0 < w <= 1 for w in model.weights_final)


def test_duplicated_data_with_half_penalty():
    data = gen_example1(60, 3, seed=8)
    twice = Dataset(np.vstack([data.features, data.features]), np.concatenate([data.labels, data.labels]))
    a, _ = fit_csvm(data, TrainConfig(1.0, T05, adaptive=False))
    b, _ = fit_csvm(twice, TrainConfig(0.5, T05, adaptive=False))
    assert b.intercept == pytest.approx(a.intercept, abs=1e-6)
    assert b.epsilon == pytest.approx(a.epsilon, abs=1e-6)


@pytest.mark.parametrize("spec", [KernelSpec.linear(), KernelSpec.gaussian(1.0), KernelSpec.polynomial(2)], ids=str)
def test_permutation_invariance(spec):
    data = gen_example1(70, 4, seed=3)
    perm = np.random.default_rng(0).permutation(data.n)
    cfg = TrainConfig(0.5, T05, spec)
    a, _ = fit_csvm(data, cfg)
    b, _ = fit_csvm(data.subset(perm), cfg)
    probes = np.random.default_rng(1).normal(size=(10, 4))
    np.testing.assert_allclose(a.decision_function(probes), b.decision_function(probes), atol=1e-6)


def test_requires_both_classes():
    with pytest.raises(InvalidArgumentError):
        fit_csvm(Dataset([[0.0], [1.0]], [1, 1]), TrainConfig(1.0, T05))


def _fail_after(monkeypatch, good_calls, status):
    real = trainer.solve_qp
    calls = {"n": 0}

    def fake(problem, tol):
        calls["n"] += 1
        sol = real(problem, tol=tol)
        if calls["n"] > good_calls:
            return type(sol)(**{**sol.__dict__, "status": status})
        return sol

    monkeypatch.setattr(trainer, "solve_qp", fake)


def test_infeasible_first_iteration(monkeypatch):
    _fail_after(monkeypatch, 0, QpStatus.INFEASIBLE)
    with pytest.raises(InfeasibleError):
        fit_csvm(gen_example1(40, 3, seed=1), TrainConfig(1.0, T05))


def test_max_iter_first_iteration(monkeypatch):
    _fail_after(monkeypatch, 0, QpStatus.MAX_ITER)
    with pytest.raises(TrainingError):
        fit_csvm(gen_example1(40, 3, seed=1), TrainConfig(1.0, T05))


def test_later_failure_returns_previous_model(monkeypatch):
    # loose targets leave misclassified points, so the weights move after one pass
    data = gen_example1(60, 3, seed=1)
    loose = NoncoverageTargets(0.4, 0.4)
    first, _ = fit_csvm(data, TrainConfig(1.0, loose, adaptive=False))
    assert np.any(compute_weights(first, data) < 1)
    _fail_after(monkeypatch, 1, QpStatus.INFEASIBLE)
    model, trace = fit_csvm(data, TrainConfig(1.0, loose, weight_tol=1e-12))
    assert trace.warning and "previous iterate" in trace.warning
    assert len(trace.records) == 1
    np.testing.assert_array_equal(model.coefficients, first.coefficients)
