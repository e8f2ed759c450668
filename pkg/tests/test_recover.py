import numpy as np
import pytest

from csvm.core import NoncoverageTargets
from csvm.errors import InfeasibleError, InvalidArgumentError
from csvm.kernel import KernelSpec, gram_matrix
from csvm.qp import QpSolution, QpStatus, assemble_dual, solve_qp
from csvm.recover import hinge_sum_root, recover_coefficients, solve_intercept_margin

from oracles import lp_intercept_margin


def fake_solution(z, status=QpStatus.OPTIMAL):
    z = np.asarray(z, dtype=float)
    return QpSolution(z, 0.0, {}, 0, status, np.zeros(1), np.zeros(1), np.zeros(z.size), np.zeros(z.size))


def test_recover_coefficients_examples():
    np.testing.assert_array_equal(recover_coefficients(fake_solution(np.zeros(6)), [1, -1]), [0.0, 0.0])
    c = recover_coefficients(fake_solution([0.5, 0.0, 0.25, 0.0, 0.0, 0.0]), [-1, 1])
    assert c[0] == -0.75


def test_recover_coefficients_rejects_non_optimal():
    with pytest.raises(InvalidArgumentError):
        recover_coefficients(fake_solution(np.zeros(4), QpStatus.MAX_ITER), [1])


def test_linear_beta_identity():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(25, 4))
    y = np.where(X[:, 0] > 0, 1, -1)
    K = gram_matrix(KernelSpec.linear(), X)
    s = solve_qp(assemble_dual(K, y, np.ones(25), 1.0, NoncoverageTargets(0.2, 0.2),
                               int(np.sum(y < 0)), int(np.sum(y > 0))))
    c = recover_coefficients(s, y)
    z = s.z
    beta = ((z[:25] + z[25:50]) * y) @ X
    probes = rng.normal(size=(10, 4))
    np.testing.assert_allclose(probes @ beta, (probes @ X.T) @ c, atol=1e-9)


def test_separated_data_zero_loss():
    y = np.array([1, 1, -1, -1])
    h = np.array([3.0, 4.0, -3.0, -5.0])
    t = NoncoverageTargets(0.05, 0.05)
    m = solve_intercept_margin(h, y, np.ones(4), 1.0, t, 2, 2)
    assert m.objective == 0.0
    # flat optimum on eps = 0: the tie rule picks the smallest |b|
    assert (m.epsilon, m.intercept) == (0.0, 0.0)
    margin = y * (h + m.intercept)
    assert np.all(np.maximum(1 + m.epsilon - margin, 0) == 0)
    assert np.sum(m.eta[y == 1]) < 2 * 0.05 and np.sum(m.eta[y == -1]) < 2 * 0.05


@pytest.mark.parametrize("n_pos,n_neg", [(3, 1), (1, 3), (2, 2)])
def test_zero_kernel_part_with_unit_rates(n_pos, n_neg):
    # eta_i = (1 - eps - y_i b)_+ can exceed one, so alpha = 1 still forces eps >= |b|;
    # sum(xi) = n_pos (1 + eps - b) + n_neg (1 + eps + b) is then minimized at b = eps = 0
    y = np.array([1] * n_pos + [-1] * n_neg)
    t = NoncoverageTargets(1.0, 1.0)
    m = solve_intercept_margin(np.zeros(y.size), y, np.ones(y.size), 1.0, t, n_neg, n_pos)
    assert (m.intercept, m.epsilon) == (0.0, 0.0)
    assert m.objective == pytest.approx(y.size)
    assert lp_intercept_margin(np.zeros(y.size), y, np.ones(y.size), t) == pytest.approx(y.size)


def objective_at(h, y, b, eps):
    return np.maximum(1 + eps - y * (h + b), 0).sum()


def feasible(h, y, w, t, b, eps):
    eta = np.maximum(1 - eps - y * (h + b), 0) * w
    return (eps >= 0 and eta[y == -1].sum() <= np.sum(y == -1) * t.alpha_neg + 1e-12
            and eta[y == 1].sum() <= np.sum(y == 1) * t.alpha_pos + 1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_optimal_against_probes_and_lp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 40))
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[:2] = (1, -1)
    h = rng.normal(size=n) + 0.8 * y * (seed % 2)
    w = rng.uniform(0.1, 1.0, n)
    t = NoncoverageTargets(*rng.choice([0.05, 0.2, 0.5, 1.0], 2))
    nn, npos = int(np.sum(y < 0)), int(np.sum(y > 0))
    m = solve_intercept_margin(h, y, w, 1.0, t, nn, npos)
    assert m.epsilon >= 0
    assert feasible(h, y, w, t, m.intercept, m.epsilon)
    ref = lp_intercept_margin(h, y, w, t)
    assert m.objective == pytest.approx(ref, rel=1e-9, abs=1e-9)
    hits = 0
    while hits < 100:
        b, eps = rng.normal(scale=3), abs(rng.normal(scale=3))
        if feasible(h, y, w, t, b, eps):
            hits += 1
            assert m.objective <= objective_at(h, y, b, eps) + 1e-9


def test_weighted_constraints_hold():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = 30
        y = np.where(rng.random(n) < 0.5, 1, -1)
        y[:2] = (1, -1)
        h = rng.normal(size=n)
        w = rng.uniform(0.1, 1.0, n)
        t = NoncoverageTargets(0.05, 0.1)
        nn, npos = int(np.sum(y < 0)), int(np.sum(y > 0))
        m = solve_intercept_margin(h, y, w, 1.0, t, nn, npos)
        assert np.sum(w[y == -1] * m.eta[y == -1]) <= nn * 0.05 + 1e-8
        assert np.sum(w[y == 1] * m.eta[y == 1]) <= npos * 0.1 + 1e-8


def test_hinge_sum_root():
    u = hinge_sum_root([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], 1.0)
    # (3 - u) + (2 - u)_+ + (1 - u)_+ = 1 at u = 2
    assert u == pytest.approx(2.0)
    assert hinge_sum_root([], [], 1.0) == -np.inf
    with pytest.raises(InfeasibleError):
        hinge_sum_root([1.0], [1.0], 0.0)


def test_intercept_margin_input_checks():
    t = NoncoverageTargets(0.1, 0.1)
    with pytest.raises(InvalidArgumentError):
        solve_intercept_margin([np.nan, 0.0], [1, -1], [1, 1], 1.0, t, 1, 1)
    with pytest.raises(InvalidArgumentError):
        solve_intercept_margin([0.0, 0.0], [1, 1], [1, 1], 1.0, t, 0, 2)
