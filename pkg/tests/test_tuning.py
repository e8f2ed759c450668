import math

import numpy as np
import pytest

import csvm.tuning as tuning
from csvm.core import NoncoverageTargets
from csvm.datagen import gen_example1
from csvm.errors import CsvmError, InfeasibleError, TrainingError
from csvm.inference import evaluate_scores, robust_thresholds
from csvm.kernel import KernelSpec
from csvm.trainer import fit_csvm
from csvm.tuning import (
    KNN_GRID, TraceEntry, coarse_grid, default_kernel_grid, fine_grid, grid_search, search_cost, selection_key,
    tune_knn,
)

T = NoncoverageTargets(0.1, 0.1)


@pytest.fixture(scope="module")
def splits():
    return gen_example1(60, 4, 0, 0, 0), gen_example1(80, 4, 0, 0, 1)


def test_grids():
    g = coarse_grid()
    assert len(g) == 25
    assert g[0] == pytest.approx(1e-8) and g[-1] == pytest.approx(1e4)
    np.testing.assert_allclose(np.diff(np.log10(g)), 0.5)
    f = fine_grid(2.0)
    assert len(f) == 11
    np.testing.assert_allclose(np.log10(np.array(f) / 2.0), np.linspace(-0.5, 0.5, 11), atol=1e-12)
    assert search_cost(3) == 108


def test_default_kernel_grids():
    assert default_kernel_grid("linear") == [KernelSpec.linear()]
    rho = [k.param for k in default_kernel_grid("gaussian")]
    np.testing.assert_allclose(np.log10(rho), [-0.5, -0.25, 0, 0.25, 0.5, 0.75, 1.0])
    assert [k.param for k in default_kernel_grid("polynomial")] == [2, 3, 4]
    with pytest.raises(CsvmError):
        default_kernel_grid("sigmoid")


def entry(amb, lam, ok=True):
    return TraceEntry("csvm", "linear", "coarse", lam, lam, amb, 0.0, 0.0, 0.0, 0.0, ok)


def test_ties_go_to_larger_penalty():
    best = tuning._best([entry(0.2, 0.1), entry(0.1, 1.0), entry(0.1, 10.0), entry(0.05, 100.0, ok=False)])
    assert best.param == 10.0
    assert selection_key(entry(0.1, 10.0)) < selection_key(entry(0.1, 1.0))


def test_single_candidate_wins(splits):
    train, tune = splits
    res = grid_search(train, tune, T, coarse=[0.01], fine=False)
    assert len(res.trace) == 1 and res.entry.param == 0.01


def test_logistic_trace_length_and_order(splits):
    train, tune = splits
    res = grid_search(train, tune, T, method="logistic")
    assert len(res.trace) == search_cost(1)
    assert [e.stage for e in res.trace] == ["coarse"] * 25 + ["fine"] * 11
    lam1 = min((e for e in res.trace[:25] if e.ok), key=lambda e: (e.ambiguity, -e.param)).param
    np.testing.assert_allclose([e.param for e in res.trace[25:]], fine_grid(lam1))
    assert res.entry in res.trace
    ok = [e for e in res.trace if e.ok]
    assert res.entry.ambiguity == min(e.ambiguity for e in ok)


def test_csvm_search_reproducible_from_trace(splits):
    train, tune = splits
    kernels = [KernelSpec.gaussian(1.0), KernelSpec.gaussian(3.0)]
    res = grid_search(train, tune, T, kernel_grid=kernels, coarse=coarse_grid()[8:20])
    assert len(res.trace) == 2 * (12 + 11)
    assert {e.kernel for e in res.trace} == {str(k) for k in kernels}
    model, _ = fit_csvm(train, res.config)
    s = model.decision_function(tune.features)
    th = robust_thresholds(s, tune.labels, T)
    rep = evaluate_scores(s, tune.labels, th, T)
    assert (th.t_neg, th.t_pos) == (res.entry.t_neg, res.entry.t_pos)
    assert (rep.ambiguity, rep.noncoverage_neg, rep.noncoverage_pos) == (
        res.entry.ambiguity, res.entry.noncoverage_neg, res.entry.noncoverage_pos)
    assert res.entry.noncoverage_neg <= T.alpha_neg and res.entry.noncoverage_pos <= T.alpha_pos


def test_all_candidates_fail(splits, monkeypatch):
    train, tune = splits

    def boom(*args, **kwargs):
        raise InfeasibleError("targets infeasible: test")

    monkeypatch.setattr(tuning, "fit_csvm", boom)
    with pytest.raises(TrainingError, match="all 3 csvm candidates failed.*targets infeasible"):
        grid_search(train, tune, T, coarse=[0.1, 1.0, 10.0], fine=False)


def test_failed_candidates_are_recorded(splits, monkeypatch):
    train, tune = splits
    real = tuning.fit_csvm

    def flaky(data, cfg, gram=None):
        if cfg.lam_prime > 10:
            raise InfeasibleError("boom")
        return real(data, cfg, gram=gram)

    monkeypatch.setattr(tuning, "fit_csvm", flaky)
    res = grid_search(train, tune, T, coarse=[1e-4, 0.1], fine=False)
    bad = [e for e in res.trace if not e.ok]
    assert len(bad) == 1 and "InfeasibleError" in bad[0].error and math.isnan(bad[0].ambiguity)
    assert res.entry.param == 0.1


def test_invalid_inputs(splits):
    train, tune = splits
    with pytest.raises(CsvmError):
        grid_search(train, tune, T, method="forest")
    with pytest.raises(CsvmError):
        grid_search(train, tune, T, coarse=[])
    with pytest.raises(CsvmError):
        grid_search(train, tune, T, kernel_grid=[])


def test_tune_knn(splits):
    train, tune = splits
    res = tune_knn(train, tune, T)
    assert len(res.trace) == len([k for k in KNN_GRID if k <= train.n])
    best = min((e for e in res.trace if e.ok), key=lambda e: (e.ambiguity, -e.param))
    assert res.config.k == int(best.param)
    assert res.model.k == res.config.k
