"""Two-step penalty search with selection by tuning-set ambiguity.

For every kernel setting a coarse sweep over ``lam in {1e-8, 10^-7.5, ..., 1e4}``
picks ``lam_1``; a fine sweep over ``lam_1 * 10^{-0.5, -0.4, ..., 0.5}``
follows. Every candidate is trained on the training split, calibrated with
robust thresholds on the tuning split and scored by its tuning ambiguity.
The winner has the smallest ambiguity among candidates whose tuning
non-coverage is within the targets; ties go to the larger ``lam``.

``lam`` is the penalty of the averaged-loss form
``mean(xi) + lam ||beta||^2``; CSVM is fitted with ``lam' = 1 / (2 n lam)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .baselines import fit_knn, fit_ridge_logistic
from .errors import CsvmError, TrainingError
from .inference import evaluate_scores, robust_thresholds
from .kernel import KernelSpec, gram_matrix
from .trainer import TrainConfig, fit_csvm, lam_prime_from_lambda

log = logging.getLogger(__name__)

COARSE_EXPONENTS = tuple(-8.0 + 0.5 * i for i in range(25))
FINE_OFFSETS = tuple(round(-0.5 + 0.1 * j, 1) for j in range(11))
GAUSSIAN_RHO_EXPONENTS = (-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0)
POLY_DEGREES = (2, 3, 4)
KNN_GRID = (1, 3, 5, 7, 9, 11, 15, 21, 31, 41, 51, 75, 101)

METHODS = ("csvm", "logistic", "knn")


def coarse_grid():
    return [10.0 ** e for e in COARSE_EXPONENTS]


def fine_grid(lam_1):
    return [lam_1 * 10.0 ** o for o in FINE_OFFSETS]


def default_kernel_grid(kind):
    """Kernel settings searched for a family: ``linear``, ``gaussian`` or ``polynomial``."""
    if kind == "linear":
        return [KernelSpec.linear()]
    if kind == "gaussian":
        return [KernelSpec.gaussian(10.0 ** e) for e in GAUSSIAN_RHO_EXPONENTS]
    if kind in ("polynomial", "poly"):
        return [KernelSpec.polynomial(d) for d in POLY_DEGREES]
    raise CsvmError(f"unknown kernel family {kind!r}")


@dataclass(frozen=True)
class LogisticConfig:
    lam: float
    max_iters: int = 100
    tol: float = 1e-8

    def to_dict(self):
        return {"method": "logistic", "lam": self.lam, "max_iters": self.max_iters, "tol": self.tol}


@dataclass(frozen=True)
class KnnConfig:
    k: int

    def to_dict(self):
        return {"method": "knn", "k": self.k}


@dataclass(frozen=True)
class TraceEntry:
    method: str
    kernel: str
    stage: str
    lam: float | None
    param: float
    ambiguity: float
    noncoverage_neg: float
    noncoverage_pos: float
    t_neg: float
    t_pos: float
    ok: bool
    error: str | None = None

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class SearchResult:
    method: str
    config: object
    model: object
    thresholds: object
    entry: TraceEntry
    trace: list = field(default_factory=list)


def _score_candidate(fit, tune, targets):
    model = fit()
    scores = model.decision_function(tune.features)
    th = robust_thresholds(scores, tune.labels, targets)
    return model, th, evaluate_scores(scores, tune.labels, th, targets)


def _entry(method, kernel, stage, lam, param, th, rep, targets):
    controlled = rep.noncoverage_neg <= targets.alpha_neg and rep.noncoverage_pos <= targets.alpha_pos
    return TraceEntry(method, kernel, stage, lam, param, rep.ambiguity, rep.noncoverage_neg,
                      rep.noncoverage_pos, th.t_neg, th.t_pos, bool(controlled),
                      None if controlled else "tuning non-coverage above target")


def _failed(method, kernel, stage, lam, param, exc):
    nan = float("nan")
    return TraceEntry(method, kernel, stage, lam, param, nan, nan, nan, nan, nan, False, f"{type(exc).__name__}: {exc}")


def _best(entries):
    ok = [e for e in entries if e.ok]
    if not ok:
        return None
    # smallest ambiguity, then the larger penalty
    return min(ok, key=lambda e: (e.ambiguity, -e.param))


class _Search:
    def __init__(self, method, tune, targets):
        self.method = method
        self.tune = tune
        self.targets = targets
        self.trace = []
        self.results = {}

    def run(self, kernel_name, stage, key, param, lam, fit):
        if key in self.results:
            entry, model, th = self.results[key]
            entry = TraceEntry(**{**entry.to_dict(), "stage": stage})
            self.trace.append(entry)
            return entry
        try:
            model, th, rep = _score_candidate(fit, self.tune, self.targets)
            entry = _entry(self.method, kernel_name, stage, lam, param, th, rep, self.targets)
        except CsvmError as exc:
            model, th = None, None
            entry = _failed(self.method, kernel_name, stage, lam, param, exc)
            log.info("candidate %s %s lam=%s failed: %s", self.method, kernel_name, lam, exc)
        self.results[key] = (entry, model, th)
        self.trace.append(entry)
        return entry

    def finish(self, make_config):
        best = _best(self.trace)
        if best is None:
            errors = sorted({e.error for e in self.trace if e.error})
            raise TrainingError(f"all {len(self.trace)} {self.method} candidates failed: " + "; ".join(errors))
        key = next(k for k, v in self.results.items() if v[0].kernel == best.kernel and v[0].param == best.param)
        _, model, th = self.results[key]
        return SearchResult(self.method, make_config(best), model, th, best, self.trace)


def grid_search(train, tune, targets, kernel_grid=None, method="csvm", adaptive=True,
                max_outer_iters=5, weight_tol=1e-3, coarse=None, fine=True):
    """Two-step search for ``method`` in ``{"csvm", "logistic"}``.

    Parameters
    ----------
    train, tune : Dataset
    targets : NoncoverageTargets
    kernel_grid : list of KernelSpec, optional
        Only used by CSVM; defaults to the linear kernel.
    coarse : list of float, optional
        Overrides the 25-point coarse penalty grid.
    fine : bool
        Run the fine sweep around the coarse winner.

    Returns
    -------
    SearchResult
        ``config`` is a :class:`~csvm.trainer.TrainConfig` for CSVM and a
        :class:`LogisticConfig` otherwise; ``trace`` lists every candidate in
        grid order.
    """
    if method not in ("csvm", "logistic"):
        raise CsvmError(f"grid_search supports csvm and logistic, got {method!r}")
    train.require_both_classes()
    tune.require_both_classes()
    lambdas = coarse_grid() if coarse is None else [float(v) for v in coarse]
    if not lambdas:
        raise CsvmError("empty penalty grid")
    if method == "logistic":
        kernels = [None]
    else:
        kernels = list(kernel_grid) if kernel_grid is not None else [KernelSpec.linear()]
        if not kernels:
            raise CsvmError("empty kernel grid")
    search = _Search(method, tune, targets)
    configs = {}

    for kernel in kernels:
        kname = "linear" if kernel is None else str(kernel)
        gram = gram_matrix(kernel, train.features) if kernel is not None else None

        def make_fit(lam):
            if method == "logistic":
                cfg = LogisticConfig(lam)
                configs[(kname, lam)] = cfg
                return lambda: fit_ridge_logistic(train, lam, cfg.max_iters, cfg.tol)
            cfg = TrainConfig(lam_prime=lam_prime_from_lambda(lam, train.n), targets=targets, kernel=kernel,
                              adaptive=adaptive, max_outer_iters=max_outer_iters, weight_tol=weight_tol)
            configs[(kname, lam)] = cfg
            return lambda: fit_csvm(train, cfg, gram=gram)[0]

        stage_entries = [search.run(kname, "coarse", (kname, lam), lam, lam, make_fit(lam)) for lam in lambdas]
        lam_1 = _best(stage_entries)
        if fine and lam_1 is not None:
            for lam in fine_grid(lam_1.param):
                search.run(kname, "fine", (kname, lam), lam, lam, make_fit(lam))

    return search.finish(lambda e: configs[(e.kernel, e.param)])


def tune_knn(train, tune, targets, k_grid=KNN_GRID):
    """Pick ``k`` by smallest tuning ambiguity (ties to the larger ``k``)."""
    train.require_both_classes()
    tune.require_both_classes()
    ks = [int(k) for k in k_grid if int(k) <= train.n]
    if not ks:
        raise CsvmError("no admissible k in the grid")
    search = _Search("knn", tune, targets)
    for k in ks:
        search.run("euclidean", "grid", k, float(k), None, lambda k=k: fit_knn(train, k))
    return search.finish(lambda e: KnnConfig(int(e.param)))


def selection_key(entry):
    """Sort key used for selection; exposed for tests."""
    return (entry.ambiguity, -entry.param)


def search_cost(n_kernels):
    """Upper bound on the number of fits for a CSVM or logistic search."""
    return n_kernels * (len(COARSE_EXPONENTS) + len(FINE_OFFSETS))

