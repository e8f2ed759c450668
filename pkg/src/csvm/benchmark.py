"""Repeated tune-then-test benchmark on the synthetic scenarios.

Each repeat ``r`` draws train, tune and test sets from the streams
``(r, 0)``, ``(r, 1)`` and ``(r, 2)`` of the master seed. Every method is
tuned on train/tune, calibrated with robust thresholds on the tuning set and
evaluated on the test set. The Bayes rule is evaluated on the same test set
and, once, on a large Monte-Carlo sample.

Repeats may run in worker processes; results are always ordered by
``(n, repeat, method)`` so the reports do not depend on the job count.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import datagen, oracle
from .core import NoncoverageTargets
from .errors import CsvmError, InvalidArgumentError
from .inference import evaluate, evaluate_scores
from .tuning import default_kernel_grid, grid_search, tune_knn

log = logging.getLogger(__name__)

JOBS_ENV = "CSVM_JOBS"
ALL_METHODS = ("csvm", "logistic", "knn")
SPLITS = {"train": 0, "tune": 1, "test": 2}
METRICS = ("noncoverage_neg", "noncoverage_pos", "ambiguity")


@dataclass(frozen=True)
class BenchmarkConfig:
    scenario: str = "example1"
    n_train: tuple = (400,)
    n_tune: int | None = None
    n_test: int = 20000
    p: int = 10
    alpha_neg: float = 0.05
    alpha_pos: float = 0.05
    repeats: int = 20
    seed: int = 0
    methods: tuple = ALL_METHODS
    kernel: str = "linear"
    adaptive: bool = True
    mc_samples: int = oracle.DEFAULT_MC_SAMPLES
    oracle: bool = True

    def __post_init__(self):
        object.__setattr__(self, "n_train", tuple(int(n) for n in np.atleast_1d(self.n_train)))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.scenario not in datagen.SCENARIOS:
            raise InvalidArgumentError(f"unknown scenario {self.scenario!r}")
        if self.repeats < 1:
            raise InvalidArgumentError("repeats must be >= 1")
        if not self.n_train or min(self.n_train) < 2:
            raise InvalidArgumentError("n_train values must be >= 2")
        if self.n_test < 1:
            raise InvalidArgumentError("n_test must be >= 1")
        bad = set(self.methods) - set(ALL_METHODS)
        if bad or not self.methods:
            raise InvalidArgumentError(f"methods must be a nonempty subset of {ALL_METHODS}")
        self.targets  # validates the rates

    @property
    def targets(self):
        return NoncoverageTargets(self.alpha_neg, self.alpha_pos)

    def tune_size(self, n):
        return n if self.n_tune is None else int(self.n_tune)

    def to_dict(self):
        d = asdict(self)
        d["n_train"] = list(self.n_train)
        d["methods"] = list(self.methods)
        return d


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    rows: list
    aggregates: list
    oracle_mc: dict | None = None
    bayes_thresholds: dict | None = None
    meta: dict = field(default_factory=dict)


def default_jobs():
    """Job count from the ``CSVM_JOBS`` environment variable (default 1)."""
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise InvalidArgumentError(f"{JOBS_ENV} must be >= 1")
    return jobs


def draw_split(config, repeat, split, size):
    return datagen.generate(config.scenario, size, config.p, config.seed, repeat, SPLITS[split])


def _tuned_summary(method, result):
    if method == "knn":
        return {"k": result.config.k}
    if method == "logistic":
        return {"lam": result.config.lam}
    return {"lam": result.entry.param, "lam_prime": result.config.lam_prime, "kernel": result.entry.kernel}


def _row(n, repeat, method, report, tuned=None, error=None):
    nan = float("nan")
    return {
        "n": n, "repeat": repeat, "method": method,
        "noncoverage_neg": report.noncoverage_neg if report else nan,
        "noncoverage_pos": report.noncoverage_pos if report else nan,
        "ambiguity": report.ambiguity if report else nan,
        "success": bool(report.success) if report else False,
        "tuned": tuned, "error": error,
    }


def run_repeat(config, n, repeat, bayes_spec=None):
    """All methods for one ``(n, repeat)`` cell; returns rows in method order."""
    targets = config.targets
    train = draw_split(config, repeat, "train", n)
    tune = draw_split(config, repeat, "tune", config.tune_size(n))
    test = draw_split(config, repeat, "test", config.n_test)
    rows = []
    for method in config.methods:
        try:
            if method == "knn":
                res = tune_knn(train, tune, targets)
            elif method == "logistic":
                res = grid_search(train, tune, targets, method="logistic")
            else:
                res = grid_search(train, tune, targets, kernel_grid=default_kernel_grid(config.kernel),
                                  adaptive=config.adaptive)
            rep = evaluate_scores(res.model.decision_function(test.features), test.labels, res.thresholds, targets)
            rows.append(_row(n, repeat, method, rep, _tuned_summary(method, res)))
        except CsvmError as exc:
            log.warning("repeat %d, n=%d, %s failed: %s", repeat, n, method, exc)
            rows.append(_row(n, repeat, method, None, error=f"{type(exc).__name__}: {exc}"))
    if bayes_spec is not None:
        pred = oracle.bayes_predict_array(bayes_spec, test.features)
        rows.append(_row(n, repeat, "bayes", evaluate(pred, test.labels, targets)))
    return rows


def _task(args):
    return run_repeat(*args)


def mean_stderr(values):
    """Mean and standard error (``std / sqrt(m)``, ``ddof=1``) over finite values."""
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    if v.size == 1:
        return float(v[0]), float("nan")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def aggregate(rows):
    """Mean and standard error per ``(n, method)``, in first-appearance order."""
    groups = {}
    for r in rows:
        groups.setdefault((r["n"], r["method"]), []).append(r)
    out = []
    for (n, method), rs in groups.items():
        rec = {"n": n, "method": method, "repeats": len(rs),
               "repeats_ok": sum(1 for r in rs if math.isfinite(r["ambiguity"]))}
        for m in METRICS:
            mean, se = mean_stderr([r[m] for r in rs])
            rec[m] = mean
            rec["stderr_" + m] = se
        out.append(rec)
    return out


def run_benchmark(config, jobs=1):
    """Run every ``(n, repeat)`` cell, with up to ``jobs`` worker processes."""
    if jobs < 1:
        raise InvalidArgumentError("jobs must be >= 1")
    targets = config.targets
    bayes_spec = oracle_mc = bayes_th = None
    if config.oracle:
        spec = oracle.BayesSpec(config.scenario, noise_dims=config.p - 2, mc_samples=config.mc_samples,
                                seed=config.seed)
        bayes_spec = oracle.bayes_thresholds(spec, targets)
        rep, counts = oracle.bayes_mc_evaluation(bayes_spec, config.mc_samples, targets)
        oracle_mc = {**rep.to_dict(), "n_neg": counts[0], "n_pos": counts[1]}
        bayes_th = {"t_neg": bayes_spec.t_neg, "t_pos": bayes_spec.t_pos}
    tasks = [(config, n, r, bayes_spec) for n in config.n_train for r in range(config.repeats)]
    if jobs == 1 or len(tasks) == 1:
        results = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_task, tasks))
    rows = [row for cell in results for row in cell]
    return BenchmarkResult(config, rows, aggregate(rows), oracle_mc, bayes_th)


def plot_rows(aggregates):
    """Aggregates reshaped to the plot CSV columns."""
    return [{
        "n": a["n"], "method": a["method"],
        "noncov_neg": a["noncoverage_neg"], "noncov_pos": a["noncoverage_pos"], "ambiguity": a["ambiguity"],
        "stderr_noncov_neg": a["stderr_noncoverage_neg"], "stderr_noncov_pos": a["stderr_noncoverage_pos"],
        "stderr_ambiguity": a["stderr_ambiguity"],
    } for a in aggregates]
