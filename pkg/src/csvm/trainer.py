"""CSVM training: dual QP, primal recovery and the adaptive-weight outer loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .core import CsvmModel, NoncoverageTargets, shifted_hinge_array
from .errors import InfeasibleError, InvalidArgumentError, TrainingError
from .kernel import KernelSpec, gram_matrix
from .qp import DEFAULT_TOL, QpStatus, assemble_dual, check_psd, solve_qp
from .recover import recover_coefficients, solve_intercept_margin

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lam_prime: float
    targets: NoncoverageTargets
    kernel: KernelSpec = field(default_factory=KernelSpec.linear)
    adaptive: bool = True
    max_outer_iters: int = 5
    weight_tol: float = 1e-3
    qp_tol: float = DEFAULT_TOL
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.lam_prime) and self.lam_prime > 0):
            raise InvalidArgumentError(f"lam' must be > 0, got {self.lam_prime}")
        if self.max_outer_iters < 1:
            raise InvalidArgumentError("max_outer_iters must be >= 1")
        if not self.weight_tol > 0:
            raise InvalidArgumentError("weight_tol must be > 0")

    def to_dict(self):
        return {
            "lam_prime": self.lam_prime,
            "alpha_neg": self.targets.alpha_neg,
            "alpha_pos": self.targets.alpha_pos,
            "kernel": self.kernel.to_dict(),
            "adaptive": self.adaptive,
            "max_outer_iters": self.max_outer_iters,
            "weight_tol": self.weight_tol,
            "qp_tol": self.qp_tol,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            lam_prime=float(d["lam_prime"]),
            targets=NoncoverageTargets(d["alpha_neg"], d["alpha_pos"]),
            kernel=KernelSpec.from_dict(d["kernel"]),
            adaptive=bool(d["adaptive"]),
            max_outer_iters=int(d["max_outer_iters"]),
            weight_tol=float(d["weight_tol"]),
            qp_tol=float(d["qp_tol"]),
            seed=int(d["seed"]),
        )


def lam_prime_from_lambda(lam, n):
    """Map the averaged-loss penalty ``lam`` to the scaled form: ``lam' = 1 / (2 n lam)``."""
    return 1.0 / (2.0 * n * lam)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    dual_objective: float
    epsilon: float
    constraint_neg: float
    constraint_pos: float
    weight_change: float
    qp_iterations: int


@dataclass
class TrainingTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    warning: str | None = None


def weighted_constraints(model, data, weights=None):
    """``sum_{y_i=j} w_i H_{-eps}(y_i f(x_i)) / n_j`` for ``j = -1, +1``."""
    w = model.weights_final if weights is None else np.asarray(weights, dtype=float)
    margin = data.labels * model.decision_function(data.features)
    loss = w * shifted_hinge_array(-model.epsilon, margin)
    neg = data.labels == -1
    return float(loss[neg].sum() / neg.sum()), float(loss[~neg].sum() / (~neg).sum())


def compute_weights(model, data):
    """``w_i = 1 / max(1, H_{-eps}(y_i f(x_i)))``."""
    margin = data.labels * model.decision_function(data.features)
    return 1.0 / np.maximum(1.0, shifted_hinge_array(-model.epsilon, margin))


def _weights_from_margin(margin, eps):
    return 1.0 / np.maximum(1.0, shifted_hinge_array(-eps, margin))


def fit_csvm(data, config, gram=None):
    """Train a CSVM; returns ``(model, trace)``.

    ``gram`` may be supplied to reuse a precomputed Gram matrix of
    ``data.features`` under ``config.kernel``.
    """
    data.require_both_classes()
    X, y = data.features, data.labels
    n_neg, n_pos = data.n_neg, data.n_pos
    K = gram_matrix(config.kernel, X) if gram is None else np.asarray(gram, dtype=float)
    check_psd(K)
    yf = y.astype(float)
    # low-rank Newton solves pay off when the linear kernel has few features
    factor = X if config.kernel.kind == "linear" and 4 * data.p <= data.n else None

    w = np.ones(data.n)
    trace = TrainingTrace()
    model = None
    n_outer = config.max_outer_iters if config.adaptive else 1
    for t in range(1, n_outer + 1):
        problem = assemble_dual(K, y, w, config.lam_prime, config.targets, n_neg, n_pos, check=False,
                               gram_factor=factor)
        sol = solve_qp(problem, tol=config.qp_tol)
        if sol.status is not QpStatus.OPTIMAL:
            msg = f"dual QP ended with status {sol.status.value} at outer iteration {t}"
            if model is None:
                if sol.status is QpStatus.INFEASIBLE:
                    raise InfeasibleError("targets infeasible: " + msg)
                raise TrainingError(msg)
            trace.warning = msg + "; returning the previous iterate"
            log.warning(trace.warning)
            break
        c = recover_coefficients(sol, y)
        h = K @ c
        lp = solve_intercept_margin(h, y, w, config.lam_prime, config.targets, n_neg, n_pos)
        model = CsvmModel(c, lp.intercept, lp.epsilon, config.kernel, X, y, w,
                          meta={"config": config.to_dict(), "outer_iterations": t})
        wl = w * lp.eta
        primal = 0.5 * float(c @ h) + config.lam_prime * lp.objective
        margin = yf * (h + lp.intercept)
        w_new = _weights_from_margin(margin, lp.epsilon)
        change = float(np.max(np.abs(w_new - w)))
        trace.records.append(IterationRecord(
            iteration=t,
            objective=primal,
            dual_objective=sol.objective,
            epsilon=lp.epsilon,
            constraint_neg=float(wl[y == -1].sum() / n_neg),
            constraint_pos=float(wl[y == 1].sum() / n_pos),
            weight_change=change,
            qp_iterations=sol.iterations,
        ))
        if not config.adaptive:
            trace.converged = True
            break
        if change < config.weight_tol:
            trace.converged = True
            break
        w = w_new
    model = replace(model, meta={**model.meta, "converged": trace.converged, "warning": trace.warning})
    return model, trace
