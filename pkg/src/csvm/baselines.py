"""Plug-in baselines: ridge-penalized logistic regression and k-nearest neighbours.

Both produce a real-valued score that is monotone in an estimate of
``P(Y = 1 | x)`` and is calibrated with the same robust thresholds as CSVM.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .errors import DimensionError, InvalidArgumentError

log = logging.getLogger(__name__)

KNN_CHUNK = 512


@dataclass(frozen=True, eq=False)
class LogisticModel:
    coef: np.ndarray
    intercept: float
    lam: float
    iterations: int
    grad_norm: float
    converged: bool

    @property
    def p(self):
        return self.coef.size

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise DimensionError(f"model expects {self.p} features, got {X.shape[1]}")
        return X @ self.coef + self.intercept


def _logistic_objective(X, y, lam, w):
    f = X @ w[:-1] + w[-1]
    return -np.mean(log_expit(y * f)) + lam * w[:-1] @ w[:-1]


def _logistic_gradient(X, y, lam, w):
    f = X @ w[:-1] + w[-1]
    r = -y * expit(-y * f) / y.size
    g = np.empty_like(w)
    g[:-1] = X.T @ r + 2.0 * lam * w[:-1]
    g[-1] = r.sum()
    return g


def fit_ridge_logistic(data, lam, max_iters=100, tol=1e-8):
    """Minimize ``mean(log(1 + exp(-y f))) + lam ||beta||^2`` by damped Newton.

    The intercept is not penalized. The returned model has
    ``converged=False`` (and a warning is logged) when the gradient is still
    above ``tol`` in the infinity norm after ``max_iters`` steps.
    """
    if not lam > 0:
        raise InvalidArgumentError(f"lam must be > 0, got {lam}")
    data.require_both_classes()
    X = data.features
    y = data.labels.astype(float)
    n, p = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    w = np.zeros(p + 1)
    reg = np.full(p + 1, 2.0 * lam)
    reg[-1] = 0.0
    obj = _logistic_objective(X, y, lam, w)
    g = _logistic_gradient(X, y, lam, w)
    steps = 0
    while steps < max_iters and np.max(np.abs(g)) > tol:
        s = expit(Xa @ w)
        H = (Xa.T * (s * (1.0 - s) / n)) @ Xa
        H[np.diag_indices(p + 1)] += reg
        # tiny ridge keeps the intercept direction solvable on degenerate data
        H[np.diag_indices(p + 1)] += 1e-12 * max(1.0, float(np.trace(H)))
        step = np.linalg.solve(H, -g)
        slope = float(g @ step)
        t = 1.0
        while True:
            w_new = w + t * step
            obj_new = _logistic_objective(X, y, lam, w_new)
            if obj_new <= obj + 1e-4 * t * slope or t < 1e-10:
                break
            t *= 0.5
        w, obj = w_new, obj_new
        g = _logistic_gradient(X, y, lam, w)
        steps += 1
    gnorm = float(np.max(np.abs(g)))
    converged = gnorm <= tol
    if not converged:
        log.warning("ridge logistic did not converge: |grad| = %.3g after %d iterations", gnorm, steps)
    return LogisticModel(w[:-1].copy(), float(w[-1]), float(lam), steps, gnorm, converged)


@dataclass(frozen=True, eq=False)
class KnnModel:
    """Stores the training sample; the score is the fraction of +1 labels among the k nearest."""

    features: np.ndarray
    labels: np.ndarray
    k: int

    @property
    def p(self):
        return self.features.shape[1]

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise DimensionError(f"model expects {self.p} features, got {X.shape[1]}")
        pos = (self.labels == 1).astype(float)
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], KNN_CHUNK):
            q = X[start:start + KNN_CHUNK]
            # exact differences keep distance ties exact; the stable sort breaks them by index
            d = np.sum((q[:, None, :] - self.features[None, :, :]) ** 2, axis=2)
            idx = np.argsort(d, axis=1, kind="stable")[:, :self.k]
            out[start:start + KNN_CHUNK] = pos[idx].sum(axis=1) / self.k
        return out


def fit_knn(data, k):
    k = int(k)
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    if k > data.n:
        raise InvalidArgumentError(f"k = {k} exceeds the training size {data.n}")
    return KnnModel(data.features, data.labels, k)
