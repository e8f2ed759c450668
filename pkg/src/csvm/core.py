"""Domain types, the shifted hinge loss and set-valued prediction primitives."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .kernel import KernelSpec, cross_kernel


class SetLabel(enum.IntEnum):
    """Set-valued decision. The integer codes are used in label arrays."""

    NEG_ONLY = -1
    BOTH = 0
    POS_ONLY = 1

    @property
    def members(self):
        return {SetLabel.NEG_ONLY: (-1,), SetLabel.POS_ONLY: (1,), SetLabel.BOTH: (-1, 1)}[self]


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise InvalidArgumentError("features must be a 2-D array")
        y_raw = np.asarray(self.labels)
        if y_raw.ndim != 1 or y_raw.shape[0] != X.shape[0]:
            raise InvalidArgumentError("labels must be a vector with one entry per row")
        if not np.all(np.isin(y_raw, (-1, 1))):
            raise InvalidArgumentError("labels must take values in {-1, +1}")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("features must be finite")
        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "labels", _readonly(y_raw.astype(np.int8)))

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]

    @property
    def n_neg(self):
        return int(np.count_nonzero(self.labels == -1))

    @property
    def n_pos(self):
        return int(np.count_nonzero(self.labels == 1))

    def class_count(self, j):
        return self.n_pos if j == 1 else self.n_neg

    def require_both_classes(self):
        if self.n_neg < 1 or self.n_pos < 1:
            raise InvalidArgumentError(
                f"both classes are required (n_-1={self.n_neg}, n_+1={self.n_pos})"
            )

    def subset(self, idx):
        return Dataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class NoncoverageTargets:
    """Nominal non-coverage rates for class -1 and class +1.

    A rate of exactly 1 is accepted. The indicator constraint is then
    vacuous, but the hinge surrogate used in training can still bind.
    """

    alpha_neg: float
    alpha_pos: float

    def __post_init__(self):
        for name in ("alpha_neg", "alpha_pos"):
            a = float(getattr(self, name))
            if not (0.0 < a <= 1.0):
                raise InvalidArgumentError(f"{name} must lie in (0, 1], got {a}")
            object.__setattr__(self, name, a)

    def __getitem__(self, j):
        if j == -1:
            return self.alpha_neg
        if j == 1:
            return self.alpha_pos
        raise KeyError(j)


@dataclass(frozen=True)
class TheoryParams:
    """Constants appearing in the finite-sample bounds.

    ``s`` bounds the RKHS norm, ``r`` is ``sup K(x, x)``, ``c_margin`` is the
    gap ``c`` with ``t_-1 - c >= 1/2 >= t_1 + c`` and ``zeta`` the confidence
    parameter.
    """

    s: float
    r: float
    c_margin: float
    zeta: float

    def __post_init__(self):
        if not (self.s > 0 and self.r > 0 and self.c_margin > 0):
            raise InvalidArgumentError("s, r and c_margin must be positive")
        if not (0 < self.zeta <= 1):
            raise InvalidArgumentError("zeta must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class CsvmModel:
    """Kernel expansion ``f(x) = sum_i c_i K(x_i, x) + b`` with margin ``eps``."""

    coefficients: np.ndarray
    intercept: float
    epsilon: float
    kernel: KernelSpec
    support_features: np.ndarray
    support_labels: np.ndarray
    weights_final: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        X = np.array(self.support_features, dtype=float)
        y = np.array(self.support_labels, dtype=np.int8)
        w = np.array(self.weights_final, dtype=float)
        if X.ndim != 2 or c.shape != (X.shape[0],) or y.shape != c.shape or w.shape != c.shape:
            raise InvalidArgumentError("inconsistent model array shapes")
        if not (self.epsilon >= 0):
            raise InvalidArgumentError(f"margin must be >= 0, got {self.epsilon}")
        object.__setattr__(self, "coefficients", _readonly(c))
        object.__setattr__(self, "support_features", _readonly(X))
        object.__setattr__(self, "support_labels", _readonly(y))
        object.__setattr__(self, "weights_final", _readonly(w))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def p(self):
        return self.support_features.shape[1]

    def decision_function(self, X):
        """Evaluate ``f`` on the rows of ``X`` (a single vector is accepted)."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0])
        # chunked to bound memory of the cross-kernel block
        step = max(1, 4_000_000 // max(1, self.coefficients.size))
        for start in range(0, X.shape[0], step):
            block = cross_kernel(self.kernel, X[start:start + step], self.support_features)
            out[start:start + step] = block @ self.coefficients + self.intercept
        return float(out[0]) if single else out

    def primal_weights(self):
        """Explicit ``beta`` for the linear kernel."""
        if self.kernel.kind != "linear":
            raise InvalidArgumentError("explicit weights exist only for the linear kernel")
        return self.support_features.T @ self.coefficients


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidArgumentError(f"non-finite argument {v!r}")


def shifted_hinge(a, u):
    """``H_a(u) = max(0, 1 + a - u)``."""
    a = float(a)
    u = float(u)
    _check_finite(a, u)
    return max(0.0, 1.0 + a - u)


def shifted_hinge_array(a, u):
    """Vectorized :func:`shifted_hinge` (``a`` scalar, ``u`` array)."""
    u = np.asarray(u, dtype=float)
    if not (np.isfinite(a) and np.all(np.isfinite(u))):
        raise InvalidArgumentError("non-finite argument")
    return np.maximum(0.0, 1.0 + a - u)


def classify_by_margin(f_value, eps):
    eps = float(eps)
    if not eps >= 0:
        raise InvalidArgumentError(f"margin must be >= 0, got {eps}")
    if f_value > eps:
        return SetLabel.POS_ONLY
    if f_value < -eps:
        return SetLabel.NEG_ONLY
    return SetLabel.BOTH


def classify_by_margin_array(f_values, eps):
    if not eps >= 0:
        raise InvalidArgumentError(f"margin must be >= 0, got {eps}")
    f = np.asarray(f_values, dtype=float)
    out = np.zeros(f.shape, dtype=np.int8)
    out[f > eps] = SetLabel.POS_ONLY
    out[f < -eps] = SetLabel.NEG_ONLY
    return out
