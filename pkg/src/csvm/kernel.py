"""Kernel definitions and Gram matrices.

Three kernels are supported:

* linear       ``K(x, y) = x'y``
* Gaussian     ``K(x, y) = exp(-||x - y||^2 / rho^2)``
* polynomial   ``K(x, y) = (1 + x'y)^degree``
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidArgumentError

LINEAR = "linear"
GAUSSIAN = "gaussian"
POLYNOMIAL = "polynomial"

MAX_DEGREE = 10


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family together with its hyperparameter.

    ``param`` is the bandwidth ``rho`` for the Gaussian kernel, the degree for
    the polynomial kernel and unused (``None``) for the linear kernel.
    """

    kind: str
    param: float | int | None = None

    def __post_init__(self):
        if self.kind == LINEAR:
            object.__setattr__(self, "param", None)
        elif self.kind == GAUSSIAN:
            rho = float(self.param) if self.param is not None else float("nan")
            if not (np.isfinite(rho) and rho > 0):
                raise InvalidArgumentError(f"Gaussian bandwidth must be > 0, got {self.param!r}")
            object.__setattr__(self, "param", rho)
        elif self.kind == POLYNOMIAL:
            if self.param is None or int(self.param) != self.param:
                raise InvalidArgumentError(f"polynomial degree must be an integer, got {self.param!r}")
            degree = int(self.param)
            if not 1 <= degree <= MAX_DEGREE:
                raise InvalidArgumentError(f"polynomial degree must lie in 1..{MAX_DEGREE}, got {degree}")
            object.__setattr__(self, "param", degree)
        else:
            raise InvalidArgumentError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def linear(cls):
        return cls(LINEAR)

    @classmethod
    def gaussian(cls, rho):
        return cls(GAUSSIAN, rho)

    @classmethod
    def polynomial(cls, degree):
        return cls(POLYNOMIAL, degree)

    @classmethod
    def parse(cls, text):
        """Parse ``linear``, ``gaussian:RHO`` or ``poly:DEGREE``."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.lower()
        if kind == LINEAR and not arg:
            return cls.linear()
        if kind in (GAUSSIAN, "rbf") and arg:
            return cls.gaussian(float(arg))
        if kind in (POLYNOMIAL, "poly") and arg:
            return cls.polynomial(int(arg))
        raise InvalidArgumentError(f"cannot parse kernel {text!r}")

    def __str__(self):
        if self.kind == LINEAR:
            return LINEAR
        if self.kind == GAUSSIAN:
            return f"{GAUSSIAN}:{self.param!r}"
        return f"poly:{self.param}"

    def to_dict(self):
        return {"kind": self.kind, "param": self.param}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d.get("param"))


def _as_matrix(X, name):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a matrix")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return X


def cross_kernel(spec, X, Y):
    """Kernel matrix with entries ``K(X[i], Y[j])``."""
    X = _as_matrix(X, "X")
    Y = _as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if spec.kind == GAUSSIAN:
        sq = (
            np.einsum("ij,ij->i", X, X)[:, None]
            + np.einsum("ij,ij->i", Y, Y)[None, :]
            - 2.0 * (X @ Y.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / spec.param**2)
    inner = X @ Y.T
    if spec.kind == LINEAR:
        return inner
    return (1.0 + inner) ** spec.param


def kernel_eval(spec, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise InvalidArgumentError("kernel_eval expects two vectors")
    return float(cross_kernel(spec, x, y)[0, 0])


def gram_matrix(spec, X):
    """Symmetric ``n x n`` Gram matrix of the rows of ``X``."""
    X = _as_matrix(X, "X")
    K = cross_kernel(spec, X, X)
    K = 0.5 * (K + K.T)
    if spec.kind == GAUSSIAN:
        np.fill_diagonal(K, 1.0)
    return K
