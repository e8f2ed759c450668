"""Bayes-rule oracles for the synthetic scenarios and theory calculators.

The class probability ``eta(x) = P(Y = 1 | X = x)`` depends only on the two
signal coordinates; noise coordinates have the same law in both classes and
cancel.

* ``example1``: ratio of the two Gaussian class densities with equal priors.
* ``example2``: ``eta = 1 / (1 + exp(-g(x)))`` with
  ``g(x) = -3.6 x1^2 + 7.2 x2^2 - 0.8``. A plain density ratio built from
  ``+g`` and ``-g`` has a vanishing denominator, so the logistic link is used
  as the class probability; its decision boundary is ``{g = 0}``.
* ``example3``: the radial densities share the ``1 / r`` factor, so ``eta`` is
  0 inside radius 0.8, 1/2 on ``[0.8, 1.2]`` and 1 beyond 1.2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from . import datagen
from .errors import InvalidArgumentError
from .inference import (
    Thresholds, evaluate, predict_with_thresholds, predict_with_thresholds_array, robust_thresholds,
)

DEFAULT_MC_SAMPLES = 1_000_000


@dataclass(frozen=True)
class BayesSpec:
    scenario: str
    noise_dims: int = 0
    t_neg: float | None = None
    t_pos: float | None = None
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in datagen.SCENARIOS:
            raise InvalidArgumentError(f"unknown scenario {self.scenario!r}")
        if self.noise_dims < 0:
            raise InvalidArgumentError("noise_dims must be >= 0")
        if self.mc_samples < 1:
            raise InvalidArgumentError("mc_samples must be >= 1")
        for name in ("t_neg", "t_pos"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {v}")

    @property
    def dims(self):
        return 2 + self.noise_dims

    @property
    def has_thresholds(self):
        return self.t_neg is not None and self.t_pos is not None

    @property
    def thresholds(self):
        if not self.has_thresholds:
            raise InvalidArgumentError("thresholds not computed; call bayes_thresholds first")
        return Thresholds(self.t_neg, self.t_pos)

    def satisfies_ordering(self):
        """``t_pos <= 1/2 <= t_neg``."""
        return self.has_thresholds and self.t_pos <= 0.5 <= self.t_neg


def _gauss_logpdf(x, mean, var):
    return -0.5 * np.sum((x - mean) ** 2 / var + np.log(2 * np.pi * var), axis=-1)


def eta_signal(scenario, x2):
    """``eta`` evaluated from the two signal coordinates (array of shape ``(n, 2)``)."""
    x2 = np.asarray(x2, dtype=float)
    if scenario == "example1":
        g = (_gauss_logpdf(x2, datagen.MEAN_POS, datagen.VAR_POS)
             - _gauss_logpdf(x2, datagen.MEAN_NEG, datagen.VAR_NEG))
    elif scenario == "example2":
        g = datagen.logistic_margin(x2[:, 0], x2[:, 1])
    elif scenario == "example3":
        r = np.hypot(x2[:, 0], x2[:, 1])
        in_neg = r <= datagen.RADIUS_NEG[1]
        in_pos = (r >= datagen.RADIUS_POS[0]) & (r <= datagen.RADIUS_POS[1])
        # equal widths, so the two densities are equal wherever both are positive
        return np.where(in_pos, np.where(in_neg, 0.5, 1.0), 0.0)
    else:
        raise InvalidArgumentError(f"unknown scenario {scenario!r}")
    return expit(g)


def eta(spec, x):
    """Class-+1 probability at ``x`` (vector or matrix of full-dimensional rows)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] < 2:
        raise InvalidArgumentError("x needs at least the two signal coordinates")
    out = eta_signal(spec.scenario, X[:, :2])
    return float(out[0]) if single else out


def _mc_draw(spec, n, *stream):
    rng = datagen.make_rng(spec.seed, *stream)
    return datagen._SIGNAL[spec.scenario](rng, n)


def bayes_thresholds(spec, targets):
    """Monte-Carlo class-conditional quantiles of ``eta``; returns an updated spec.

    ``t_neg`` is the smallest sampled ``eta`` value with at most
    ``alpha_neg`` of the class -1 draws above it and ``t_pos`` the largest
    with at most ``alpha_pos`` of the class +1 draws below it.
    """
    x2, y = _mc_draw(spec, spec.mc_samples, 0)
    if not (np.any(y == -1) and np.any(y == 1)):
        raise InvalidArgumentError("Monte-Carlo sample lacks one of the classes; increase mc_samples")
    th = robust_thresholds(eta_signal(spec.scenario, x2), y, targets)
    return replace(spec, t_neg=th.t_neg, t_pos=th.t_pos)


def bayes_predict(spec, x):
    """Set-valued Bayes rule on ``eta`` with closed regions (ties give ``BOTH``)."""
    return predict_with_thresholds(eta(spec, x), spec.thresholds)


def bayes_predict_array(spec, X):
    return predict_with_thresholds_array(eta(spec, np.atleast_2d(X)), spec.thresholds)


def bayes_mc_evaluation(spec, n, targets, stream=1):
    """Evaluate :func:`bayes_predict` on ``n`` fresh draws (independent of the threshold draws).

    Returns the :class:`~csvm.inference.EvalReport` and the class counts.
    """
    x2, y = _mc_draw(spec, n, stream)
    pred = predict_with_thresholds_array(eta_signal(spec.scenario, x2), spec.thresholds)
    return evaluate(pred, y, targets), (int(np.sum(y == -1)), int(np.sum(y == 1)))


def _slack(theory, n_j):
    if n_j < 1:
        raise InvalidArgumentError("n_j must be >= 1")
    sr = theory.s * theory.r
    t = math.sqrt(2.0 * sr * math.log(1.0 / theory.zeta) / n_j)
    return 3.0 * t + math.sqrt(sr / n_j)


def noncoverage_bound(theory, n_j, empirical):
    """High-probability upper bound on a class non-coverage rate.

    ``empirical + 3 sqrt(2 s r log(1/zeta) / n_j) + sqrt(s r / n_j)``.
    """
    return float(empirical) + _slack(theory, n_j)


@dataclass(frozen=True)
class TheoryConstants:
    c_prime: float
    kappa: float


def theory_constants(theory):
    """``C' = 1/(4c^2) + 1/(2c)`` and ``kappa = (6 log(1/zeta) + 1) sqrt(s r)``."""
    c = theory.c_margin
    c_prime = 1.0 / (4.0 * c * c) + 1.0 / (2.0 * c)
    kappa = (6.0 * math.log(1.0 / theory.zeta) + 1.0) * math.sqrt(theory.s * theory.r)
    return TheoryConstants(c_prime, kappa)

