"""Scoring, robust threshold calibration and set-valued evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SetLabel
from .errors import DimensionError, InvalidArgumentError

# guards floor(alpha * m) against representation error, e.g. 0.7 * 10
_FLOOR_SLACK = 1e-9


@dataclass(frozen=True)
class Thresholds:
    """Score cut-offs: ``s > t_neg`` excludes -1, ``s < t_pos`` excludes +1."""

    t_neg: float
    t_pos: float

    def __post_init__(self):
        for name in ("t_neg", "t_pos"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidArgumentError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def from_margin(cls, eps):
        """Thresholds equivalent to classifying by ``|f| <= eps``."""
        return cls(float(eps), -float(eps))

    @property
    def crossed(self):
        return self.t_neg < self.t_pos


@dataclass(frozen=True)
class EvalReport:
    """Empirical non-coverage per class, ambiguity and the success flag.

    A class absent from the evaluated labels gets a NaN rate and
    ``success=False``.
    """

    noncoverage_neg: float
    noncoverage_pos: float
    ambiguity: float
    n_test: int
    success: bool

    def to_dict(self):
        return {
            "noncoverage_neg": self.noncoverage_neg,
            "noncoverage_pos": self.noncoverage_pos,
            "ambiguity": self.ambiguity,
            "n_test": self.n_test,
            "success": self.success,
        }


def score(model, x):
    """``f(x)`` for a vector ``x`` or every row of a matrix."""
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1] if x.ndim else 1
    if x.ndim not in (1, 2) or dim != model.p:
        raise DimensionError(f"model expects {model.p} features, got {dim}")
    return model.decision_function(x)


def _split_scores(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.ndim != 1 or y.shape != s.shape:
        raise InvalidArgumentError("scores and labels must be vectors of equal length")
    if not np.all(np.isfinite(s)):
        raise InvalidArgumentError("scores must be finite")
    neg = np.sort(s[y == -1])
    pos = np.sort(s[y == 1])
    if neg.size == 0 or pos.size == 0:
        raise InvalidArgumentError("both classes are required in the tuning data")
    return neg, pos


def upper_order_index(m, alpha):
    """1-based rank ``ceil((1 - alpha) m)`` (at least 1) used for the class -1 cut-off."""
    return max(1, m - math.floor(alpha * m + _FLOOR_SLACK))


def lower_order_index(m, alpha):
    """1-based rank ``floor(alpha m) + 1`` (at most ``m``) used for the class +1 cut-off."""
    return min(m, math.floor(alpha * m + _FLOOR_SLACK) + 1)


def robust_thresholds(scores, labels, targets):
    """Order-statistic thresholds with tuning non-coverage at most the targets.

    ``t_neg`` is the smallest class -1 order statistic that leaves at most
    ``alpha_neg * m_neg`` class -1 scores strictly above it; ``t_pos`` is the
    largest class +1 order statistic leaving at most ``alpha_pos * m_pos``
    class +1 scores strictly below it.

    Examples
    --------
    >>> from csvm.core import NoncoverageTargets
    >>> s = list(range(1, 11)) + [0.0]
    >>> y = [-1] * 10 + [1]
    >>> robust_thresholds(s, y, NoncoverageTargets(0.2, 0.5)).t_neg
    8.0
    """
    neg, pos = _split_scores(scores, labels)
    k_neg = upper_order_index(neg.size, targets.alpha_neg)
    k_pos = lower_order_index(pos.size, targets.alpha_pos)
    return Thresholds(neg[k_neg - 1], pos[k_pos - 1])


def predict_with_thresholds(s, th):
    """Set-valued label for a single score.

    When the thresholds are crossed (``t_neg < t_pos``) the scores strictly
    between them satisfy both exclusion rules; they are resolved by the side
    of the midpoint, with the midpoint itself going to ``POS_ONLY``.
    """
    s = float(s)
    excl_neg = s > th.t_neg
    excl_pos = s < th.t_pos
    if excl_neg and excl_pos:
        return SetLabel.POS_ONLY if s >= 0.5 * (th.t_neg + th.t_pos) else SetLabel.NEG_ONLY
    if excl_neg:
        return SetLabel.POS_ONLY
    if excl_pos:
        return SetLabel.NEG_ONLY
    return SetLabel.BOTH


def predict_with_thresholds_array(scores, th):
    """Vectorized :func:`predict_with_thresholds`; returns int8 codes."""
    s = np.asarray(scores, dtype=float)
    excl_neg = s > th.t_neg
    excl_pos = s < th.t_pos
    out = np.zeros(s.shape, dtype=np.int8)
    out[excl_neg] = SetLabel.POS_ONLY
    out[excl_pos] = SetLabel.NEG_ONLY
    both = excl_neg & excl_pos
    if np.any(both):
        mid = 0.5 * (th.t_neg + th.t_pos)
        out[both] = np.where(s[both] >= mid, SetLabel.POS_ONLY, SetLabel.NEG_ONLY)
    return out


def evaluate(predictions, labels, targets):
    """Compare set-valued predictions (``SetLabel`` codes) with true labels."""
    pred = np.asarray(predictions, dtype=np.int8)
    y = np.asarray(labels)
    if pred.shape != y.shape or pred.ndim != 1:
        raise InvalidArgumentError("predictions and labels must be vectors of equal length")
    neg = y == -1
    pos = y == 1
    nan = float("nan")
    nc_neg = float(np.mean(pred[neg] == SetLabel.POS_ONLY)) if neg.any() else nan
    nc_pos = float(np.mean(pred[pos] == SetLabel.NEG_ONLY)) if pos.any() else nan
    amb = float(np.mean(pred == SetLabel.BOTH)) if y.size else nan
    success = bool(nc_neg <= targets.alpha_neg and nc_pos <= targets.alpha_pos)
    return EvalReport(nc_neg, nc_pos, amb, int(y.size), success)


def evaluate_scores(scores, labels, th, targets):
    """Threshold ``scores`` with ``th`` and evaluate against ``labels``."""
    return evaluate(predict_with_thresholds_array(scores, th), labels, targets)
