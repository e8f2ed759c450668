"""Primal recovery: kernel coefficients from the dual, then intercept and margin.

With ``beta`` fixed (``h_i = sum_j c_j K(x_j, x_i)``) the remaining problem in
``(b, eps)`` is a linear program. In the rotated coordinates ``u = eps + b``
and ``v = eps - b`` it separates::

    sum(xi)            = sum_{y=+1} (1 - h_i + v)_+  +  sum_{y=-1} (1 + h_i + u)_+
    weighted eta, +1   = sum_{y=+1} w_i (1 - h_i - u)_+  <=  n_1 alpha_1
    weighted eta, -1   = sum_{y=-1} w_i (1 + h_i - v)_+  <=  n_-1 alpha_-1
    eps >= 0           <=>  u + v >= 0

Both objective parts are nondecreasing, each constraint is a lower bound on a
single coordinate, so the LP is solved exactly by two one-dimensional root
searches and, when ``eps = 0`` binds, a convex piecewise-linear line search.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InvalidArgumentError
from .qp import QpStatus


@dataclass(frozen=True, eq=False)
class MarginSolution:
    intercept: float
    epsilon: float
    xi: np.ndarray
    eta: np.ndarray
    objective: float  # sum(xi)


def recover_coefficients(solution, labels):
    """``c_i = (zeta_i + tau_i) y_i``."""
    if solution.status is not QpStatus.OPTIMAL:
        raise InvalidArgumentError(f"cannot recover coefficients from a {solution.status.value} solution")
    y = np.asarray(labels, dtype=float)
    n = y.size
    z = np.asarray(solution.z, dtype=float)
    if z.size != 2 * n + 2:
        raise InvalidArgumentError("solution does not match the number of labels")
    return (z[:n] + z[n:2 * n]) * y


def hinge_sum_root(knots, weights, budget):
    """Smallest ``u`` with ``sum_i weights_i * (knots_i - u)_+ <= budget``.

    ``budget`` must be positive; the left-hand side is convex, nonincreasing
    and strictly decreasing while positive, so the root is unique.
    """
    a = np.asarray(knots, dtype=float)
    w = np.asarray(weights, dtype=float)
    if a.size == 0:
        return -np.inf
    if not budget > 0:
        raise InfeasibleError("weighted constraint budget must be positive")
    order = np.argsort(-a, kind="stable")
    a = a[order]
    w = w[order]
    sa = np.cumsum(w * a)
    sw = np.cumsum(w)
    # on the segment below the j-th largest knot, the top j+1 terms are active
    cand = (sa - budget) / sw
    lower = np.append(a[1:], -np.inf)
    j = int(np.argmax(cand >= lower))
    return float(min(cand[j], a[j]))


def _pl_sum(points, offsets_pos, offsets_neg):
    """phi(b) = sum (offsets_pos - b)_+ + sum (offsets_neg + b)_+ evaluated at ``points``."""
    b = np.asarray(points, dtype=float)[:, None]
    val = np.maximum(offsets_pos[None, :] - b, 0.0).sum(axis=1)
    val += np.maximum(offsets_neg[None, :] + b, 0.0).sum(axis=1)
    return val


def solve_intercept_margin(h, labels, weights, lam_prime, targets, n_neg, n_pos):
    """Minimize ``sum(xi)`` over ``(b, eps)`` with the kernel part ``h`` fixed.

    Among minimizers the one with the smallest ``eps`` is returned, then the
    one with the smallest ``|b|``. ``lam_prime`` only rescales the objective
    and is accepted for interface symmetry.
    """
    h = np.asarray(h, dtype=float)
    y = np.asarray(labels, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(h)):
        raise InvalidArgumentError("h must be finite")
    if not lam_prime > 0:
        raise InvalidArgumentError("lam' must be > 0")
    pos = y > 0
    neg = ~pos
    if n_pos < 1 or n_neg < 1 or pos.sum() != n_pos or neg.sum() != n_neg:
        raise InvalidArgumentError("class counts must match the labels and be >= 1")

    u_min = hinge_sum_root(1.0 - h[pos], w[pos], n_pos * targets.alpha_pos)
    v_min = hinge_sum_root(1.0 + h[neg], w[neg], n_neg * targets.alpha_neg)

    if u_min + v_min >= 0.0:
        u, v = u_min, v_min
        b = 0.5 * (u - v)
        eps = 0.5 * (u + v)
    else:
        # eps = 0, b in [u_min, -v_min], minimize a convex piecewise-linear function
        lo, hi = u_min, -v_min
        off_pos = 1.0 - h[pos]
        off_neg = 1.0 + h[neg]
        knots = np.concatenate([off_pos, -off_neg])
        cands = np.concatenate([[lo, hi], knots[(knots > lo) & (knots < hi)]])
        vals = _pl_sum(cands, off_pos, off_neg)
        best = vals.min()
        tie = vals <= best + 1e-12 * max(1.0, abs(best))
        a_lo, a_hi = cands[tie].min(), cands[tie].max()
        b = float(np.clip(0.0, a_lo, a_hi))
        eps = 0.0

    margin = y * (h + b)
    xi = np.maximum(1.0 + eps - margin, 0.0)
    eta = np.maximum(1.0 - eps - margin, 0.0)
    return MarginSolution(float(b), float(eps), xi, eta, float(xi.sum()))
