"""Dual quadratic program of the confidence-set SVM and a dense interior-point solver.

The dual is stated over ``z = (zeta_1..zeta_n, tau_1..tau_n, theta_-1, theta_1)``::

    min  1/2 (zeta+tau)' Ktilde (zeta+tau) - sum(zeta) - sum(tau)
         + n_-1 alpha_-1 theta_-1 + n_1 alpha_1 theta_1
    s.t. 0 <= zeta_i <= lam',  0 <= tau_i <= w_i theta_{y_i},
         sum_i y_i (zeta_i + tau_i) = 0,  sum(zeta) - sum(tau) >= 0,

where ``Ktilde_ij = y_i y_j K(x_i, x_j)``. Its minimum ``D`` relates to the
primal optimum ``P`` of ``1/2 ||beta||^2 + lam' sum(xi)`` by ``P = -D``.

:func:`solve_qp` handles any problem in the general form

    min 1/2 z'Qz + q'z  s.t.  A_eq z = b_eq,  A_ineq z <= b_ineq,  lower <= z <= upper

with a Mehrotra predictor-corrector primal-dual interior-point method. Problems
produced by :func:`assemble_dual` carry a :class:`CsvmStructure` which lets the
Newton systems be reduced to an ``n x n`` Cholesky factorization instead of a
``(2n+2) x (2n+2)`` one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgumentError, NumericalError

REFINE_STEPS = 3
REFINE_TOL = 1e-14
DEFAULT_TOL = 1e-8
MAX_ITER = 200
JITTER = 1e-10
PSD_RTOL = 1e-8
STEP_FRACTION = 0.99
INFEASIBLE_RATIO = 1e8
INFEASIBLE_PATIENCE = 10

RESIDUAL_GROUPS = ("stationarity", "primal_feasibility", "dual_feasibility", "complementarity")


class QpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class VariableLayout:
    """Index map of the dual variables ``(zeta, tau, theta_-1, theta_1)``."""

    n: int

    @property
    def size(self):
        return 2 * self.n + 2

    @property
    def zeta(self):
        return slice(0, self.n)

    @property
    def tau(self):
        return slice(self.n, 2 * self.n)

    @property
    def theta(self):
        return slice(2 * self.n, 2 * self.n + 2)

    def describe(self, index):
        if not 0 <= index < self.size:
            raise IndexError(index)
        if index < self.n:
            return ("zeta", index)
        if index < 2 * self.n:
            return ("tau", index - self.n)
        return ("theta", -1 if index == 2 * self.n else 1)


@dataclass(frozen=True, eq=False)
class CsvmStructure:
    """Data needed by the reduced Newton solver; set only by :func:`assemble_dual`."""

    signed_gram: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    factor: np.ndarray | None = None  # L with signed_gram = L L', when low rank


@dataclass(frozen=True, eq=False)
class QpProblem:
    Q: np.ndarray
    q: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    layout: VariableLayout | None = None
    structure: CsvmStructure | None = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).ravel()
        m = q.size
        Q = np.asarray(self.Q, dtype=float).reshape(m, m)
        A_ineq = np.asarray(self.A_ineq, dtype=float).reshape(-1, m)
        A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, m)
        b_ineq = np.asarray(self.b_ineq, dtype=float).ravel()
        b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (m,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (m,)).copy()
        if b_ineq.size != A_ineq.shape[0] or b_eq.size != A_eq.shape[0]:
            raise InvalidArgumentError("constraint matrices and right-hand sides disagree")
        if m and np.max(np.abs(Q - Q.T)) > 1e-12 * (1 + np.abs(Q).max()):
            raise InvalidArgumentError("Q must be symmetric")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise InvalidArgumentError("invalid variable bounds")
        if self.layout is not None and self.layout.size != m:
            raise InvalidArgumentError("layout does not cover all variables")
        for name, val in (("Q", Q), ("q", q), ("A_ineq", A_ineq), ("b_ineq", b_ineq),
                          ("A_eq", A_eq), ("b_eq", b_eq), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, val)

    @property
    def m(self):
        return self.q.size

    def objective(self, z):
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ (self.Q @ z) + self.q @ z)


@dataclass(frozen=True, eq=False)
class QpSolution:
    z: np.ndarray
    objective: float
    kkt_residuals: dict
    iterations: int
    status: QpStatus
    y_eq: np.ndarray
    lam_ineq: np.ndarray
    lam_lower: np.ndarray
    lam_upper: np.ndarray
    history: tuple = field(default=())

    @property
    def optimal(self):
        return self.status is QpStatus.OPTIMAL


@dataclass(frozen=True)
class KktReport:
    residuals: dict
    passed: dict
    tol: float

    @property
    def ok(self):
        return all(self.passed.values())


# ---------------------------------------------------------------------------
# assembly


def check_psd(gram, rtol=PSD_RTOL):
    """Raise :class:`NumericalError` if ``gram`` has an eigenvalue below ``-rtol * max|eig|``."""
    ev = np.linalg.eigvalsh(gram)
    scale = max(abs(ev[0]), abs(ev[-1]))
    if ev[0] < -rtol * scale:
        raise NumericalError(
            f"Gram matrix is not positive semidefinite (smallest eigenvalue {ev[0]:.3e})",
            value=float(ev[0]),
        )
    return float(ev[0])


def assemble_dual(gram, labels, weights, lam_prime, targets, n_neg, n_pos, check=True, gram_factor=None):
    """Build the dual QP for one set of constraint weights.

    ``gram_factor`` is an optional ``n x r`` matrix ``F`` with ``gram = F F'``
    (the feature matrix for the linear kernel); with ``r`` well below ``n``
    it lets the Newton systems be solved in ``O(n r^2)``.
    """
    K = np.asarray(gram, dtype=float)
    y = np.asarray(labels).astype(float)
    w = np.asarray(weights, dtype=float)
    n = y.size
    if K.shape != (n, n) or w.shape != (n,):
        raise InvalidArgumentError("gram, labels and weights must agree in size")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InvalidArgumentError("labels must be in {-1, +1}")
    if not (np.isfinite(lam_prime) and lam_prime > 0):
        raise InvalidArgumentError(f"lam' must be > 0, got {lam_prime}")
    if not np.all((w > 0) & (w <= 1)):
        raise InvalidArgumentError("weights must lie in (0, 1]")
    if check:
        check_psd(K)

    layout = VariableLayout(n)
    m = layout.size
    Kt = (y[:, None] * K) * y[None, :]
    Kt = 0.5 * (Kt + Kt.T)
    Q = np.zeros((m, m))
    for rs in (layout.zeta, layout.tau):
        for cs in (layout.zeta, layout.tau):
            Q[rs, cs] = Kt
    q = np.concatenate([-np.ones(2 * n), [n_neg * targets.alpha_neg, n_pos * targets.alpha_pos]])

    A_eq = np.concatenate([y, y, [0.0, 0.0]])[None, :]
    b_eq = np.zeros(1)

    G = np.zeros((n + 1, m))
    G[0, layout.zeta] = -1.0
    G[0, layout.tau] = 1.0
    rows = np.arange(1, n + 1)
    G[rows, n + np.arange(n)] = 1.0
    theta_col = 2 * n + (y > 0).astype(int)
    G[rows, theta_col] = -w
    h = np.zeros(n + 1)

    lower = np.zeros(m)
    upper = np.full(m, np.inf)
    upper[layout.zeta] = lam_prime
    L = None
    if gram_factor is not None:
        F = np.asarray(gram_factor, dtype=float)
        if F.ndim != 2 or F.shape[0] != n:
            raise InvalidArgumentError("gram_factor must have one row per observation")
        L = y[:, None] * F
    structure = CsvmStructure(Kt, y.astype(np.int8), w.copy(), L)
    return QpProblem(Q, q, G, h, A_eq, b_eq, lower, upper, layout, structure)


# ---------------------------------------------------------------------------
# Newton-system solvers


class _DenseNewton:
    def __init__(self, problem):
        self.Q = problem.Q
        self.G = problem.A_ineq

    def Qz(self, z):
        return self.Q @ z

    def factor(self, dbox, wg, delta):
        H = self.Q + (self.G.T * wg) @ self.G
        H[np.diag_indices_from(H)] += dbox + delta
        self._cho = sla.cho_factor(H, lower=False, check_finite=False)

    def solve(self, R):
        return sla.cho_solve(self._cho, R, check_finite=False)


class _CsvmNewton:
    """Reduced Newton solve exploiting the (zeta, tau, theta) structure.

    With ``u = zeta + tau`` the Hessian only couples the ``u`` block through
    ``Ktilde``; ``tau`` enters through diagonal terms only and is eliminated
    in closed form. What remains is ``Ktilde + diag(du)`` on ``u`` plus a
    2 x 2 Schur complement for ``theta``. The single dense inequality row
    ``sum(tau) - sum(zeta) <= 0`` is added back with Sherman-Morrison.

    The ``u`` block is handled in one of three tiers:

    0. Woodbury identity, when a low-rank factor ``Ktilde = L L'`` is known;
    1. Cholesky factorization of the ``n x n`` block;
    2. Cholesky factorization of the full ``(2n+2) x (2n+2)`` Newton matrix.

    Each solve is refined against the full operator. If refinement does not
    reach ``REFINE_TOL`` (near degenerate optima the reductions lose
    accuracy) the solver moves to the next tier for the rest of the run.
    """

    LOWRANK, REDUCED, DENSE = 0, 1, 2

    def __init__(self, problem):
        st = problem.structure
        self.n = st.labels.size
        self.K = st.signed_gram
        self.L = st.factor
        self.w = st.weights
        self.onehot = np.zeros((self.n, 2))
        self.onehot[np.arange(self.n), (st.labels > 0).astype(int)] = 1.0
        self.g = problem.A_ineq[0].copy()
        self.G = problem.A_ineq
        self.Qfull = problem.Q
        self.yidx = (st.labels > 0).astype(int)
        self.tier = self.LOWRANK if self.L is not None else self.REDUCED
        self._k_norm = float(np.max(np.abs(self.K).sum(axis=1))) if self.n else 0.0

    @property
    def dense(self):
        return self.tier == self.DENSE

    def escalate(self):
        """Move to the next, more robust tier; False if already dense."""
        if self.tier == self.DENSE:
            return False
        self.tier += 1
        return True

    def Qz(self, z):
        n = self.n
        Ku = self.K @ (z[:n] + z[n:2 * n])
        return np.concatenate([Ku, Ku, [0.0, 0.0]])

    def factor(self, dbox, wg, delta):
        self._args = (dbox, wg, delta)
        self._diag = dbox + delta
        self._wg = wg
        wc = wg[1:]
        # infinity-norm bound on the Newton matrix, used for backward errors
        self._h_norm = (2.0 * self._k_norm + float(np.max(self._diag))
                        + wg[0] * self.g.size + float(np.max(wc * (1.0 + self.w), initial=0.0))
                        + float(np.max(self.onehot.T @ (wc * self.w * (1.0 + self.w)))))
        while self.tier != self.DENSE:
            try:
                self._reduced_factor(dbox, wg, delta)
                return
            except (np.linalg.LinAlgError, sla.LinAlgError):
                self.escalate()
        self._dense_factor()

    def _dense_factor(self):
        n = self.n
        wg = self._wg
        H = self.Qfull + wg[0] * np.outer(self.g, self.g)
        H[np.diag_indices_from(H)] += self._diag
        Wc = wg[1:]
        ti = np.arange(n, 2 * n)
        th = 2 * n + self.yidx
        H[ti, ti] += Wc
        H[ti, th] -= Wc * self.w
        H[th, ti] -= Wc * self.w
        np.add.at(H, (th, th), Wc * self.w**2)
        self._dense_cho = sla.cho_factor(H, lower=False, check_finite=False)

    def _u_solver(self, du):
        """Return a function applying ``(Ktilde + diag(du))^{-1}``."""
        if self.tier == self.LOWRANK:
            L = self.L
            dinv = 1.0 / du
            C = L.T @ (dinv[:, None] * L)
            C[np.diag_indices_from(C)] += 1.0
            cc = sla.cho_factor(C, lower=False, check_finite=False)

            def apply(R):
                d = dinv if R.ndim == 1 else dinv[:, None]
                x = d * R
                return x - d * (L @ sla.cho_solve(cc, L.T @ x, check_finite=False))

            return apply
        A = self.K.copy()
        A[np.diag_indices(self.n)] += du
        ca = sla.cho_factor(A, lower=False, check_finite=False)
        return lambda R: sla.cho_solve(ca, R, check_finite=False)

    def _reduced_factor(self, dbox, wg, delta):
        self._dense_cho = None
        n = self.n
        Dz = dbox[:n] + delta
        Dt = dbox[n:2 * n] + delta
        Dth = dbox[2 * n:] + delta
        omega = wg[0]
        Wc = wg[1:]
        D = Dz + Dt + Wc
        w = self.w
        # after eliminating tau: u-block K + diag(du), coupling P = diag(du) V
        du = Dz * (Dt + Wc) / D
        V = self.onehot * (-Wc * w / (Dt + Wc))[:, None]
        P = du[:, None] * V
        self._Ainv = self._u_solver(du)
        # theta Schur complement M - P'A^{-1}P, rearranged so that no large
        # terms cancel: diagonal part sum_i Dt Wc w^2 / (Dt + Wc) plus V'K A^{-1} P
        S = (self.K @ V).T @ self._Ainv(P)
        S = 0.5 * (S + S.T)
        S[np.diag_indices(2)] += Dth + self.onehot.T @ (Dt * Wc * w**2 / (Dt + Wc))
        self._S = sla.cho_factor(S, lower=False, check_finite=False)
        self.Dz, self.D, self.P = Dz, D, P
        self.Dtc = Dt + Wc
        self._big_z = Dz >= Dt + Wc
        self.B = self.onehot * (-Wc * w)[:, None]
        hg = self._base_solve(self.g)
        self._hg = hg
        self._sm = omega / (1.0 + omega * (self.g @ hg))

    def _base_solve(self, R):
        n = self.n
        col = (lambda v: v) if R.ndim == 1 else (lambda v: v[:, None])
        rz, rt, rth = R[:n], R[n:2 * n], R[2 * n:]
        Dz, D, Dtc = col(self.Dz), col(self.D), col(self.Dtc)
        # weighted averages rather than differences of possibly huge terms
        ru = (rz * Dtc + Dz * rt) / D
        rth = rth - self.B.T @ ((rt - rz) / D)
        Aru = self._Ainv(ru)
        xth = sla.cho_solve(self._S, rth - self.P.T @ Aru, check_finite=False)
        xu = Aru - self._Ainv(self.P @ xth)
        # recover the better-conditioned of zeta/tau directly, the other as the difference
        Kxu = self._Kt_apply(xu)
        xz_direct = (rz - Kxu) / Dz
        xt_direct = (rt - Kxu - self.B @ xth) / Dtc
        big_z = col(self._big_z)
        xz = np.where(big_z, xz_direct, xu - xt_direct)
        xt = xu - xz
        return np.concatenate([xz, xt, xth])

    def _Kt_apply(self, x):
        if self.tier == self.LOWRANK:
            return self.L @ (self.L.T @ x)
        return self.K @ x

    def _apply(self, x):
        Gx = self.G @ x
        wg = self._wg if x.ndim == 1 else self._wg[:, None]
        d = self._diag if x.ndim == 1 else self._diag[:, None]
        if x.ndim == 1:
            Qx = self.Qz(x)
        else:
            Ku = self.K @ (x[:self.n] + x[self.n:2 * self.n])
            Qx = np.vstack([Ku, Ku, np.zeros((2, x.shape[1]))])
        return Qx + self.G.T @ (wg * Gx) + d * x

    def _sm_solve(self, R):
        x = self._base_solve(R)
        gx = self.g @ x
        if x.ndim == 1:
            return x - self._hg * (self._sm * gx)
        return x - np.outer(self._hg, self._sm * gx)

    def solve(self, R):
        if self._dense_cho is not None:
            return sla.cho_solve(self._dense_cho, R, check_finite=False)

        def backward_error(x, res):
            scale = self._h_norm * np.max(np.abs(x)) + np.max(np.abs(R))
            return np.max(np.abs(res)) / max(scale, np.finfo(float).tiny)

        x = self._sm_solve(R)
        for _ in range(REFINE_STEPS + 1):
            if not np.all(np.isfinite(x)):
                break
            res = R - self._apply(x)
            if backward_error(x, res) <= REFINE_TOL:
                return x
            x = x + self._sm_solve(res)
        self.escalate()
        try:
            self.factor(*self._args)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            if np.all(np.isfinite(x)):
                return x
            raise
        return self.solve(R)


# ---------------------------------------------------------------------------
# interior point method


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _inf_norm(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def _finite_scale(*arrays):
    vals = [np.abs(a[np.isfinite(a)]) for a in arrays]
    return max((float(v.max()) for v in vals if v.size), default=0.0)


def _zero_solution(problem, status, iterations=0):
    m = problem.m
    nan = float("nan")
    return QpSolution(
        np.zeros(m), nan, dict.fromkeys(RESIDUAL_GROUPS, nan), iterations, status,
        np.zeros(problem.A_eq.shape[0]), np.zeros(problem.A_ineq.shape[0]), np.zeros(m), np.zeros(m),
    )


def solve_qp(problem, tol=DEFAULT_TOL, max_iter=MAX_ITER, use_structure=True):
    """Solve a convex QP with a primal-dual interior-point method.

    Residuals are measured in the infinity norm and scaled: stationarity by
    ``1 + max(||q||, ||Qz||)``, primal feasibility by ``1 + max(||z||, |rhs|)``
    and complementarity (the total gap ``s'lambda``) by ``max(|objective|, tol)``,
    so the last one is a relative duality gap. Multipliers stay strictly
    positive by construction, so dual feasibility is reported as zero; use
    :func:`verify_kkt` for an independent check.
    """
    if not tol > 0:
        raise InvalidArgumentError("tol must be > 0")
    Q, q = problem.Q, problem.q
    G, h = problem.A_ineq, problem.b_ineq
    A, beq = problem.A_eq, problem.b_eq
    lb, ub = problem.lower, problem.upper
    m = problem.m
    if np.any(lb > ub):
        return _zero_solution(problem, QpStatus.INFEASIBLE)

    newton = _CsvmNewton(problem) if (use_structure and problem.structure is not None) else _DenseNewton(problem)
    il = np.flatnonzero(np.isfinite(lb))
    iu = np.flatnonzero(np.isfinite(ub))
    trace = float(np.trace(Q))
    delta0 = JITTER * trace / m if trace > 0 else JITTER

    z = np.zeros(m)
    both = np.isfinite(lb) & np.isfinite(ub)
    only_l = np.isfinite(lb) & ~np.isfinite(ub)
    only_u = ~np.isfinite(lb) & np.isfinite(ub)
    z[both] = 0.5 * (lb[both] + ub[both])
    z[only_l] = lb[only_l] + 1.0
    z[only_u] = ub[only_u] - 1.0
    sg = np.maximum(h - G @ z, 1.0)
    sl = np.maximum(z[il] - lb[il], 1.0)
    su = np.maximum(ub[iu] - z[iu], 1.0)
    lg = np.ones(G.shape[0])
    ll = np.ones(il.size)
    lu = np.ones(iu.size)
    y = np.zeros(A.shape[0])

    q_norm = _inf_norm(q)
    rhs_scale = _finite_scale(beq, h, lb, ub)
    history = []
    status = QpStatus.MAX_ITER
    suspicious = 0
    n_comp = sg.size + sl.size + su.size
    residuals = {}
    it = 0
    best = None
    best_merit = np.inf

    def scatter(vals, idx):
        out = np.zeros(m)
        out[idx] = vals
        return out

    for it in range(max_iter + 1):
        Qz = newton.Qz(z)
        rd = Qz + q + A.T @ y + G.T @ lg - scatter(ll, il) + scatter(lu, iu)
        rp = A @ z - beq
        rg = G @ z + sg - h
        rl = lb[il] - z[il] + sl
        ru = z[iu] + su - ub[iu]
        obj = float(0.5 * z @ Qz + q @ z)
        history.append(obj)
        gap = float(sg @ lg + sl @ ll + su @ lu)
        pres = max(_inf_norm(rp), _inf_norm(rg), _inf_norm(rl), _inf_norm(ru))
        residuals = {
            "stationarity": _inf_norm(rd) / (1.0 + max(q_norm, _inf_norm(Qz))),
            "primal_feasibility": pres / (1.0 + max(rhs_scale, _inf_norm(z))),
            "dual_feasibility": 0.0,
            "complementarity": gap / max(abs(obj), tol),
        }
        if all(v <= tol for v in residuals.values()):
            status = QpStatus.OPTIMAL
            break
        merit = max(residuals.values())
        if merit < best_merit:
            best_merit = merit
            best = (z, y, sg, sl, su, lg, ll, lu, dict(residuals))
        elif merit > 10.0 * best_merit and isinstance(newton, _CsvmNewton) and newton.escalate():
            # progress lost to an inaccurate reduced solve: go back to the
            # best iterate and continue with a more robust factorization
            z, y, sg, sl, su, lg, ll, lu, residuals = best
            continue
        if it == max_iter:
            break

        # Farkas-type certificate: multipliers blowing up while the primal residual stalls
        cert = max(_inf_norm(y), _inf_norm(lg), _inf_norm(ll), _inf_norm(lu))
        farkas = float(beq @ y + h @ lg - lb[il] @ ll + ub[iu] @ lu)
        if residuals["primal_feasibility"] > tol and cert > INFEASIBLE_RATIO * max(pres, tol) and farkas < 0:
            suspicious += 1
            if suspicious >= INFEASIBLE_PATIENCE:
                status = QpStatus.INFEASIBLE
                break
        else:
            suspicious = 0

        Wg, Wl, Wu = lg / sg, ll / sl, lu / su
        dbox = scatter(Wl, il) + scatter(Wu, iu)
        delta = delta0
        for _ in range(8):
            try:
                newton.factor(dbox, Wg, delta)
                break
            except (np.linalg.LinAlgError, sla.LinAlgError):
                delta *= 100.0
        else:
            raise NumericalError("Newton system could not be factorized")
        XA = newton.solve(A.T) if A.shape[0] else np.zeros((m, 0))
        SA = A @ XA

        def direction(rcg, rcl, rcu):
            tg = Wg * rg - rcg / sg
            tl = Wl * rl - rcl / sl
            tu = Wu * ru - rcu / su
            rhs = -rd - (G.T @ tg - scatter(tl, il) + scatter(tu, iu))
            xr = newton.solve(rhs)
            if A.shape[0]:
                dy = np.linalg.solve(SA, A @ xr + rp)
                dz = xr - XA @ dy
            else:
                dy = np.zeros(0)
                dz = xr
            dsg = -rg - G @ dz
            dsl = -rl + dz[il]
            dsu = -ru - dz[iu]
            dlg = Wg * (G @ dz + rg) - rcg / sg
            dll = Wl * (-dz[il] + rl) - rcl / sl
            dlu = Wu * (dz[iu] + ru) - rcu / su
            return dz, dy, (dsg, dsl, dsu), (dlg, dll, dlu)

        s_all = np.concatenate([sg, sl, su])
        l_all = np.concatenate([lg, ll, lu])
        mu = gap / max(n_comp, 1)

        # predictor
        dz, dy, ds, dl = direction(sg * lg, sl * ll, su * lu)
        ds_all = np.concatenate(ds)
        dl_all = np.concatenate(dl)
        a_aff = min(1.0, _max_step(s_all, ds_all), _max_step(l_all, dl_all))
        mu_aff = float((s_all + a_aff * ds_all) @ (l_all + a_aff * dl_all)) / max(n_comp, 1)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        cross = ds_all * dl_all - sigma * mu
        ng, nl = sg.size, sl.size
        rc = s_all * l_all + cross
        dz, dy, ds, dl = direction(rc[:ng], rc[ng:ng + nl], rc[ng + nl:])
        ds_all = np.concatenate(ds)
        dl_all = np.concatenate(dl)
        alpha = min(1.0, STEP_FRACTION * _max_step(s_all, ds_all), STEP_FRACTION * _max_step(l_all, dl_all))

        z = z + alpha * dz
        y = y + alpha * dy
        sg, sl, su = sg + alpha * ds[0], sl + alpha * ds[1], su + alpha * ds[2]
        lg, ll, lu = lg + alpha * dl[0], ll + alpha * dl[1], lu + alpha * dl[2]

    if status is QpStatus.MAX_ITER and best is not None and best_merit < max(residuals.values()):
        z, y, sg, sl, su, lg, ll, lu, residuals = best
    return QpSolution(
        z=z,
        objective=problem.objective(z),
        kkt_residuals=residuals,
        iterations=it,
        status=status,
        y_eq=y,
        lam_ineq=lg,
        lam_lower=scatter(ll, il),
        lam_upper=scatter(lu, iu),
        history=tuple(history),
    )


def verify_kkt(problem, solution, tol=1e-6):
    """Recompute the four KKT residual groups directly from ``z`` and the multipliers."""
    z = np.asarray(solution.z, dtype=float)
    Q, q = problem.Q, problem.q
    G, h = problem.A_ineq, problem.b_ineq
    A, b = problem.A_eq, problem.b_eq
    lb, ub = problem.lower, problem.upper
    y = np.asarray(solution.y_eq, dtype=float)
    lg = np.asarray(solution.lam_ineq, dtype=float)
    ll = np.asarray(solution.lam_lower, dtype=float)
    lu = np.asarray(solution.lam_upper, dtype=float)
    fin_l = np.isfinite(lb)
    fin_u = np.isfinite(ub)

    Qz = Q @ z
    grad = Qz + q + A.T @ y + G.T @ lg - ll + lu
    stationarity = np.abs(grad).max(initial=0.0) / (1.0 + max(np.abs(q).max(initial=0.0), np.abs(Qz).max(initial=0.0)))

    viol = [np.abs(A @ z - b), np.maximum(G @ z - h, 0.0),
            np.maximum(lb[fin_l] - z[fin_l], 0.0), np.maximum(z[fin_u] - ub[fin_u], 0.0)]
    rhs = np.concatenate([b, h, lb[fin_l], ub[fin_u]])
    scale = 1.0 + max(np.abs(rhs).max(initial=0.0), np.abs(z).max(initial=0.0))
    primal = max(v.max(initial=0.0) for v in viol) / scale

    # multipliers must be nonnegative and vanish on absent bounds
    dual = max(
        max(-lg.min(initial=0.0), 0.0),
        max(-ll.min(initial=0.0), 0.0),
        max(-lu.min(initial=0.0), 0.0),
        np.abs(ll[~fin_l]).max(initial=0.0),
        np.abs(lu[~fin_u]).max(initial=0.0),
    ) / (1.0 + np.abs(q).max(initial=0.0))

    obj = 0.5 * z @ Qz + q @ z
    comp_sum = (
        np.abs(lg * (h - G @ z)).sum()
        + np.abs(ll[fin_l] * (z[fin_l] - lb[fin_l])).sum()
        + np.abs(lu[fin_u] * (ub[fin_u] - z[fin_u])).sum()
    )
    complementarity = comp_sum / max(abs(obj), tol)

    residuals = {
        "stationarity": float(stationarity),
        "primal_feasibility": float(primal),
        "dual_feasibility": float(dual),
        "complementarity": float(complementarity),
    }
    passed = {k: bool(v <= tol) for k, v in residuals.items()}
    return KktReport(residuals, passed, tol)
