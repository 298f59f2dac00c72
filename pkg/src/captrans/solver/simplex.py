"""Bounded-variable revised primal simplex.

Every row gets a slack so that the working problem is ``[A I] x = b`` with
``l <= x <= u``.  Nonbasic variables sit at a finite bound (or at zero when
free).  Phase 1 minimises the sum of bound violations of the basic variables,
so the method can be restarted from any basis, which is how branch-and-bound
warm-starts child nodes from their parent's basis.

The basis inverse is kept as a sparse LU factorisation (SuperLU) followed by
a product-form eta file; the basis is refactorised every ``refactor_every``
pivots.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.linalg as sla
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
NUMERICAL = "numerical-failure"


class NumericalFailure(RuntimeError):
    pass


@dataclass
class Basis:
    """Warm-start information: basic column indices and nonbasics at upper bound."""

    basic: np.ndarray
    at_upper: np.ndarray


@dataclass
class LPResult:
    status: str
    value: float = np.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    basis: Basis | None = None
    iterations: int = 0
    infeasibility: float = 0.0
    # phase-1 multipliers proving infeasibility (row space, unscaled)
    certificate: np.ndarray | None = None
    ray: np.ndarray | None = None


def _pow2(v: np.ndarray) -> np.ndarray:
    return np.exp2(np.round(np.log2(v)))


def equilibrate(A: sp.csr_matrix, passes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-mean row/column scale factors (powers of two)."""
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    absA = abs(A).tocsr()
    if absA.nnz == 0:
        return r, s
    for _ in range(passes):
        B = sp.diags(r) @ absA @ sp.diags(s)
        B = B.tocsr()
        rmax = B.max(axis=1).toarray().ravel()
        rmin = _rowmin_nonzero(B)
        ok = rmax > 0
        r[ok] /= np.sqrt(rmax[ok] * rmin[ok])
        B = (sp.diags(r) @ absA @ sp.diags(s)).tocsc()
        cmax = B.max(axis=0).toarray().ravel()
        cmin = _rowmin_nonzero(B.T.tocsr())
        ok = cmax > 0
        s[ok] /= np.sqrt(cmax[ok] * cmin[ok])
    return _pow2(r), _pow2(s)


def _rowmin_nonzero(B: sp.csr_matrix) -> np.ndarray:
    out = np.ones(B.shape[0])
    data = B.data
    indptr = B.indptr
    nonempty = np.diff(indptr) > 0
    if data.size:
        mins = np.minimum.reduceat(data, indptr[:-1][nonempty])
        out[nonempty] = mins
    return out


class BoundedSimplex:
    """Reusable simplex engine for one constraint matrix.

    Bounds of the structural variables may change between calls to
    :meth:`solve`; rows, costs and right-hand sides are fixed.
    """

    def __init__(self, A, sense, rhs, c, lb, ub, *, scale: bool = True, refactor_every: int = 100,
                 feas_tol: float = 1e-9, opt_tol: float = 1e-9, pivot_tol: float = 1e-7,
                 max_iter: int | None = None):
        A = sp.csr_matrix(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        sense = np.asarray(sense)
        if scale and A.nnz:
            self.row_scale, self.col_scale = equilibrate(A)
        else:
            self.row_scale, self.col_scale = np.ones(m), np.ones(n)
        R, S = self.row_scale, self.col_scale
        As = (sp.diags(R) @ A @ sp.diags(S)).tocsc()
        self.A = sp.hstack([As, sp.identity(m, format="csc")], format="csc")
        self.AT = self.A.T.tocsr()
        self.b = np.asarray(rhs, dtype=float) * R
        self.cost = np.concatenate([np.asarray(c, dtype=float) * S, np.zeros(m)])
        slack_lb = np.where(sense == ">", -np.inf, 0.0)
        slack_ub = np.where(sense == "<", np.inf, 0.0)
        self.slack_lb, self.slack_ub = slack_lb, slack_ub
        self.lb0 = np.asarray(lb, dtype=float)
        self.ub0 = np.asarray(ub, dtype=float)
        self.refactor_every = refactor_every
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.pivot_tol = pivot_tol
        self.max_iter = max_iter or max(10000, 50 * (m + n))
        self.total_iterations = 0

    # ------------------------------------------------------------ helpers

    def _bounds(self, lb, ub):
        S = self.col_scale
        lb = self.lb0 if lb is None else np.asarray(lb, dtype=float)
        ub = self.ub0 if ub is None else np.asarray(ub, dtype=float)
        return (np.concatenate([lb / S, self.slack_lb]), np.concatenate([ub / S, self.slack_ub]))

    def _factor(self, repair: bool = True):
        B = self.A[:, self.basic]
        try:
            lu = spla.splu(B.tocsc(), permc_spec="COLAMD", diag_pivot_thresh=0.1)
        except RuntimeError as exc:
            if not repair:
                raise NumericalFailure(f"singular basis: {exc}") from exc
            self._repair()
            return self._factor(repair=False)
        self.lu = lu
        self.etas: list[tuple[int, np.ndarray]] = []

    def _repair(self):
        """Swap dependent basic columns for slacks so the basis is nonsingular again."""
        m, n = self.m, self.n
        B = self.A[:, self.basic].toarray()
        _, R, piv = sla.qr(B, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > 1e-9 * max(diag[0], 1.0))) if m else 0
        keep = self.basic[piv[:rank]]
        Q, _ = np.linalg.qr(B[:, piv[:rank]], mode="complete") if rank else (np.eye(m), None)
        _, _, rows = sla.qr(Q[:, rank:].T, mode="economic", pivoting=True)
        slacks = n + rows[: m - rank]
        dropped = self.basic[piv[rank:]]
        log.debug("basis repair: %d dependent columns replaced", dropped.size)
        self.basic = np.concatenate([keep, slacks])
        self.is_basic[:] = False
        self.is_basic[self.basic] = True
        # dropped columns become nonbasic at a finite bound
        l, u = self.l, self.u
        for j in dropped:
            if not self.is_basic[j]:
                self.x[j] = l[j] if np.isfinite(l[j]) else (u[j] if np.isfinite(u[j]) else 0.0)

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for r, alpha in self.etas:
            wr = w[r] / alpha[r]
            w -= wr * alpha
            w[r] = wr
        return w

    def _btran(self, v: np.ndarray) -> np.ndarray:
        w = v.copy()
        for r, alpha in reversed(self.etas):
            wr = w[r]
            w[r] = (wr - (alpha @ w - alpha[r] * wr)) / alpha[r]
        return self.lu.solve(w, trans="T")

    def _column(self, j: int) -> np.ndarray:
        A = self.A
        v = np.zeros(self.m)
        lo, hi = A.indptr[j], A.indptr[j + 1]
        v[A.indices[lo:hi]] = A.data[lo:hi]
        return v

    def _recompute_basics(self):
        xn = self.x.copy()
        xn[self.basic] = 0.0
        self.x[self.basic] = self._ftran(self.b - self.A @ xn)

    def _set_nonbasic_values(self, at_upper):
        l, u = self.l, self.u
        x = np.where(np.isfinite(l), l, np.where(np.isfinite(u), u, 0.0))
        up = at_upper & np.isfinite(u)
        x[up] = u[up]
        self.x = x

    # --------------------------------------------------------------- solve

    def solve(self, lb=None, ub=None, basis: Basis | None = None, max_iter: int | None = None,
              deadline: float | None = None) -> LPResult:
        """Solve under the given structural bounds, optionally warm-started from ``basis``.

        ``deadline`` is a ``time.perf_counter`` value after which the solve
        stops with an iteration-limit status.
        """
        self.l, self.u = self._bounds(lb, ub)
        m, n = self.m, self.n
        if np.any(self.l > self.u + self.feas_tol):
            return LPResult(INFEASIBLE, infeasibility=float(np.max(self.l - self.u)))
        for attempt in range(3):
            if basis is not None and attempt == 0:
                self.basic = np.asarray(basis.basic, dtype=int).copy()
                at_upper = np.asarray(basis.at_upper, dtype=bool)
            else:
                self.basic = np.arange(n, n + m)
                at_upper = np.zeros(n + m, dtype=bool)
            self.is_basic = np.zeros(n + m, dtype=bool)
            self.is_basic[self.basic] = True
            self._set_nonbasic_values(at_upper)
            try:
                self._factor()
                return self._iterate(max_iter or self.max_iter, deadline)
            except NumericalFailure as exc:
                log.debug("simplex restart after numerical trouble: %s", exc)
        return LPResult(NUMERICAL)

    def _iterate(self, max_iter: int, deadline: float | None = None) -> LPResult:
        m, n = self.m, self.n
        l, u = self.l, self.u
        cost = self.cost
        ftol, dtol, ptol = self.feas_tol, self.opt_tol, self.pivot_tol
        fixed = l == u
        free = ~np.isfinite(l) & ~np.isfinite(u)
        self._recompute_basics()
        it = 0
        degenerate_run = 0
        bland = False
        checks = 0
        while True:
            if it >= max_iter or (deadline is not None and it % 50 == 49 and time.perf_counter() > deadline):
                self.total_iterations += it
                return LPResult(ITERATION_LIMIT, iterations=it)
            basic = self.basic
            xb = self.x[basic]
            lb_, ub_ = l[basic], u[basic]
            below = xb < lb_ - ftol
            above = xb > ub_ + ftol
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = above.astype(float) - below.astype(float)
                y = self._btran(cb)
                d = -(self.AT @ y)
            else:
                y = self._btran(cost[basic])
                d = cost - self.AT @ y
            d[self.is_basic] = 0.0
            x = self.x
            at_l = x <= l  # nonbasic exactly at lower bound
            at_u = x >= u
            gain = np.zeros(n + m)
            cand_up = (~self.is_basic) & ~fixed & (d < -dtol) & (at_l | free)
            cand_dn = (~self.is_basic) & ~fixed & (d > dtol) & (at_u | free)
            gain[cand_up] = -d[cand_up]
            gain[cand_dn] = d[cand_dn]
            if not gain.any():
                # optimal for the current phase; verify on a fresh factorisation
                if self.etas and checks < 2:
                    checks += 1
                    self._factor()
                    self._recompute_basics()
                    continue
                self.total_iterations += it
                if phase1:
                    infeas = float(np.sum(np.maximum(lb_ - xb, 0)) + np.sum(np.maximum(xb - ub_, 0)))
                    return LPResult(INFEASIBLE, iterations=it, infeasibility=infeas,
                                    certificate=y * self.row_scale)
                return self._finish(y, it)
            if bland:
                j = int(np.flatnonzero(gain)[0])
            else:
                j = int(np.argmax(gain))
            sigma = 1.0 if d[j] < 0 else -1.0
            alpha = self._ftran(self._column(j))
            delta = -sigma * alpha
            # ratio test with Harris tolerances
            ratio = np.full(m, np.inf)
            relaxed = np.full(m, np.inf)
            dec = delta < -ptol
            inc = delta > ptol
            if phase1:
                lo_t = np.where(above, ub_, np.where(below, -np.inf, lb_))
                hi_t = np.where(below, lb_, np.where(above, np.inf, ub_))
            else:
                lo_t, hi_t = lb_, ub_
            mask = dec & np.isfinite(lo_t)
            ratio[mask] = (xb[mask] - lo_t[mask]) / -delta[mask]
            relaxed[mask] = (xb[mask] - lo_t[mask] + ftol) / -delta[mask]
            mask = inc & np.isfinite(hi_t)
            ratio[mask] = (hi_t[mask] - xb[mask]) / delta[mask]
            relaxed[mask] = (hi_t[mask] - xb[mask] + ftol) / delta[mask]
            span = u[j] - l[j]
            theta_max = relaxed.min() if m else np.inf
            if not np.isfinite(theta_max) and not np.isfinite(span):
                self.total_iterations += it
                if phase1:
                    raise NumericalFailure("unbounded phase-1 direction")
                ray = np.zeros(n + m)
                ray[j] = sigma
                ray[basic] = delta
                return LPResult(UNBOUNDED, iterations=it, ray=(ray[:n] * self.col_scale))
            if span <= theta_max:
                # bound flip
                theta = span
                self.x[basic] = xb + theta * delta
                self.x[j] = u[j] if sigma > 0 else l[j]
                it += 1
                degenerate_run = 0
                bland = False
                continue
            elig = np.flatnonzero(ratio <= theta_max)
            if bland:
                r = int(elig[np.argmin(basic[elig])])
            else:
                r = int(elig[np.argmax(np.abs(delta[elig]))])
            theta = max(ratio[r], 0.0)
            leaving = basic[r]
            self.x[basic] = xb + theta * delta
            self.x[j] += sigma * theta
            self.x[leaving] = lo_t[r] if delta[r] < 0 else hi_t[r]
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.basic[r] = j
            it += 1
            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 50:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            if abs(alpha[r]) < 1e-11:
                raise NumericalFailure("tiny pivot")
            self.etas.append((r, alpha))
            if len(self.etas) >= self.refactor_every:
                self._factor()
                self._recompute_basics()

    def _finish(self, y: np.ndarray, it: int) -> LPResult:
        n = self.n
        x_s = self.x[:n].copy()
        x = x_s * self.col_scale
        at_upper = (~self.is_basic) & (self.x >= self.u) & np.isfinite(self.u)
        basis = Basis(basic=self.basic.copy(), at_upper=at_upper)
        duals = y * self.row_scale
        return LPResult(OPTIMAL, value=float(self.cost[:n] @ x_s), x=x, duals=duals, basis=basis,
                        iterations=it)
