"""Exhaustive reference solver for small models.

Enumerates every assignment of the free binaries depth first, discards
partial assignments that already violate a row for all completions, and
solves the continuous remainder of each surviving leaf with HiGHS.  It
shares no code with the branch-and-bound path, so agreement between the two
is meaningful.
"""
from __future__ import annotations

import math
import time

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..model import MilpModel, decode
from .bnb import STATUS_INFEASIBLE, STATUS_OPTIMAL, MilpResult

MAX_BINARIES = 24


class OracleLimitError(ValueError):
    pass


def _leaf_lp(model: MilpModel, lb, ub):
    A = model.A.tocsr()
    le, ge, eq = (model.sense == s for s in "<>=")
    A_ub = sp.vstack([A[le], -A[ge]])
    b_ub = np.concatenate([model.rhs[le], -model.rhs[ge]])
    res = linprog(model.c, A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if A_ub.shape[0] else None,
                  A_eq=A[eq] if eq.any() else None, b_eq=model.rhs[eq] if eq.any() else None,
                  bounds=list(zip(lb, [None if math.isinf(u) else u for u in ub])), method="highs",
                  options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9})
    if res.status == 0:
        return float(res.fun) + model.offset, res.x
    if res.status in (2, 3):
        return None
    raise RuntimeError(f"leaf LP failed: {res.message}")


def brute_force_oracle(model: MilpModel, max_binaries: int = MAX_BINARIES,
                       tol: float = 1e-7) -> MilpResult:
    """Exact optimum by enumeration of binaries plus one LP per leaf.

    Binaries flagged as implied integer are left continuous at the leaves and
    only branched on if the leaf LP returns them fractional.
    """
    start = time.perf_counter()
    lb0 = model.lb.astype(float).copy()
    ub0 = model.ub.astype(float).copy()
    free = model.binary & (lb0 < ub0)
    enum = np.flatnonzero(free & ~model.implied_integer)
    if enum.size > max_binaries:
        raise OracleLimitError(f"{enum.size} binaries exceed the oracle limit of {max_binaries}")

    coo = model.A.tocoo()
    r, c, a = coo.row, coo.col, coo.data
    m = model.n_rows
    sense, rhs = model.sense, model.rhs

    def hopeless(lb, ub) -> bool:
        lo = np.bincount(r, weights=np.where(a > 0, a * lb[c], a * ub[c]), minlength=m)
        hi = np.bincount(r, weights=np.where(a > 0, a * ub[c], a * lb[c]), minlength=m)
        slack = tol * np.maximum(1.0, np.abs(rhs))
        bad_le = (sense != ">") & (lo > rhs + slack)
        bad_ge = (sense != "<") & (hi < rhs - slack)
        return bool(np.any(bad_le | bad_ge))

    best = [math.inf, None]
    leaves = [0]

    def leaf(lb, ub):
        leaves[0] += 1
        out = _leaf_lp(model, lb, ub)
        if out is None or out[0] >= best[0]:
            return
        value, x = out
        frac = np.flatnonzero(model.binary & (np.abs(x - np.round(x)) > 1e-6))
        if frac.size:
            j = frac[0]
            for v in (0.0, 1.0):
                l2, u2 = lb.copy(), ub.copy()
                l2[j] = u2[j] = v
                leaf(l2, u2)
            return
        best[0], best[1] = value, x

    def dive(depth, lb, ub):
        if hopeless(lb, ub):
            return
        if depth == enum.size:
            leaf(lb, ub)
            return
        j = enum[depth]
        for v in (0.0, 1.0):
            l2, u2 = lb.copy(), ub.copy()
            l2[j] = u2[j] = v
            dive(depth + 1, l2, u2)

    dive(0, lb0, ub0)
    elapsed = time.perf_counter() - start
    if best[1] is None:
        return MilpResult(status=STATUS_INFEASIBLE, nodes=leaves[0], wall_time=elapsed)
    x = best[1].copy()
    x[model.binary] = np.round(x[model.binary])
    plan = decode(model, x) if model.instance is not None and "X" in model.index else None
    return MilpResult(status=STATUS_OPTIMAL, objective=best[0], bound=best[0], gap=0.0, nodes=leaves[0],
                      wall_time=elapsed, x=x, plan=plan)
