"""LP relaxations and best-first branch-and-bound over binary variables."""
from __future__ import annotations

import dataclasses
import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..model import InfeasibleSolutionError, MilpModel, Plan, decode
from .propagate import Propagator
from .simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, Basis, BoundedSimplex, LPResult

log = logging.getLogger(__name__)

MOST_FRACTIONAL = "most-fractional"
PSEUDO_COST = "pseudo-cost"

# MilpResult.status values
STATUS_OPTIMAL = "optimal"
STATUS_GAP = "gap-limit"
STATUS_TIME = "time-limit"
STATUS_NODES = "node-limit"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
SOLVED = (STATUS_OPTIMAL, STATUS_GAP)


@dataclass
class SolverConfig:
    gap: float = 1e-4
    time_limit: float = 36000.0
    branching: str = MOST_FRACTIONAL
    node_limit: int | None = None
    seed: int = 0
    lp_engine: str = "simplex"  # or "highs"
    integrality_tol: float = 1e-6
    propagate: bool = True
    dive_every: int = 200  # run the diving heuristic at the root and every n nodes; 0 disables
    rens_nodes: int = 1000  # node budget of the root sub-search; 0 disables

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError("gap must be non-negative")
        if not self.time_limit > 0:
            raise ValueError("time limit must be positive")
        if self.dive_every < 0 or self.rens_nodes < 0:
            raise ValueError("heuristic settings must be non-negative")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node limit must be positive")
        if self.branching not in (MOST_FRACTIONAL, PSEUDO_COST):
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.lp_engine not in ("simplex", "highs"):
            raise ValueError(f"unknown LP engine {self.lp_engine!r}")


@dataclass
class MilpResult:
    status: str
    objective: float = math.inf
    bound: float = -math.inf
    gap: float = math.inf
    nodes: int = 0
    wall_time: float = 0.0
    x: np.ndarray | None = None
    plan: Plan | None = None
    bound_trace: list[float] = field(default_factory=list)
    incumbent_trace: list[float] = field(default_factory=list)
    lp_iterations: int = 0

    @property
    def solved(self) -> bool:
        return self.status in SOLVED


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    if not math.isfinite(bound):
        return math.inf
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1e-10)


class LPEngine:
    """Solves the LP relaxation of a model under varying variable bounds."""

    def __init__(self, model: MilpModel, engine: str = "simplex"):
        self.model = model
        self.kind = engine
        if engine == "simplex":
            self.simplex = BoundedSimplex(model.A, model.sense, model.rhs, model.c, model.lb, model.ub)

    def solve(self, lb=None, ub=None, basis: Basis | None = None, deadline: float | None = None) -> LPResult:
        if self.kind == "simplex":
            res = self.simplex.solve(lb, ub, basis=basis, deadline=deadline)
        else:
            res = highs_lp(self.model, lb, ub)
        if res.status == OPTIMAL:
            res.value += self.model.offset
        return res


def highs_lp(model: MilpModel, lb=None, ub=None) -> LPResult:
    """LP relaxation through SciPy's HiGHS interface."""
    from scipy.optimize import linprog

    lb = model.lb if lb is None else lb
    ub = model.ub if ub is None else ub
    A = model.A.tocsr()
    le = model.sense == "<"
    ge = model.sense == ">"
    eq = model.sense == "="
    import scipy.sparse as sp

    A_ub = sp.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([model.rhs[le], -model.rhs[ge]]) if A_ub is not None else None
    res = linprog(model.c, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq] if eq.any() else None,
                  b_eq=model.rhs[eq] if eq.any() else None,
                  bounds=np.column_stack([lb, np.where(np.isinf(ub), None, ub)]),
                  method="highs", options={"primal_feasibility_tolerance": 1e-9,
                                           "dual_feasibility_tolerance": 1e-9})
    if res.status == 0:
        return LPResult(OPTIMAL, value=float(res.fun), x=res.x, iterations=int(res.nit))
    if res.status == 2:
        return LPResult(INFEASIBLE)
    if res.status == 3:
        return LPResult(UNBOUNDED)
    return LPResult("numerical-failure")


def solve_lp(model: MilpModel, engine: str = "simplex") -> LPResult:
    """Solve the LP relaxation of ``model`` (integrality dropped)."""
    return LPEngine(model, engine).solve()


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    fixings: tuple = field(compare=False)
    basis: Basis | None = field(compare=False, default=None)
    depth: int = field(compare=False, default=0)


class BranchAndBound:
    def __init__(self, model: MilpModel, config: SolverConfig | None = None):
        self.model = model
        self.config = config or SolverConfig()
        self.bin_idx = np.flatnonzero(model.binary)
        self.lp = LPEngine(model, self.config.lp_engine)
        self.propagator = Propagator(model.A, model.sense, model.rhs, model.binary)
        self.pc_sum = np.zeros((2, model.n_vars))
        self.pc_cnt = np.zeros((2, model.n_vars))

    # ------------------------------------------------------------------ run

    def run(self) -> MilpResult:
        cfg = self.config
        model = self.model
        start = time.perf_counter()
        lb0 = model.lb.copy()
        ub0 = model.ub.copy()
        lb0[model.binary] = np.ceil(lb0[model.binary] - 1e-9)
        ub0[model.binary] = np.floor(ub0[model.binary] + 1e-9)
        result = MilpResult(status=STATUS_INFEASIBLE)
        if np.any(lb0 > ub0) or (cfg.propagate and not self.propagator.run(lb0, ub0)):
            result.wall_time = time.perf_counter() - start
            return result
        self.lb0, self.ub0 = lb0, ub0

        inc_val = math.inf
        inc_x = None
        pruned_min = math.inf  # smallest bound among nodes discarded by the gap test
        heap: list[_Node] = []
        stack: list[_Node] = [_Node(-math.inf, 0, ())]  # depth-first until the first incumbent
        seq = 0
        nodes = 0
        lp_its = 0
        bound_trace, inc_trace = [], []
        status = None
        deadline = start + cfg.time_limit

        def cutoff(val):
            if not math.isfinite(inc_val):
                return False
            return val >= inc_val - cfg.gap * max(abs(inc_val), 1e-10) - 1e-12 * max(1.0, abs(inc_val))

        def global_bound():
            cands = [inc_val, pruned_min]
            if heap:
                cands.append(heap[0].bound)
            if stack:
                cands.append(min(n.bound for n in stack))
            return min(cands)

        def record():
            self._trace(bound_trace, inc_trace, global_bound(), inc_val)

        while stack or heap:
            if time.perf_counter() > deadline:
                status = STATUS_TIME
                break
            if cfg.node_limit is not None and nodes >= cfg.node_limit:
                status = STATUS_NODES
                break
            if stack:
                node = stack.pop()
            else:
                node = heapq.heappop(heap)
            if cutoff(node.bound):
                pruned_min = min(pruned_min, node.bound)
                continue
            nodes += 1
            lb, ub = self._bounds(node.fixings)
            if cfg.propagate and node.fixings and not self.propagator.run(lb, ub):
                record()
                continue
            res = self.lp.solve(lb, ub, basis=node.basis, deadline=deadline)
            lp_its += res.iterations
            if res.status == UNBOUNDED:
                if not node.fixings:
                    result.status = STATUS_UNBOUNDED
                    result.nodes = nodes
                    result.wall_time = time.perf_counter() - start
                    return result
                continue
            if res.status != OPTIMAL:
                if res.status == ITERATION_LIMIT and time.perf_counter() > deadline:
                    # unfinished node goes back so the bound stays valid
                    heapq.heappush(heap, node)
                    status = STATUS_TIME
                    break
                if res.status != INFEASIBLE:
                    log.warning("node %d: LP status %s, node dropped", nodes, res.status)
                record()
                continue
            value = max(res.value, node.bound)
            if node.depth > 0:
                self._update_pseudocosts(node, res.value)
            if cutoff(value):
                pruned_min = min(pruned_min, value)
                record()
                continue
            x = res.x
            frac = np.abs(x[self.bin_idx] - np.round(x[self.bin_idx]))
            fractional = self.bin_idx[frac > cfg.integrality_tol]
            if fractional.size == 0:
                polished = self._polish(x, res.basis, deadline)
                if polished is not None and polished[0] < inc_val:
                    inc_val, inc_x = polished
                    log.debug("node %d: incumbent %.10g", nodes, inc_val)
                    for n in stack:
                        heapq.heappush(heap, n)
                    stack.clear()
                record()
                if relative_gap(inc_val, global_bound()) <= cfg.gap:
                    break
                continue
            heuristic = []
            if nodes == 1 and cfg.rens_nodes:
                heuristic.append(lambda: self._rens(lb, ub, x, deadline))
            if cfg.dive_every and (nodes == 1 or nodes % cfg.dive_every == 0):
                heuristic.append(lambda: self._dive(lb, ub, x, res.basis, inc_val, deadline))
            for h in heuristic:
                found = h()
                if found is not None and found[0] < inc_val:
                    inc_val, inc_x = found
                    log.debug("node %d: heuristic incumbent %.10g", nodes, inc_val)
                    for n in stack:
                        heapq.heappush(heap, n)
                    stack.clear()
            if heuristic and cutoff(value):
                pruned_min = min(pruned_min, value)
                record()
                if relative_gap(inc_val, global_bound()) <= cfg.gap:
                    break
                continue
            j = self._select(x, fractional, lb, ub)
            f = x[j] - math.floor(x[j])
            down = _Node(value, seq + 1, node.fixings + ((j, 0.0),), res.basis, node.depth + 1)
            up = _Node(value, seq + 2, node.fixings + ((j, 1.0),), res.basis, node.depth + 1)
            seq += 2
            down.parent_value = up.parent_value = res.value
            down.frac = f
            up.frac = 1.0 - f
            first, second = (up, down) if f >= 0.5 else (down, up)
            if inc_x is None:
                stack.append(second)
                stack.append(first)
            else:
                heapq.heappush(heap, first)
                heapq.heappush(heap, second)
            record()

        bound = global_bound()
        result.nodes = nodes
        result.lp_iterations = lp_its
        result.bound_trace = bound_trace
        result.incumbent_trace = inc_trace
        result.wall_time = time.perf_counter() - start
        if inc_x is None:
            result.status = status or STATUS_INFEASIBLE
            result.bound = bound if status else math.inf
            return result
        gap = relative_gap(inc_val, bound)
        if status is None:
            status = STATUS_OPTIMAL if gap <= 1e-9 else STATUS_GAP
        result.status = status
        result.objective = inc_val
        result.bound = min(bound, inc_val)
        result.gap = gap
        result.x = inc_x
        if model.instance is not None and "X" in model.index:
            result.plan = decode(model, inc_x)
        return result

    # -------------------------------------------------------------- helpers

    def _bounds(self, fixings):
        lb, ub = self.lb0.copy(), self.ub0.copy()
        for j, v in fixings:
            lb[j] = ub[j] = v
        return lb, ub

    def _select(self, x, fractional, lb, ub) -> int:
        f = x[fractional] - np.floor(x[fractional])
        score = np.minimum(f, 1.0 - f)
        if self.config.branching == PSEUDO_COST:
            cnt = self.pc_cnt[:, fractional]
            reliable = (cnt > 0).all(axis=0)
            if reliable.any():
                avg = self.pc_sum[:, fractional] / np.maximum(cnt, 1)
                ps = np.maximum(avg[0] * f, 1e-6) * np.maximum(avg[1] * (1 - f), 1e-6)
                ps[~reliable] = -1.0
                return int(fractional[int(np.argmax(ps))])
        best = score.max()
        # ties go to the lowest index (fractional is sorted)
        return int(fractional[int(np.flatnonzero(score >= best - 1e-12)[0])])

    def _update_pseudocosts(self, node, value):
        j, v = node.fixings[-1]
        parent = getattr(node, "parent_value", None)
        frac = getattr(node, "frac", None)
        if parent is None or not frac:
            return
        side = int(v > 0.5)
        self.pc_sum[side, j] += max(value - parent, 0.0) / frac
        self.pc_cnt[side, j] += 1

    def _rens(self, lb, ub, x, deadline):
        """Sub-search with every binary that is integral in ``x`` fixed to its value."""
        cfg = self.config
        xb = x[self.bin_idx]
        integral = np.abs(xb - np.round(xb)) <= cfg.integrality_tol
        if integral.all() or not integral.any():
            return None
        lb, ub = lb.copy(), ub.copy()
        fix = self.bin_idx[integral]
        lb[fix] = ub[fix] = np.round(x[fix])
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            return None
        sub_cfg = dataclasses.replace(cfg, rens_nodes=0, node_limit=cfg.rens_nodes, time_limit=remaining)
        sub = dataclasses.replace(self.model, lb=lb, ub=ub, instance=None)
        res = BranchAndBound(sub, sub_cfg).run()
        if res.x is None:
            return None
        try:
            self.model.check_feasible(res.x)
        except InfeasibleSolutionError:
            return None
        return self.model.objective(res.x), res.x

    def _dive(self, lb, ub, x, basis, incumbent, deadline):
        """Fractional diving: round the least fractional binary, propagate, re-solve.

        On failure the opposite value is tried once before giving up.  The
        search tree is left untouched.
        """
        cfg = self.config
        lb, ub = lb.copy(), ub.copy()
        limit = incumbent - 1e-9 * max(1.0, abs(incumbent)) if math.isfinite(incumbent) else math.inf
        for _ in range(self.bin_idx.size + 1):
            if time.perf_counter() > deadline:
                return None
            xb = x[self.bin_idx]
            f = np.abs(xb - np.round(xb))
            frac = f > cfg.integrality_tol
            if not frac.any():
                return self._polish(x, basis, deadline)
            cand = self.bin_idx[frac]
            j = int(cand[int(np.argmin(f[frac]))])
            v = float(np.round(x[j]))
            for val in (v, 1.0 - v):
                l2, u2 = lb.copy(), ub.copy()
                l2[j] = u2[j] = val
                if cfg.propagate and not self.propagator.run(l2, u2):
                    continue
                res = self.lp.solve(l2, u2, basis=basis, deadline=deadline)
                if res.status == OPTIMAL and res.value < limit:
                    lb, ub, x, basis = l2, u2, res.x, res.basis
                    break
            else:
                return None
        return None

    def _polish(self, x, basis, deadline=None):
        """Fix binaries to their rounded values, re-solve, and verify every row."""
        model = self.model
        lb, ub = self.lb0.copy(), self.ub0.copy()
        rounded = np.round(x[self.bin_idx])
        lb[self.bin_idx] = ub[self.bin_idx] = rounded
        res = self.lp.solve(lb, ub, basis=basis, deadline=deadline)
        if res.status != OPTIMAL:
            return None
        xx = res.x.copy()
        xx[self.bin_idx] = rounded
        xx = np.clip(xx, model.lb, model.ub)
        try:
            model.check_feasible(xx)
        except InfeasibleSolutionError as exc:
            log.debug("rounded LP point rejected: %s", exc)
            return None
        return model.objective(xx), xx

    @staticmethod
    def _trace(bound_trace, inc_trace, bound, inc):
        if bound_trace and bound < bound_trace[-1]:
            bound = bound_trace[-1]
        bound_trace.append(bound)
        inc_trace.append(inc)


def solve_milp(model: MilpModel, config: SolverConfig | None = None) -> MilpResult:
    """Best-first branch-and-bound (with an initial depth-first dive)."""
    return BranchAndBound(model, config).run()
