"""MILP formulation of strategic capacity planning with and without carbon taxes.

``build`` turns an :class:`~captrans.instance.Instance` into a sparse
:class:`MilpModel`; ``decode`` maps a solution vector back to a :class:`Plan`.
Every row carries a family tag ("continuity", "capacity", "demand", ...)
so violations can be reported by the constraint they break.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from . import statespace as ss
from .instance import Instance

SPT = "SPT"
SPWT = "SPWT"
VARIANTS = (SPT, SPWT)

INT_TOL = 1e-6
FEAS_TOL = 1e-6

# objective breakdown reported on a Plan
COST_TERMS = ("investment", "production", "maintenance", "labor", "hiring_firing",
              "shifts", "holding", "tax", "salvage")


class InfeasibleSolutionError(ValueError):
    def __init__(self, message: str, row: str | None = None, family: str | None = None,
                 violation: float = 0.0):
        super().__init__(message)
        self.row = row
        self.family = family
        self.violation = violation


@dataclass(eq=False)
class MilpModel:
    """Minimise ``c @ x + offset`` s.t. ``A x (sense) rhs``, ``lb <= x <= ub``.

    ``sense`` holds one of ``"<"``, ``">"``, ``"="`` per row.  ``binary``
    marks 0/1 variables; all other variables are continuous.
    """

    names: list[str]
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    row_names: list[str]
    row_family: list[str]
    offset: float = 0.0
    # binaries that come out integral in any LP optimum once the others are fixed
    implied_integer: np.ndarray | None = None
    # symbol -> index array (-1 where the variable does not exist)
    index: dict[str, np.ndarray] = field(default_factory=dict)
    bound_family: dict[str, str] = field(default_factory=dict)
    cost_terms: dict[str, np.ndarray] = field(default_factory=dict)
    variant: str | None = None
    instance: Instance | None = None
    demand_scale: float = 1.0

    def __post_init__(self):
        n = len(self.names)
        if self.implied_integer is None:
            self.implied_integer = np.zeros(n, dtype=bool)
        self._position = {name: j for j, name in enumerate(self.names)}

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_binaries(self) -> int:
        return int(self.binary.sum())

    def position(self, name: str) -> int:
        return self._position[name]

    def symbol_of(self, j: int) -> str:
        return self.names[j].split("_", 1)[0]

    def rows_of_family(self, family: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.row_family) == family)

    def relaxed(self) -> "MilpModel":
        """Same model with every variable continuous."""
        out = MilpModel(self.names, self.lb, self.ub, np.zeros(self.n_vars, dtype=bool), self.c,
                        self.A, self.sense, self.rhs, self.row_names, self.row_family, self.offset,
                        index=self.index, bound_family=self.bound_family, cost_terms=self.cost_terms,
                        variant=self.variant, instance=self.instance, demand_scale=self.demand_scale)
        return out

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.offset)

    def violations(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-row and per-variable violation magnitudes (0 where satisfied)."""
        act = self.A @ x
        d = act - self.rhs
        row = np.where(self.sense == "<", np.maximum(d, 0.0),
                       np.where(self.sense == ">", np.maximum(-d, 0.0), np.abs(d)))
        bnd = np.maximum(np.maximum(self.lb - x, x - self.ub), 0.0)
        return row, bnd

    def check_feasible(self, x: np.ndarray, tol: float = FEAS_TOL, int_tol: float = INT_TOL) -> None:
        """Raise :class:`InfeasibleSolutionError` naming the worst violation."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            raise InfeasibleSolutionError(f"solution has {x.size} values, model has {self.n_vars} variables")
        if not np.all(np.isfinite(x)):
            raise InfeasibleSolutionError("solution contains non-finite values")
        frac = np.abs(x - np.round(x)) * self.binary
        if frac.size and frac.max() > int_tol:
            j = int(np.argmax(frac))
            raise InfeasibleSolutionError(
                f"binary variable {self.names[j]} = {x[j]!r} is not integral", row=self.names[j],
                family="integrality", violation=float(frac[j]))
        row, bnd = self.violations(x)
        worst_row = int(np.argmax(row)) if row.size else -1
        worst_bnd = int(np.argmax(bnd)) if bnd.size else -1
        r = row[worst_row] if worst_row >= 0 else 0.0
        b = bnd[worst_bnd] if worst_bnd >= 0 else 0.0
        if max(r, b) <= tol:
            return
        if r >= b:
            fam = self.row_family[worst_row]
            raise InfeasibleSolutionError(
                f"row {self.row_names[worst_row]} ({fam}) violated by {r:.3g}",
                row=self.row_names[worst_row], family=fam, violation=float(r))
        name = self.names[worst_bnd]
        fam = self.bound_family.get(self.symbol_of(worst_bnd), "bounds")
        raise InfeasibleSolutionError(f"bound of {name} ({fam}) violated by {b:.3g}",
                                      row=name, family=fam, violation=float(b))


class ModelBuilder:
    """Incremental construction of a :class:`MilpModel`."""

    def __init__(self):
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.binary: list[bool] = []
        self.c: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self.row_family: list[str] = []

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf, binary: bool = False,
                obj: float = 0.0) -> int:
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.binary.append(binary)
        self.c.append(obj)
        return len(self.names) - 1

    def add_row(self, coefs: Mapping[int, float] | list[tuple[int, float]], sense: str, rhs: float,
                name: str, family: str = "") -> int:
        if sense not in ("<", ">", "="):
            raise ValueError(f"bad sense {sense!r}")
        i = len(self.rhs)
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        for j, v in items:
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(j)
                self._vals.append(float(v))
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name)
        self.row_family.append(family)
        return i

    def model(self, **extra) -> MilpModel:
        n, m = len(self.names), len(self.rhs)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        A.sum_duplicates()
        return MilpModel(
            names=list(self.names), lb=np.array(self.lb, dtype=float), ub=np.array(self.ub, dtype=float),
            binary=np.array(self.binary, dtype=bool), c=np.array(self.c, dtype=float), A=A,
            sense=np.array(self.sense, dtype="<U1"), rhs=np.array(self.rhs, dtype=float),
            row_names=list(self.row_names), row_family=list(self.row_family), **extra)


# --------------------------------------------------------------------- build


def build(instance: Instance, variant: str = SPT, demand_scale: float = 1000.0) -> MilpModel:
    """Assemble the SPT (with carbon tax) or SPWT (without) model.

    Production and inventory variables are expressed in units of
    ``demand_scale`` items to keep coefficients well conditioned.
    """
    variant = variant.upper()
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    inst = instance
    K, I, T = len(inst.machines), len(inst.items), inst.n_periods
    S = ss.N_STATES
    opts = inst.options
    costs = inst.costs
    rates = inst.rates
    eps = inst.emissions
    demand = inst.demand
    scale = float(demand_scale)
    W = inst.maintenance_counts if opts.maintenance else [0] * K
    Wmax = max(W, default=0)

    allowed_z = {1} if opts.single_shift else set(inst.horizon.allowed_shifts)
    machine_states = allowed_z | {0}
    s0 = inst.horizon.initial_shifts

    mb = ModelBuilder()
    n_terms: dict[str, dict[int, float]] = {t: {} for t in COST_TERMS}

    def var(name, term_costs: Mapping[str, float] | None = None, **kw):
        obj = 0.0
        j = mb.add_var(name, **kw)
        for term, val in (term_costs or {}).items():
            if val:
                n_terms[term][j] = n_terms[term].get(j, 0.0) + val
                obj += val
        mb.c[j] = obj
        return j

    X = -np.ones((K, S * S, T), dtype=int)
    for k, m in enumerate(inst.machines):
        for t in range(T):
            for e in ss.TRANSITIONS:
                h, tl = ss.head(e), ss.tail(e)
                ub = 1.0
                if h not in machine_states or tl not in machine_states:
                    ub = 0.0
                if t == 0:
                    if m.is_candidate and e not in ss.E0 + ss.E1:
                        ub = 0.0
                    if not m.is_candidate and (e not in ss.E2 + ss.E3 or tl != m.initial_state):
                        ub = 0.0
                terms = {
                    "investment": costs.investment[k, t] if e in ss.E1 else 0.0,
                    "labor": h * costs.labor[k, t] * m.workers,
                    "hiring_firing": (ss.shifts_opened(e) * costs.hiring[k, t]
                                      + ss.shifts_closed(e) * costs.firing[k, t]) * m.workers,
                }
                X[k, e, t] = var(f"X_k{k + 1}_e{e}_t{t + 1}", terms, ub=ub, binary=True)

    Z = -np.ones((S, T), dtype=int)
    O = -np.ones((S, T), dtype=int)
    C = -np.ones((S, T), dtype=int)
    for t in range(T):
        for s in range(S):
            lb, ub = 0.0, (1.0 if s in allowed_z else 0.0)
            if opts.single_shift and s == 1:
                lb = 1.0
            Z[s, t] = var(f"Z_s{s}_t{t + 1}", lb=lb, ub=ub, binary=True)
        for s in range(S):
            O[s, t] = var(f"O_s{s}_t{t + 1}", {"shifts": costs.shift_open[s, t]}, binary=True)
        for s in range(S):
            C[s, t] = var(f"C_s{s}_t{t + 1}", {"shifts": costs.shift_close[s, t]}, binary=True)

    tax = costs.tax if variant == SPT else np.zeros(T)
    Y = -np.ones((I, K, T), dtype=int)
    for k in range(K):
        for t in range(T):
            for i in range(I):
                if rates[i, k] > 0:
                    Y[i, k, t] = var(f"Y_i{i + 1}_k{k + 1}_t{t + 1}", {
                        "production": costs.production[i, k, t] * scale,
                        "tax": tax[t] * eps[i, k] * scale,
                    })
    INV = -np.ones((I, T), dtype=int)
    for t in range(T):
        for i, it in enumerate(inst.items):
            INV[i, t] = var(f"I_i{i + 1}_t{t + 1}", {
                "holding": costs.holding[i, t] * scale,
                "tax": tax[t] * it.holding_emission * scale,
            })

    M = -np.ones((K, Wmax, T), dtype=int)
    TM = -np.ones((K, T), dtype=int)
    for k in range(K):
        for t in range(T):
            for w in range(W[k]):
                M[k, w, t] = var(f"M_w{w + 1}_k{k + 1}_t{t + 1}", {"maintenance": costs.maintenance[k, t]},
                                 binary=True)
            if opts.maintenance:
                TM[k, t] = var(f"TM_k{k + 1}_t{t + 1}", ub=inst.machines[k].maintenance_interval)
    RL = -np.ones((K, T), dtype=int)
    RF = -np.ones((K, T), dtype=int)
    for k in range(K):
        for t in range(T):
            RL[k, t] = var(f"RL_k{k + 1}_t{t + 1}")
            RF[k, t] = var(f"RF_k{k + 1}_t{t + 1}", {"salvage": -costs.salvage[k, t]})

    def hours(k, t):
        """Production hours of machine k in period t as (var, coef) pairs."""
        return [(Y[i, k, t], scale / rates[i, k]) for i in range(I) if Y[i, k, t] >= 0]

    by_tail = {s: [e for e in ss.TRANSITIONS if ss.tail(e) == s] for s in ss.STATES}
    by_head = {s: [e for e in ss.TRANSITIONS if ss.head(e) == s] for s in ss.STATES}

    for k, m in enumerate(inst.machines):
        kk = k + 1
        # continuity
        for t in range(T - 1):
            for s in ss.STATES:
                coefs = [(X[k, e, t + 1], 1.0) for e in by_tail[s]] + [(X[k, e, t], -1.0) for e in by_head[s]]
                mb.add_row(coefs, "=", 0.0, f"continuity_k{kk}_s{s}_t{t + 1}", "continuity")
        # one transition per period, t >= 2
        for t in range(1, T):
            mb.add_row([(X[k, e, t], 1.0) for e in ss.TRANSITIONS], "=", 1.0, f"one_transition_k{kk}_t{t + 1}", "one_transition")
        if m.is_candidate:
            # bought at most once
            mb.add_row([(X[k, e, t], 1.0) for t in range(T) for e in ss.E1], "<", 1.0, f"buy_once_k{kk}", "buy_once")
            # initial state 0
            mb.add_row([(X[k, e, 0], 1.0) for e in ss.E0 + ss.E1], "=", 1.0, f"start_candidate_k{kk}", "start_candidate")
        else:
            # initial state s0
            es = [e for e in ss.E2 + ss.E3 if ss.tail(e) == m.initial_state]
            mb.add_row([(X[k, e, 0], 1.0) for e in es], "=", 1.0, f"start_existing_k{kk}", "start_existing")

    for t in range(T):
        # one shift configuration
        mb.add_row([(Z[s, t], 1.0) for s in ss.STATES], "=", 1.0, f"one_shift_level_t{t + 1}", "one_shift_level")
        # operating machines follow the shift configuration
        for s in ss.STATES[1:]:
            es = [e for e in ss.OPERATING if ss.head(e) == s]
            for k in range(K):
                mb.add_row([(X[k, e, t], 1.0) for e in es] + [(Z[s, t], -1.0)], "<", 0.0,
                           f"shift_link_s{s}_k{k + 1}_t{t + 1}", "shift_link")
        # shift opening and closing
        for s in ss.STATES:
            z0 = 1.0 if s == s0 else 0.0
            if t == 0:
                mb.add_row([(Z[s, 0], 1.0), (O[s, 0], -1.0)], "<", z0, f"shift_open_s{s}", "shift_open")
                mb.add_row([(Z[s, 0], -1.0), (C[s, 0], -1.0)], "<", -z0, f"shift_close_s{s}", "shift_close")
            else:
                mb.add_row([(Z[s, t], 1.0), (Z[s, t - 1], -1.0), (O[s, t], -1.0)], "<", 0.0,
                           f"shift_open_s{s}_t{t + 1}", "shift_open")
                mb.add_row([(Z[s, t - 1], 1.0), (Z[s, t], -1.0), (C[s, t], -1.0)], "<", 0.0,
                           f"shift_close_s{s}_t{t + 1}", "shift_close")

    # demand
    for i, it in enumerate(inst.items):
        for t in range(T):
            coefs = [(Y[i, k, t], 1.0) for k in range(K) if Y[i, k, t] >= 0] + [(INV[i, t], -1.0)]
            if t == 0:
                mb.add_row(coefs, ">", (demand[i, 0] - it.initial_inventory) / scale, f"demand_i{i + 1}", "demand")
            else:
                mb.add_row(coefs + [(INV[i, t - 1], 1.0)], ">", demand[i, t] / scale,
                           f"demand_i{i + 1}_t{t + 1}", "demand")

    for k, m in enumerate(inst.machines):
        kk = k + 1
        if opts.maintenance:
            ftm = m.maintenance_interval
            for t in range(1, T):
                # maintenance clock
                coefs = [(TM[k, t], 1.0), (TM[k, t - 1], -1.0)]
                coefs += [(j, -a) for j, a in hours(k, t - 1)]
                coefs += [(M[k, w, t], ftm) for w in range(W[k])]
                mb.add_row(coefs, ">", 0.0, f"maint_clock_k{kk}_t{t + 1}", "maint_clock")
            for w in range(W[k] - 1):
                for t in range(T):
                    # maintenances in order
                    coefs = [(M[k, w, tau], 1.0) for tau in range(t + 1)] + [(M[k, w + 1, t], -1.0)]
                    mb.add_row(coefs, ">", 0.0, f"maint_order_w{w + 1}_k{kk}_t{t + 1}", "maint_order")
            for w in range(W[k]):
                # each maintenance at most once
                mb.add_row([(M[k, w, t], 1.0) for t in range(T)], "<", 1.0, f"maint_once_w{w + 1}_k{kk}", "maint_once")
                for t in range(T):
                    # only machines that have operated
                    coefs = [(M[k, w, t], 1.0)] + [(X[k, e, tau], -1.0) for tau in range(t + 1) for e in ss.OPERATING]
                    mb.add_row(coefs, "<", 0.0, f"maint_active_w{w + 1}_k{kk}_t{t + 1}", "maint_active")
        l, mu, v = inst.horizon.shift_length, m.max_utilization, m.useful_life
        for t in range(T):
            # capacity
            coefs = hours(k, t) + [(M[k, w, t], m.maintenance_duration(w + 1)) for w in range(W[k])]
            coefs += [(X[k, e, t], -mu * l * ss.head(e)) for e in ss.OPERATING]
            mb.add_row(coefs, "<", 0.0, f"capacity_k{kk}_t{t + 1}", "capacity")
            # production within remaining life
            mb.add_row(hours(k, t) + [(RL[k, t], -1.0)], "<", 0.0, f"life_use_k{kk}_t{t + 1}", "life_use")
            # remaining life update
            coefs = [(RL[k, t], 1.0)] + [(X[k, e, t], -v) for e in ss.E1]
            if t == 0:
                mb.add_row(coefs, "=", m.initial_life, f"life_balance_k{kk}", "life_balance")
            else:
                coefs += [(RL[k, t - 1], -1.0)] + hours(k, t - 1)
                mb.add_row(coefs, "=", 0.0, f"life_balance_k{kk}_t{t + 1}", "life_balance")
            # salvage caps
            mb.add_row([(RF[k, t], 1.0)] + [(X[k, e, t], -v) for e in ss.E3], "<", 0.0,
                       f"salvage_discard_k{kk}_t{t + 1}", "salvage_discard")
            mb.add_row([(RF[k, t], 1.0), (RL[k, t], -1.0)], "<", 0.0, f"salvage_life_k{kk}_t{t + 1}", "salvage_life")

    n = len(mb.names)
    cost_terms = {}
    for term, entries in n_terms.items():
        vec = np.zeros(n)
        for j, val in entries.items():
            vec[j] = val
        cost_terms[term] = vec
    implied = np.zeros(n, dtype=bool)
    implied[O.ravel()] = True
    implied[C.ravel()] = True
    index = {"X": X, "Z": Z, "O": O, "C": C, "Y": Y, "I": INV, "M": M, "TM": TM, "RL": RL, "RF": RF}
    return mb.model(implied_integer=implied, index=index, cost_terms=cost_terms,
                    bound_family={"TM": "maint_clock_limit", "RL": "nonnegativity", "RF": "nonnegativity",
                                  "Y": "nonnegativity", "I": "nonnegativity"},
                    variant=variant, instance=inst, demand_scale=scale)


# -------------------------------------------------------------------- decode


@dataclass(eq=False)
class Plan:
    """Decoded solution.  Production and inventory are in item units."""

    variant: str
    transitions: np.ndarray  # (K, T) transition index realised per machine-period
    X: np.ndarray  # (K, 16, T) 0/1
    shifts: np.ndarray  # (T,) number of work shifts
    opened: np.ndarray  # (4, T)
    closed: np.ndarray  # (4, T)
    production: np.ndarray  # (I, K, T)
    inventory: np.ndarray  # (I, T)
    maintenance: np.ndarray  # (K, Wmax, T) 0/1
    clock: np.ndarray  # (K, T) TM
    remaining_life: np.ndarray  # (K, T) RL
    salvaged: np.ndarray  # (K, T) RF
    objective: float
    costs: dict[str, float]
    x: np.ndarray | None = None

    @property
    def states(self) -> np.ndarray:
        return self.transitions % ss.N_STATES

    @property
    def n_periods(self) -> int:
        return self.shifts.shape[0]


def _gather(x: np.ndarray, idx: np.ndarray, factor: float = 1.0) -> np.ndarray:
    out = np.zeros(idx.shape)
    mask = idx >= 0
    out[mask] = x[idx[mask]] * factor
    return out


def decode(model: MilpModel, x, tol: float = FEAS_TOL) -> Plan:
    """Verify ``x`` against every row and bound, then unpack it into a Plan."""
    x = np.asarray(x, dtype=float)
    model.check_feasible(x, tol=tol)
    if model.instance is None or "X" not in model.index:
        raise ValueError("model was not produced by build(); nothing to decode")
    ix = model.index
    scale = model.demand_scale
    Xv = np.round(_gather(x, ix["X"])).astype(int)
    Zv = np.round(_gather(x, ix["Z"])).astype(int)
    costs = {term: float(vec @ x) for term, vec in model.cost_terms.items()}
    K, _, T = Xv.shape
    transitions = np.argmax(Xv, axis=1) if K else np.zeros((0, T), dtype=int)
    return Plan(
        variant=model.variant or "",
        transitions=transitions,
        X=Xv,
        shifts=np.argmax(Zv, axis=0),
        opened=np.round(_gather(x, ix["O"])).astype(int),
        closed=np.round(_gather(x, ix["C"])).astype(int),
        production=_gather(x, ix["Y"], scale),
        inventory=_gather(x, ix["I"], scale),
        maintenance=np.round(_gather(x, ix["M"])).astype(int),
        clock=_gather(x, ix["TM"]),
        remaining_life=_gather(x, ix["RL"]),
        salvaged=_gather(x, ix["RF"]),
        objective=model.objective(x),
        costs=costs,
        x=x.copy(),
    )


# ------------------------------------------------------------ plan checks


def plan_violations(plan: Plan, instance: Instance, tol: float = FEAS_TOL) -> list[str]:
    """Check a decoded plan against the model invariants, recomputed from its fields.

    Returns a list of human-readable violations (empty when the plan is sound).
    Tolerances are relative to the magnitude of the quantities compared.
    """
    out: list[str] = []
    inst = instance
    K, T = plan.transitions.shape
    rates = inst.rates
    hours = np.zeros((K, T))
    for k in range(K):
        for i in range(len(inst.items)):
            if rates[i, k] > 0:
                hours[k] += plan.production[i, k] / rates[i, k]
            elif np.any(plan.production[i, k] > tol):
                out.append(f"machine {k} produces item {i} it cannot make")

    def bad(lhs, rhs):
        return lhs > rhs + tol * max(1.0, abs(rhs), abs(lhs))

    for k, m in enumerate(inst.machines):
        for t in range(T):
            if plan.X[k, :, t].sum() != 1:
                out.append(f"machine {k} period {t + 1}: {plan.X[k, :, t].sum()} transitions")
            if t > 0 and ss.tail(plan.transitions[k, t]) != ss.head(plan.transitions[k, t - 1]):
                out.append(f"machine {k} period {t + 1}: discontinuous transition")
        if m.is_candidate:
            buys = int(sum(plan.X[k, e, :].sum() for e in ss.E1))
            if buys > 1:
                out.append(f"candidate machine {k} bought {buys} times")
            if ss.tail(plan.transitions[k, 0]) != 0:
                out.append(f"candidate machine {k} does not start inoperative")
        elif ss.tail(plan.transitions[k, 0]) != m.initial_state:
            out.append(f"existing machine {k} does not start in state {m.initial_state}")
        state = plan.states[k]
        maint = plan.maintenance[k].sum(axis=0) if plan.maintenance.shape[1] else np.zeros(T)
        maint_hours = np.array([sum(m.maintenance_duration(w + 1) * plan.maintenance[k, w, t]
                                    for w in range(plan.maintenance.shape[1])) for t in range(T)])
        cap = m.max_utilization * inst.horizon.shift_length * state
        for t in range(T):
            if bad(hours[k, t] + maint_hours[t], cap[t]):
                out.append(f"machine {k} period {t + 1}: capacity exceeded ({hours[k, t] + maint_hours[t]:.6g} > {cap[t]:.6g})")
            if state[t] > 0 and state[t] != plan.shifts[t]:
                out.append(f"machine {k} period {t + 1}: state {state[t]} differs from shift count {plan.shifts[t]}")
            if bad(hours[k, t], plan.remaining_life[k, t]):
                out.append(f"machine {k} period {t + 1}: production exceeds remaining life")
            if plan.remaining_life[k, t] < -tol * max(1.0, m.useful_life):
                out.append(f"machine {k} period {t + 1}: negative remaining life")
            bought = ss.classify(int(plan.transitions[k, t])) == ss.StatePartition.E1
            prev = plan.remaining_life[k, t - 1] - hours[k, t - 1] if t else m.initial_life
            expect = prev + (m.useful_life if bought else 0.0)
            if abs(plan.remaining_life[k, t] - expect) > tol * max(1.0, m.useful_life):
                out.append(f"machine {k} period {t + 1}: remaining-life balance off")
            discarded = ss.classify(int(plan.transitions[k, t])) == ss.StatePartition.E3
            cap_rf = min(m.useful_life if discarded else 0.0, plan.remaining_life[k, t])
            if bad(plan.salvaged[k, t], max(cap_rf, 0.0)):
                out.append(f"machine {k} period {t + 1}: salvage exceeds cap")
        if inst.options.maintenance:
            ftm = m.maintenance_interval
            for t in range(T):
                if bad(plan.clock[k, t], ftm) or plan.clock[k, t] < -tol * ftm:
                    out.append(f"machine {k} period {t + 1}: maintenance clock out of [0, FTM]")
                if t > 0:
                    need = plan.clock[k, t - 1] + hours[k, t - 1] - ftm * maint[t]
                    if bad(need, plan.clock[k, t]):
                        out.append(f"machine {k} period {t + 1}: maintenance clock not advanced")
    for i, it in enumerate(inst.items):
        prev = it.initial_inventory
        for t in range(T):
            supply = prev + plan.production[i, :, t].sum() - plan.inventory[i, t]
            if bad(it.demand[t], supply):
                out.append(f"item {i} period {t + 1}: demand not met")
            if plan.inventory[i, t] < -tol * max(1.0, it.demand[t]):
                out.append(f"item {i} period {t + 1}: negative inventory")
            prev = plan.inventory[i, t]
    total = sum(plan.costs.values())
    if abs(total - plan.objective) > tol * max(1.0, abs(plan.objective)):
        out.append(f"cost breakdown {total!r} differs from objective {plan.objective!r}")
    return out
