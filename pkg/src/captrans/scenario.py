"""Seeded scenario sweeps over demand scale and technology cost/emission ratios."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .effectiveness import DEFAULT_BETAS, evaluate
from .instance import (Instance, aggregate_to_single_product, builtin_example, instance_from_dict,
                       instance_to_dict, validate)
from .model import SPT, Plan, build
from .solver.bnb import SOLVED, SolverConfig, solve_milp

log = logging.getLogger(__name__)

XI_LOW, XI_HIGH = 0.05, 25.0
EP_RATIOS = (0.5, 0.7)
CI_RATIOS = (1.3, 1.4, 1.5, 1.6)
THRESHOLDS = (0.50, 0.75, 1.0)


def xi_from_uniform(u: float) -> float:
    """Demand scale for a uniform draw ``u`` on [0.05, 25]."""
    return XI_LOW + (u - XI_LOW) / 10.0


def sample_xi(rng: np.random.Generator) -> float:
    return xi_from_uniform(float(rng.uniform(XI_LOW, XI_HIGH)))


def dirty_and_clean(instance: Instance) -> tuple[int, int]:
    """Indices of the highest- and lowest-emitting of exactly two technologies."""
    if len(instance.technologies) != 2:
        raise ValueError("ratio scenarios need exactly two technologies")
    ep = instance.emissions
    eta = [ep[:, idx].sum(axis=0).mean() for idx in instance.technology_members()]
    dirty = 0 if eta[0] >= eta[1] else 1
    return dirty, 1 - dirty


def apply_technology_ratios(instance: Instance, ep_ratio: float, ci_ratio: float) -> Instance:
    """Make the clean technology emit ``ep_ratio`` times and cost ``ci_ratio`` times the dirty one.

    Salvage rates follow the investment cost.  Every other parameter is
    copied from the dirty technology's first machine.
    """
    if not 0.0 < ep_ratio < 1.0:
        raise ValueError(f"emission ratio must lie in (0, 1), got {ep_ratio}")
    if not ci_ratio > 1.0:
        raise ValueError(f"investment ratio must exceed 1, got {ci_ratio}")
    dirty, clean = dirty_and_clean(instance)
    members = instance.technology_members()
    d0 = members[dirty][0]
    clean_k = members[clean]
    items = []
    for it in instance.items:
        em = list(it.emission)
        rate = list(it.rate)
        for k in clean_k:
            em[k] = ep_ratio * it.emission[d0]
            rate[k] = it.rate[d0]
        items.append(dataclasses.replace(it, emission=tuple(em), rate=tuple(rate)))
    c = instance.costs
    tables = {}
    for name in ("investment", "salvage"):
        arr = np.array(getattr(c, name))
        arr[clean_k] = ci_ratio * arr[d0]
        tables[name] = arr
    for name in ("maintenance", "labor", "hiring", "firing"):
        arr = np.array(getattr(c, name))
        arr[clean_k] = arr[d0]
        tables[name] = arr
    prod = np.array(c.production)
    prod[:, clean_k] = prod[:, [d0]]
    tables["production"] = prod
    out = instance.replace(items=tuple(items)).with_costs(**tables)
    return validate(out)


@dataclass
class SweepSpec:
    base: Instance | None = None  # defaults to the built-in example
    count: int = 50
    ep_ratios: tuple[float, ...] = EP_RATIOS
    ci_ratios: tuple[float, ...] = CI_RATIOS
    betas: tuple[float, ...] = DEFAULT_BETAS
    seed: int = 0
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(gap=1e-3, time_limit=60.0))
    simplified: bool = True
    candidates_per_technology: int | None = None
    keep_plans: bool = False  # attach each decoded plan to its ScenarioResult

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("instance count must be non-negative")
        for r in self.ep_ratios:
            if not 0 < r < 1:
                raise ValueError(f"emission ratios must lie in (0, 1), got {r}")
        for r in self.ci_ratios:
            if not r > 1:
                raise ValueError(f"investment ratios must exceed 1, got {r}")
        for b in self.betas:
            if not 0 <= b <= 1:
                raise ValueError(f"beta must lie in [0, 1], got {b}")

    @property
    def cells(self) -> list[tuple[float, float]]:
        return [(e, c) for e in self.ep_ratios for c in self.ci_ratios]

    def base_instance(self) -> Instance:
        return self.base if self.base is not None else builtin_example()


@dataclass
class ScenarioResult:
    index: int
    instance: int
    xi: float
    ep_ratio: float
    ci_ratio: float
    status: str
    objective: float
    gap: float
    level: float  # clean-technology level in the last decision period
    tau: dict[float, int | None]
    wall_time: float = 0.0
    error: str | None = None
    plan: Plan | None = None

    @property
    def solved(self) -> bool:
        return self.status in SOLVED


@dataclass
class SweepResult:
    spec: SweepSpec
    xis: list[float]
    scenarios: list[ScenarioResult]


def scenario_instance(base: Instance, xi: float, ep_ratio: float, ci_ratio: float, simplified: bool = True,
                      candidates_per_technology: int | None = None) -> Instance:
    if simplified:
        inst = aggregate_to_single_product(base, xi, candidates_per_technology)
    else:
        items = tuple(dataclasses.replace(it, demand=tuple(xi * d for d in it.demand),
                                          initial_inventory=xi * it.initial_inventory)
                      for it in base.items)
        inst = validate(base.replace(items=items))
    return apply_technology_ratios(inst, ep_ratio, ci_ratio)


def _run_one(args) -> ScenarioResult:
    index, inst_no, xi, ep_r, ci_r, base, spec = args
    try:
        inst = scenario_instance(base, xi, ep_r, ci_r, spec.simplified, spec.candidates_per_technology)
        res = solve_milp(build(inst, SPT), spec.solver)
    except Exception as exc:  # a broken scenario must not stop the sweep
        log.warning("scenario %d failed: %s", index, exc)
        return ScenarioResult(index, inst_no, xi, ep_r, ci_r, "error", math.nan, math.nan, math.nan,
                              {b: None for b in spec.betas}, error=str(exc))
    if res.plan is None:
        return ScenarioResult(index, inst_no, xi, ep_r, ci_r, res.status, math.nan, math.nan, math.nan,
                              {b: None for b in spec.betas}, wall_time=res.wall_time)
    _, clean = dirty_and_clean(inst)
    rep = evaluate(res.plan, inst, spec.betas)
    return ScenarioResult(index, inst_no, xi, ep_r, ci_r, res.status, res.objective, res.gap,
                          float(rep.levels[clean, -1]), rep.tau, wall_time=res.wall_time,
                          plan=res.plan if spec.keep_plans else None)


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get("CAPTRANS_JOBS")
        jobs = int(env) if env else 1
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    return jobs


def run_sweep(spec: SweepSpec, jobs: int | None = None) -> SweepResult:
    """Solve every (instance, ratio cell) scenario; results come back in scenario order."""
    rng = np.random.default_rng(spec.seed)
    xis = [sample_xi(rng) for _ in range(spec.count)]
    base = spec.base_instance()
    tasks = []
    for n, xi in enumerate(xis):
        for e, c in spec.cells:
            tasks.append((len(tasks), n, xi, e, c, base, spec))
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) <= 1:
        out = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_run_one, tasks))
    return SweepResult(spec, xis, out)


@dataclass
class CellSummary:
    ep_ratio: float
    ci_ratio: float
    scenarios: int
    solved: int
    p_zero: float
    p_at_least: dict[float, float]
    expected: float
    tau_quartiles: dict[float, tuple[float, float, float] | None]
    tau_finite: dict[float, int]


def summarize(result: SweepResult) -> list[CellSummary]:
    """Per ratio cell: probabilities and mean of the final clean level, and tau quartiles."""
    out = []
    for e, c in result.spec.cells:
        rows = [s for s in result.scenarios if s.ep_ratio == e and s.ci_ratio == c]
        ok = [s for s in rows if s.solved]
        lv = np.array([s.level for s in ok])
        if lv.size:
            p0 = float(np.mean(lv <= 1e-6))
            pa = {a: float(np.mean(lv >= a - 1e-6)) for a in THRESHOLDS}
            ex = float(lv.mean())
        else:
            p0, pa, ex = math.nan, {a: math.nan for a in THRESHOLDS}, math.nan
        quart, finite = {}, {}
        for b in result.spec.betas:
            taus = np.array([s.tau[b] for s in ok if s.tau.get(b) is not None], dtype=float)
            finite[b] = int(taus.size)
            quart[b] = tuple(float(q) for q in np.percentile(taus, [25, 50, 75])) if taus.size else None
        out.append(CellSummary(e, c, len(rows), len(ok), p0, pa, ex, quart, finite))
    return out


# ---------------------------------------------------------------- spec files


def sweep_spec_to_dict(spec: SweepSpec) -> dict:
    doc = {
        "schema": 1,
        "sweep": {
            "count": spec.count,
            "ep_ratios": list(spec.ep_ratios),
            "ci_ratios": list(spec.ci_ratios),
            "betas": list(spec.betas),
            "seed": spec.seed,
            "gap": spec.solver.gap,
            "time_limit": spec.solver.time_limit,
            "node_limit": spec.solver.node_limit,
            "simplified": spec.simplified,
            "candidates_per_technology": spec.candidates_per_technology,
        },
    }
    if spec.base is not None:
        doc["instance"] = instance_to_dict(spec.base)
    return doc


def sweep_spec_from_dict(doc: dict) -> SweepSpec:
    if "sweep" not in doc:
        raise ValueError("sweep specification needs a 'sweep' section")
    s = dict(doc["sweep"])
    known = {"count", "ep_ratios", "ci_ratios", "betas", "seed", "gap", "time_limit", "node_limit",
             "simplified", "candidates_per_technology"}
    unknown = set(s) - known
    if unknown:
        raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
    solver = SolverConfig(gap=float(s.get("gap", 1e-3)), time_limit=float(s.get("time_limit", 60.0)),
                          node_limit=s.get("node_limit"), seed=int(s.get("seed", 0)))
    base = instance_from_dict(doc["instance"]) if doc.get("instance") else None
    return SweepSpec(
        base=base,
        count=int(s.get("count", 50)),
        ep_ratios=tuple(float(x) for x in s.get("ep_ratios", EP_RATIOS)),
        ci_ratios=tuple(float(x) for x in s.get("ci_ratios", CI_RATIOS)),
        betas=tuple(float(x) for x in s.get("betas", DEFAULT_BETAS)),
        seed=int(s.get("seed", 0)),
        solver=solver,
        simplified=bool(s.get("simplified", True)),
        candidates_per_technology=s.get("candidates_per_technology"),
    )


def load_sweep_spec(path) -> SweepSpec:
    with open(path, encoding="utf-8") as fh:
        return sweep_spec_from_dict(json.load(fh))


def save_sweep_spec(spec: SweepSpec, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(sweep_spec_to_dict(spec), indent=2) + "\n", encoding="utf-8")
    return path


def cell_key(ep_ratio: float, ci_ratio: float) -> str:
    return f"{ep_ratio:g}/{ci_ratio:g}"


def mini_sweep(count: int = 10, seed: int = 0, time_limit: float = 60.0,
               betas: Sequence[float] = DEFAULT_BETAS) -> SweepSpec:
    return SweepSpec(count=count, seed=seed, betas=tuple(betas),
                     solver=SolverConfig(gap=1e-3, time_limit=time_limit))
