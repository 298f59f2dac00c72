"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criteria 7 and 8 audit every plan produced by the other suites, so running
any of them pulls in the shared fixtures below.
"""
import math
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from captrans.effectiveness import evaluate, technology_weights, DegenerateWeightsError
from captrans.instance import builtin_example, random_instance
from captrans.model import SPT, SPWT, build, plan_violations
from captrans.scenario import mini_sweep, resolve_jobs, run_sweep, scenario_instance, summarize
from captrans.solver.bnb import SolverConfig, solve_milp
from captrans.solver.external import solve_lp_file
from captrans.solver.lpfile import export_lp_file, import_external_solution
from captrans.solver.oracle import brute_force_oracle

from _support import recompute_costs
from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow

PLANS: list[tuple[str, object, object, str]] = []  # (label, plan, instance, variant)


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def keep(label, plan, inst, variant):
    if plan is not None:
        PLANS.append((label, plan, inst, variant))


# ------------------------------------------------------------------ suites


@pytest.fixture(scope="module")
def suite1():
    """Fifty seeded tiny instances solved by branch-and-bound and by enumeration."""
    rows = []
    start = time.perf_counter()
    for seed in range(50):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, periods=int(rng.integers(1, 4)), machines=int(rng.integers(1, 3)),
                               items=int(rng.integers(1, 3)))
        out = {"seed": seed, "instance": inst}
        for variant in (SPT, SPWT):
            model = build(inst, variant)
            ours = solve_milp(model, SolverConfig(gap=0.0, time_limit=120.0))
            ref = brute_force_oracle(model) if variant == SPT else None
            out[variant] = ours
            if ref is not None:
                out["oracle"] = ref
                out["binaries"] = int((model.binary & (model.lb < model.ub) & ~model.implied_integer).sum())
            keep(f"tiny-{seed}-{variant}", ours.plan, inst, variant)
        rows.append(out)
    return rows, time.perf_counter() - start


@pytest.fixture(scope="module")
def suite3():
    """No-tax instances where the clean machine costs 1.6 times the dirty one."""
    runs = []
    base = builtin_example(periods=4, simulated_periods=6)
    cases = [("example-2x3", builtin_example(periods=2, simulated_periods=3, candidates_per_technology=1))]
    for xi in (0.3, 1.0, 2.5):
        cases.append((f"aggregate-xi{xi:g}", scenario_instance(base, xi, 0.5, 1.6)))
    for label, inst in cases:
        inst = inst.with_costs(tax=np.zeros(inst.n_periods))
        res = solve_milp(build(inst, SPT), SolverConfig(gap=1e-3, time_limit=600.0))
        keep(f"notax-{label}", res.plan, inst, SPT)
        runs.append((label, inst, res))
    return runs


def _builtin_route():
    inst = builtin_example(periods=4, simulated_periods=6, candidates_per_technology=3)
    cfg = SolverConfig(gap=1e-3, time_limit=1800.0)
    out = {}
    for variant in (SPT, SPWT):
        res = solve_milp(build(inst, variant), cfg)
        out[variant] = (res.status, res.objective, res.plan)
        keep(f"example-reduced-{variant}", res.plan, inst, variant)
    return inst, out


def _external_route():
    inst = builtin_example()
    out = {}
    with tempfile.TemporaryDirectory() as tmp:
        for variant in (SPT, SPWT):
            model = build(inst, variant)
            lp = export_lp_file(model, Path(tmp) / f"{variant}.lp")
            ext = solve_lp_file(lp, Path(tmp) / f"{variant}.sol", gap=1e-3, time_limit=3600.0)
            plan = import_external_solution(ext.solution_path, model) if ext.solution_path else None
            out[variant] = (ext.status, plan.objective if plan else math.nan, plan)
            keep(f"example-full-{variant}", plan, inst, variant)
    return inst, out


@pytest.fixture(scope="module")
def suite4():
    """The illustrative example by both permitted routes."""
    return {"built-in reduced": _builtin_route(), "external full": _external_route()}


@pytest.fixture(scope="module")
def suite6():
    spec = mini_sweep(count=10, seed=0, time_limit=60.0)
    spec.keep_plans = True
    start = time.perf_counter()
    result = run_sweep(spec, jobs=resolve_jobs(None))
    elapsed = time.perf_counter() - start
    base = spec.base_instance()
    for s in result.scenarios:
        if s.plan is not None:
            inst = scenario_instance(base, s.xi, s.ep_ratio, s.ci_ratio)
            keep(f"sweep-{s.index}", s.plan, inst, SPT)
    return result, summarize(result), elapsed


# --------------------------------------------------------------- criteria


def test_criterion_1_oracle_equivalence(suite1):
    rows, elapsed = suite1
    worst, mismatches, feasible = 0.0, [], 0
    for r in rows:
        ours, ref = r[SPT], r["oracle"]
        if ref.status == "infeasible" or ours.status == "infeasible":
            if ref.status != ours.status:
                mismatches.append(r["seed"])
            continue
        feasible += 1
        rel = abs(ours.objective - ref.objective) / max(1.0, abs(ref.objective))
        worst = max(worst, rel)
        if rel > 1e-6:
            mismatches.append(r["seed"])
    most = max(r["binaries"] for r in rows)
    ok = len(rows) >= 50 and not mismatches and most <= 24
    report(1, ok, f"{len(rows)} instances ({feasible} feasible), max binaries {most}, "
                  f"worst relative difference {worst:.2e}, mismatches {mismatches}, {elapsed:.1f} s")


def test_criterion_2_relaxation_bound(suite1, suite4):
    pairs = [(f"tiny-{r['seed']}", r[SPT], r[SPWT]) for r in suite1[0]]
    checked, bad = 0, []
    for label, a, b in pairs:
        if a.solved and b.solved:
            checked += 1
            if b.objective > a.objective + 1e-9:
                bad.append(label)
    for route, (_, out) in suite4.items():
        a, b = out[SPT], out[SPWT]
        if a[2] is not None and b[2] is not None:
            checked += 1
            if b[1] > a[1] + 1e-9:
                bad.append(route)
    report(2, checked > 0 and not bad, f"{checked} SPT/SPWT pairs compared, violations {bad}")


def test_criterion_3_no_tax_baseline(suite3):
    details, ok = [], True
    for label, inst, res in suite3:
        if not res.solved:
            ok = False
            details.append(f"{label}: {res.status}")
            continue
        members = inst.technology_members()
        made = res.plan.production.sum(axis=0)
        dirty = made[members[0]].sum(axis=0)
        clean = made[members[1]].sum(axis=0)
        producing = (dirty + clean) > 1e-9
        worst = float(np.max(clean[producing] / (dirty + clean)[producing], initial=0.0))
        ok &= worst <= 1e-9
        details.append(f"{label}: max clean share {worst:.3g} over {int(producing.sum())} producing periods")
    report(3, ok, "; ".join(details))


def _pattern(plan, inst):
    R = evaluate(plan, inst).level_of("clean")
    T = len(R)
    full = np.flatnonzero(R >= 1.0 - 1e-9)
    t_star = int(full[0]) + 1 if full.size else None
    first_zero = R[0] <= 1e-9
    monotone = bool(np.all(np.diff(R) >= -1e-9))
    ok = first_zero and monotone and t_star is not None and 3 <= t_star <= T
    return ok, f"R_clean={np.round(R, 3).tolist()} t*={t_star}"


def test_criterion_4_example_pattern(suite4):
    lines, any_ok = [], False
    for route, (inst, out) in suite4.items():
        status, _, plan = out[SPT]
        if plan is None:
            lines.append(f"{route}: no plan ({status})")
            continue
        ok, text = _pattern(plan, inst)
        any_ok |= ok
        lines.append(f"{route} [{status}]: {'pattern holds' if ok else 'pattern fails'}, {text}")
    report(4, any_ok, "; ".join(lines))


def _decoupling(inst, out):
    spt, spwt = out[SPT][2], out[SPWT][2]
    rep = evaluate(spt, inst, reference=spwt)
    E, W = rep.emissions, rep.reference_emissions
    clean_idx = inst.technology_members()[[t.id for t in inst.technologies].index("clean")]
    clean_made = spt.production.sum(axis=0)[clean_idx].sum(axis=0)[:len(E)]
    started = np.flatnonzero(clean_made > 1e-9)
    start = int(started[0]) if started.size else len(E)
    below = bool(np.all(E[start:] <= W[start:] * (1 + 1e-9) + 1e-9))
    rising = bool(np.all(np.diff(W) >= -1e-9 * np.maximum(1.0, W[1:])))
    text = (f"clean from t={start + 1}, E_SPT={np.round(E).astype(int).tolist()}, "
            f"E_SPWT={np.round(W).astype(int).tolist()}")
    return below and rising, text


def test_criterion_5_emissions_decoupling(suite4):
    lines, any_ok = [], False
    for route, (inst, out) in suite4.items():
        if out[SPT][2] is None or out[SPWT][2] is None:
            lines.append(f"{route}: missing plan")
            continue
        ok, text = _decoupling(inst, out)
        any_ok |= ok
        lines.append(f"{route}: {'holds' if ok else 'fails'}, {text}")
    report(5, any_ok, "; ".join(lines))


def test_criterion_6_sweep_trends(suite6):
    result, cells, elapsed = suite6
    by = {(c.ep_ratio, c.ci_ratio): c for c in cells}
    eps = result.spec.ep_ratios
    cis = result.spec.ci_ratios
    E = {k: c.expected for k, c in by.items()}
    P0 = {k: c.p_zero for k, c in by.items()}
    complete = all(not math.isnan(v) for v in E.values())
    a = complete and all(E[(e, cis[n + 1])] <= E[(e, cis[n])] + 1e-12 for e in eps for n in range(len(cis) - 1))
    b = complete and all(E[(0.5, c)] >= E[(0.7, c)] - 1e-12 for c in cis)
    c_ok = complete and P0[(0.7, 1.6)] >= max(P0.values()) - 1e-12
    solved = sum(s.solved for s in result.scenarios)
    grid = ", ".join(f"({e:g},{c:g}): E={E[(e, c)]:.3f} P0={P0[(e, c)]:.2f}" for e in eps for c in cis)
    report(6, a and b and c_ok, f"(a) {'ok' if a else 'violated'}, (b) {'ok' if b else 'violated'}, "
                                f"(c) {'ok' if c_ok else 'violated'}; {solved}/{len(result.scenarios)} "
                                f"scenarios solved in {elapsed:.0f} s; {grid}")


def test_criterion_7_invariants(suite1, suite3, suite4, suite6):
    bad = []
    for label, plan, inst, variant in PLANS:
        problems = plan_violations(plan, inst)
        total = sum(recompute_costs(plan, inst, variant).values())
        if abs(total - plan.objective) > 1e-6 * max(1.0, abs(plan.objective)):
            problems.append(f"objective {plan.objective!r} vs recomputed {total!r}")
        if problems:
            bad.append(f"{label}: {problems[0]}")
    report(7, bool(PLANS) and not bad, f"{len(PLANS)} plans checked, {len(bad)} with violations {bad[:3]}")


def test_criterion_8_measure_properties(suite1, suite3, suite4, suite6):
    betas = (0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0)
    checked, skipped, bad = 0, 0, []
    for label, plan, inst, _ in PLANS:
        try:
            gamma, eta = technology_weights(inst)
        except DegenerateWeightsError:
            skipped += 1
            continue
        checked += 1
        if abs(gamma.sum() - 1.0) > 1e-12 or gamma[int(np.argmax(eta))] != 0.0:
            bad.append(f"{label}: weights {gamma}")
            continue
        rep = evaluate(plan, inst, betas)
        taus = [rep.tau[b] if rep.tau[b] is not None else math.inf for b in betas]
        if any(t2 < t1 for t1, t2 in zip(taus, taus[1:])):
            bad.append(f"{label}: tau not monotone {taus}")
        w = rep.weighted
        for b, t in zip(betas, taus):
            if math.isfinite(t) and w[t - 1] < b - 1e-12:
                bad.append(f"{label}: level {w[t - 1]} below beta {b} at tau {t}")
    report(8, checked > 0 and not bad,
           f"{checked} plans checked ({skipped} single-technology plans without weights), violations {bad[:3]}")
