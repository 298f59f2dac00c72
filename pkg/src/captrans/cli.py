"""Command line entry point: ``captrans <verb> ...``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import tempfile
from pathlib import Path

from .effectiveness import DEFAULT_BETAS, evaluate
from .instance import InstanceError, builtin_example, load_instance, save_instance
from .model import SPT, SPWT, InfeasibleSolutionError, build
from .reporting import (ReportBundle, emissions_table, levels_table, load_plan, plan_table, save_plan,
                        scenario_table, sweep_table, tau_table, write_reports)
from .scenario import SweepSpec, load_sweep_spec, run_sweep, summarize, sweep_spec_to_dict
from .solver.bnb import MOST_FRACTIONAL, PSEUDO_COST, SolverConfig, solve_milp
from .solver.lpfile import LPFormatError, export_lp_file, import_external_solution

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("captrans")


class UsageError(Exception):
    pass


class SolverFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def _solver_config(args, gap=1e-4, time_limit=36000.0) -> SolverConfig:
    return SolverConfig(gap=gap if args.gap is None else args.gap,
                        time_limit=time_limit if args.time_limit is None else args.time_limit,
                        branching=args.branching, node_limit=args.node_limit, seed=args.seed)


def _betas(args):
    return tuple(args.beta) if args.beta else DEFAULT_BETAS


def _solve_variant(inst, variant, args, workdir: Path | None = None):
    """Returns (plan, model, status line)."""
    model = build(inst, variant)
    if args.engine == "external":
        from .solver.external import solve_lp_file

        with tempfile.TemporaryDirectory() as tmp:
            lp = export_lp_file(model, Path(tmp) / "model.lp")
            res = solve_lp_file(lp, Path(tmp) / "model.sol", gap=_solver_config(args).gap,
                                time_limit=_solver_config(args).time_limit, seed=args.seed)
            if res.solution_path is None:
                raise SolverFailure(f"{variant}: external solver finished with status {res.status}")
            plan = import_external_solution(res.solution_path, model)
        return plan, model, f"{variant}: {res.status} objective {plan.objective:.10g} gap {res.gap:.3g}"
    res = solve_milp(model, _solver_config(args))
    if res.plan is None:
        raise SolverFailure(f"{variant}: {res.status}, no feasible plan found")
    return res.plan, model, (f"{variant}: {res.status} objective {res.objective:.10g} bound {res.bound:.10g} "
                             f"gap {res.gap:.3g} nodes {res.nodes}")


def _config_record(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}


def cmd_example(args) -> int:
    inst = builtin_example(periods=args.periods, simulated_periods=args.simulated_periods,
                           candidates_per_technology=args.candidates)
    out = Path(args.out)
    save_instance(inst, out)
    print(out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(_existing(args.instance))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    variant = args.variant.upper()
    plan, model, line = _solve_variant(inst, variant, args)
    print(line)
    reference = None
    if args.compare and variant == SPT:
        reference, ref_model, ref_line = _solve_variant(inst, SPWT, args)
        print(ref_line)
        save_plan(reference, ref_model, out / "plan_spwt.json")
    save_plan(plan, model, out / "plan.json")
    rep = evaluate(plan, inst, _betas(args), reference=reference)
    bundle = ReportBundle(seed=args.seed, config=_config_record(args))
    bundle.add(plan_table(plan, inst)).add(levels_table(rep)).add(emissions_table(rep))
    write_reports(bundle, out)
    _print_report(rep)
    return EXIT_OK


def _print_report(rep) -> None:
    for b, tau in rep.tau.items():
        print(f"tau_{b:g} = {tau if tau is not None else 'never'}")
    if rep.final_level is not None:
        print(f"final weighted level = {rep.final_level:.6g}")


def cmd_evaluate(args) -> int:
    inst = load_instance(_existing(args.instance))
    plan, _ = load_plan(_existing(args.plan), inst)
    reference = load_plan(_existing(args.reference), inst)[0] if args.reference else None
    rep = evaluate(plan, inst, _betas(args), reference=reference)
    bundle = ReportBundle(seed=args.seed, config=_config_record(args))
    bundle.add(levels_table(rep)).add(emissions_table(rep))
    write_reports(bundle, args.out)
    _print_report(rep)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(_existing(args.spec)) if args.spec else SweepSpec()
    changes = {}
    if args.count is not None:
        changes["count"] = args.count
    if args.seed_given:
        changes["seed"] = args.seed
    if args.beta:
        changes["betas"] = tuple(args.beta)
    if args.full_model:
        changes["simplified"] = False
    solver = spec.solver
    solver = dataclasses.replace(
        solver,
        gap=solver.gap if args.gap is None else args.gap,
        time_limit=solver.time_limit if args.time_limit is None else args.time_limit,
        node_limit=solver.node_limit if args.node_limit is None else args.node_limit,
        branching=args.branching,
        seed=changes.get("seed", spec.seed),
    )
    spec = dataclasses.replace(spec, solver=solver, **changes)
    result = run_sweep(spec, jobs=args.jobs)
    cells = summarize(result)
    config = sweep_spec_to_dict(dataclasses.replace(spec, base=None))
    bundle = ReportBundle(seed=spec.seed, config=config)
    bundle.add(sweep_table(cells)).add(tau_table(cells)).add(scenario_table(result.scenarios))
    write_reports(bundle, args.out)
    failed = sum(not s.solved for s in result.scenarios)
    print(f"{len(result.scenarios)} scenarios, {failed} without a solved plan")
    return EXIT_OK


def cmd_export(args) -> int:
    inst = load_instance(_existing(args.instance))
    path = export_lp_file(build(inst, args.variant.upper()), args.out)
    print(path)
    return EXIT_OK


def cmd_import(args) -> int:
    inst = load_instance(_existing(args.instance))
    model = build(inst, args.variant.upper())
    plan = import_external_solution(_existing(args.solution), model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_plan(plan, model, out / "plan.json")
    rep = evaluate(plan, inst, _betas(args))
    bundle = ReportBundle(seed=None, config=_config_record(args))
    bundle.add(plan_table(plan, inst)).add(levels_table(rep)).add(emissions_table(rep))
    write_reports(bundle, out)
    print(f"objective {plan.objective:.10g}")
    return EXIT_OK


def _add_solver_flags(p, sweep=False):
    p.add_argument("--gap", type=float, default=None,
                   help="relative optimality gap (default 1e-3 for sweeps, else 1e-4)" if sweep
                   else "relative optimality gap (default 1e-4)")
    p.add_argument("--time-limit", type=float, default=None,
                   help="seconds per scenario (default 60)" if sweep else "seconds (default 36000)")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--branching", choices=(MOST_FRACTIONAL, PSEUDO_COST), default=MOST_FRACTIONAL)


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="seed for every random choice (default 0)")
    p.add_argument("--beta", type=float, action="append", help="transition threshold; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="captrans", description="Capacity planning for clean technology transitions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("example", help="write the built-in example instance")
    p.add_argument("--out", required=True)
    p.add_argument("--periods", type=int, default=8)
    p.add_argument("--simulated-periods", type=int, default=12)
    p.add_argument("--candidates", type=int, default=None, help="candidate machines per technology")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("solve", help="solve one instance and write the plan and reports")
    p.add_argument("instance")
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=("spt", "spwt", "SPT", "SPWT"), default="spt")
    p.add_argument("--engine", choices=("builtin", "external"), default="builtin")
    p.add_argument("--compare", action="store_true", help="also solve without the tax term")
    _add_solver_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="effectiveness report for a stored plan")
    p.add_argument("instance")
    p.add_argument("plan")
    p.add_argument("--reference", help="plan of the same instance without the tax term")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run a seeded scenario sweep")
    p.add_argument("spec", nargs="?", help="sweep specification file")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default $CAPTRANS_JOBS or 1)")
    p.add_argument("--full-model", action="store_true", help="keep all items, maintenance and shifts")
    _add_solver_flags(p, sweep=True)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-lp", help="write the model in LP format")
    p.add_argument("instance")
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=("spt", "spwt", "SPT", "SPWT"), default="spt")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import-sol", help="load an external 'name value' solution")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=("spt", "spwt", "SPT", "SPWT"), default="spt")
    _add_common(p)
    p.set_defaults(func=cmd_import)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"captrans: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if hasattr(args, "seed"):
        args.seed_given = args.seed is not None
        if args.seed is None:
            args.seed = 0
    for b in getattr(args, "beta", None) or ():
        if not 0.0 <= b <= 1.0:
            print(f"captrans: usage error: beta must lie in [0, 1], got {b}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except (InstanceError, InfeasibleSolutionError, LPFormatError, json.JSONDecodeError, ValueError) as exc:
        print(f"captrans: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverFailure as exc:
        print(f"captrans: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"captrans: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
