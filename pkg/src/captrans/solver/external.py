"""Solving exported LP files with HiGHS as an external MILP solver."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import highspy
import numpy as np

from .lpfile import write_solution


@dataclass
class ExternalResult:
    status: str
    objective: float
    bound: float
    gap: float
    solution_path: Path | None


def solve_lp_file(lp_path, solution_path, gap: float = 1e-4, time_limit: float = 36000.0,
                  threads: int = 1, seed: int = 0) -> ExternalResult:
    """Read an LP file into HiGHS, solve it and write a ``name value`` solution file."""
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", float(gap))
    h.setOptionValue("time_limit", float(time_limit))
    h.setOptionValue("threads", int(threads))
    h.setOptionValue("random_seed", int(seed))
    if h.readModel(str(lp_path)) != highspy.HighsStatus.kOk:
        raise ValueError(f"external solver rejected {lp_path}")
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    label = {
        highspy.HighsModelStatus.kOptimal: "optimal",
        highspy.HighsModelStatus.kInfeasible: "infeasible",
        highspy.HighsModelStatus.kUnbounded: "unbounded",
        highspy.HighsModelStatus.kUnboundedOrInfeasible: "infeasible",
        highspy.HighsModelStatus.kTimeLimit: "time-limit",
    }.get(status, h.modelStatusToString(status))
    if info.primal_solution_status != 2:  # no feasible point
        return ExternalResult(label, math.inf, -math.inf, math.inf, None)
    lp = h.getLp()
    x = np.asarray(h.getSolution().col_value)
    path = write_solution(solution_path, lp.col_names_, x, header=f"status {label}")
    return ExternalResult(label, float(info.objective_function_value), float(info.mip_dual_bound),
                          float(info.mip_gap), path)
