"""LP and MILP solvers for capacity planning models."""
from .bnb import (MOST_FRACTIONAL, PSEUDO_COST, MilpResult, SolverConfig, relative_gap,
                  solve_lp, solve_milp)
from .simplex import BoundedSimplex, LPResult, NumericalFailure

__all__ = [
    "MOST_FRACTIONAL", "PSEUDO_COST", "MilpResult", "SolverConfig", "relative_gap",
    "solve_lp", "solve_milp", "BoundedSimplex", "LPResult", "NumericalFailure",
]
