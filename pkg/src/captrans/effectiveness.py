"""Emissions, transition levels and transition periods of a plan."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .instance import Instance
from .model import Plan

DEFAULT_BETAS = (0.50, 0.75)


class DegenerateWeightsError(ValueError):
    """Raised when technologies cannot be told apart by their emissions."""


def emissions_by_period(plan: Plan, instance: Instance) -> np.ndarray:
    """CO2 emitted per period by production and by stock held."""
    ep = instance.emissions  # (I, K)
    eh = np.array([it.holding_emission for it in instance.items])
    made = np.einsum("ik,ikt->t", ep, plan.production)
    held = eh @ plan.inventory
    return made + held


def mean_emissions(instance: Instance) -> np.ndarray:
    """eta_j: average over member machines of the summed item emission rates."""
    ep = instance.emissions
    return np.array([ep[:, idx].sum(axis=0).mean() if idx else np.nan
                     for idx in instance.technology_members()])


def technology_weights(instance: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Normalised inverse-emission weights gamma_j, returned with eta_j."""
    eta = mean_emissions(instance)
    if eta.size < 2:
        raise DegenerateWeightsError("at least two technologies are needed")
    if np.any(~np.isfinite(eta)) or np.any(eta <= 0):
        raise DegenerateWeightsError("every technology needs members with positive emissions")
    inv = 1.0 / eta
    spread = inv - inv.min()
    total = spread.sum()
    if total <= 1e-12 * inv.max():
        raise DegenerateWeightsError("all technologies have the same mean emissions")
    return spread / total, eta


def _production_by_technology(plan: Plan, instance: Instance) -> np.ndarray:
    per_machine = plan.production.sum(axis=0)  # (K, T)
    return np.array([per_machine[idx].sum(axis=0) if idx else np.zeros(plan.n_periods)
                     for idx in instance.technology_members()])


def transition_levels(plan: Plan, instance: Instance, tol: float = 1e-9) -> np.ndarray:
    """R_j^t, the share of period-t output made with technology j.

    A period without production repeats the previous period's shares.  Before
    the first productive period all output is attributed to the dirtiest
    technology.
    """
    by_tech = _production_by_technology(plan, instance)
    J, T = by_tech.shape
    total = by_tech.sum(axis=0)
    R = np.zeros((J, T))
    prev = np.zeros(J)
    if J:
        eta = mean_emissions(instance)
        prev[int(np.nanargmax(eta)) if np.isfinite(eta).any() else 0] = 1.0
    for t in range(T):
        if total[t] > tol:
            prev = by_tech[:, t] / total[t]
        R[:, t] = prev
    return R


def weighted_levels(R: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    return np.asarray(gamma) @ np.asarray(R)


def transition_period(R: np.ndarray, gamma: np.ndarray, beta: float) -> int | None:
    """First period (1-based) whose weighted level reaches ``beta``; None if never."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    level = weighted_levels(R, gamma)
    hits = np.flatnonzero(level >= beta - 1e-12)
    return int(hits[0]) + 1 if hits.size else None


@dataclass
class EffectivenessReport:
    emissions: np.ndarray
    levels: np.ndarray  # (J, T)
    technologies: tuple[str, ...]
    gamma: np.ndarray | None
    eta: np.ndarray
    tau: dict[float, int | None]
    final_level: float | None
    reference_emissions: np.ndarray | None = None  # same instance, no tax
    betas: tuple[float, ...] = field(default=DEFAULT_BETAS)

    @property
    def weighted(self) -> np.ndarray | None:
        return None if self.gamma is None else weighted_levels(self.levels, self.gamma)

    def level_of(self, technology: str) -> np.ndarray:
        return self.levels[self.technologies.index(technology)]


def evaluate(plan: Plan, instance: Instance, betas: Sequence[float] = DEFAULT_BETAS,
             reference: Plan | None = None) -> EffectivenessReport:
    """Measures over the decision periods only (the trailing simulated periods are dropped).

    ``reference`` is an optional plan for the same instance solved without
    the tax term, whose emissions are reported alongside.
    """
    T = instance.horizon.periods
    E = emissions_by_period(plan, instance)[:T]
    R = transition_levels(plan, instance)[:, :T]
    try:
        gamma, eta = technology_weights(instance)
    except DegenerateWeightsError:
        gamma, eta = None, mean_emissions(instance)
    betas = tuple(float(b) for b in betas)
    tau = {b: (transition_period(R, gamma, b) if gamma is not None else None) for b in betas}
    final = float(weighted_levels(R, gamma)[-1]) if gamma is not None and T else None
    ref = emissions_by_period(reference, instance)[:T] if reference is not None else None
    return EffectivenessReport(emissions=E, levels=R, technologies=tuple(t.id for t in instance.technologies),
                               gamma=gamma, eta=eta, tau=tau, final_level=final, reference_emissions=ref,
                               betas=betas)


def more_effective(a: EffectivenessReport, b: EffectivenessReport, beta: float) -> bool:
    """True if ``a`` transitions more effectively than ``b`` at threshold ``beta``.

    A plan is better when it reaches a higher final weighted level, and at
    equal levels when it crosses ``beta`` earlier.
    """
    la, lb = a.final_level or 0.0, b.final_level or 0.0
    if abs(la - lb) > 1e-9:
        return la > lb
    ta, tb = a.tau.get(beta), b.tau.get(beta)
    ta = np.inf if ta is None else ta
    tb = np.inf if tb is None else tb
    return ta < tb
