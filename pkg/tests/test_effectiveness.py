from fractions import Fraction

import numpy as np
import pytest

from captrans.effectiveness import (DegenerateWeightsError, emissions_by_period, evaluate, mean_emissions,
                                    more_effective, technology_weights, transition_levels, transition_period)
from captrans.instance import builtin_example, instance_from_dict
from captrans.model import Plan


def three_tech(eta=(4.0, 2.0, 1.0), T=3):
    doc = {
        "schema": 1,
        "horizon": {"periods": T, "simulated_periods": T, "shifts": [0, 1]},
        "technologies": [{"id": f"j{n}"} for n in range(len(eta))],
        "machines": [{"id": f"m{n}", "technology": f"j{n}", "v": 1000, "FTM": 1000, "RMT": 0}
                     for n in range(len(eta))],
        "items": [{"id": "a", "d": [1.0] * T, "r": 1.0, "ep": {f"j{n}": e for n, e in enumerate(eta)}}],
        "costs": {},
    }
    return instance_from_dict(doc)


def make_plan(production, inventory=None):
    production = np.asarray(production, dtype=float)
    I, K, T = production.shape
    z = np.zeros((K, T))
    return Plan(variant="SPT", transitions=np.zeros((K, T), dtype=int), X=np.zeros((K, 16, T), dtype=int),
                shifts=np.zeros(T, dtype=int), opened=np.zeros((4, T), dtype=int),
                closed=np.zeros((4, T), dtype=int), production=production,
                inventory=np.zeros((I, T)) if inventory is None else np.asarray(inventory, dtype=float),
                maintenance=np.zeros((K, 0, T), dtype=int), clock=z, remaining_life=z, salvaged=z,
                objective=0.0, costs={})


def gamma_by_hand(eta):
    inv = [1 / Fraction(e) for e in eta]
    spread = [v - min(inv) for v in inv]
    return [s / sum(spread) for s in spread]


def test_gamma_formula_exact():
    gamma, eta = technology_weights(three_tech())
    assert eta.tolist() == [4.0, 2.0, 1.0]
    expect = gamma_by_hand((4, 2, 1))
    assert expect == [Fraction(0), Fraction(1, 4), Fraction(3, 4)]
    np.testing.assert_allclose(gamma, [float(f) for f in expect], rtol=1e-15)


def test_gamma_properties(example):
    gamma, eta = technology_weights(example)
    assert gamma.sum() == pytest.approx(1.0)
    assert gamma[np.argmax(eta)] == 0.0
    assert gamma.tolist() == [0.0, 1.0]


def test_degenerate_weights():
    with pytest.raises(DegenerateWeightsError):
        technology_weights(three_tech((2.0, 2.0)))
    with pytest.raises(DegenerateWeightsError):
        technology_weights(three_tech((2.0,)))


def test_emission_of_one_item():
    inst = three_tech((0.3, 0.2), T=2)
    plan = make_plan([[[100.0, 0.0], [0.0, 0.0]]])
    assert emissions_by_period(plan, inst).tolist() == pytest.approx([30.0, 0.0])


def test_holding_emissions_counted(example):
    inst = builtin_example(periods=1, simulated_periods=1, candidates_per_technology=1)
    prod = np.zeros((8, 2, 1))
    inv = np.zeros((8, 1))
    inv[3, 0] = 1000.0
    e = emissions_by_period(make_plan(prod, inv), inst)
    assert e[0] == pytest.approx(16.0)


def test_levels_and_carry_forward():
    inst = three_tech((0.3, 0.1), T=5)
    prod = np.zeros((1, 2, 5))
    prod[0, 0, 1] = 30.0
    prod[0, 1, 1] = 10.0
    prod[0, 1, 3] = 5.0
    R = transition_levels(make_plan(prod), inst)
    # no output at t=1 counts as dirty, t=3 repeats t=2
    np.testing.assert_allclose(R[1], [0.0, 0.25, 0.25, 1.0, 1.0])
    np.testing.assert_allclose(R.sum(axis=0), 1.0)


@pytest.mark.parametrize("beta, tau", [(0.0, 1), (0.3, 2), (0.4, 2), (0.75, 3), (0.8, 3), (1.0, 4)])
def test_transition_period_examples(beta, tau):
    R = np.array([[1.0, 0.6, 0.2, 0.0], [0.0, 0.4, 0.8, 1.0]])
    assert transition_period(R, np.array([0.0, 1.0]), beta) == tau


def test_transition_period_never():
    R = np.array([[1.0, 1.0], [0.0, 0.0]])
    assert transition_period(R, np.array([0.0, 1.0]), 0.5) is None
    with pytest.raises(ValueError):
        transition_period(R, np.array([0.0, 1.0]), 1.5)


def test_evaluate_truncates_to_decision_periods():
    inst = builtin_example(periods=2, simulated_periods=3, candidates_per_technology=1)
    prod = np.zeros((8, 2, 3))
    prod[:, 0, 0] = 1.0
    prod[:, 1, 1] = 1.0
    prod[:, 1, 2] = 1.0
    rep = evaluate(make_plan(prod), inst, betas=(0.5, 1.0), reference=make_plan(prod * 2))
    assert rep.levels.shape == (2, 2)
    assert rep.emissions.shape == (2,)
    np.testing.assert_allclose(rep.reference_emissions, 2 * rep.emissions)
    assert rep.tau == {0.5: 2, 1.0: 2}
    assert rep.final_level == 1.0
    np.testing.assert_allclose(rep.level_of("clean"), [0.0, 1.0])


def test_all_dirty_never_transitions():
    inst = builtin_example(periods=2, simulated_periods=2, candidates_per_technology=1)
    prod = np.zeros((8, 2, 2))
    prod[:, 0, :] = 5.0
    rep = evaluate(make_plan(prod), inst)
    assert all(t is None for t in rep.tau.values())
    assert rep.final_level == 0.0


def test_more_effective():
    inst = builtin_example(periods=3, simulated_periods=3, candidates_per_technology=1)
    early = np.zeros((8, 2, 3))
    early[:, 1, :] = 1.0
    late = np.zeros((8, 2, 3))
    late[:, 0, :2] = 1.0
    late[:, 1, 2] = 1.0
    a, b = evaluate(make_plan(early), inst), evaluate(make_plan(late), inst)
    assert more_effective(a, b, 0.5)
    assert not more_effective(b, a, 0.5)


def test_mean_emissions_average_members(example):
    eta = mean_emissions(example)
    assert eta[0] == pytest.approx(sum((0.30, 0.21, 0.25, 0.42, 0.27, 0.23, 0.18, 0.17)))
    assert eta[1] == pytest.approx(0.5 * eta[0])
