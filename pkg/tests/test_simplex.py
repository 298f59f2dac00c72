import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from captrans.solver.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, BoundedSimplex


def reference(A, sense, rhs, c, lb, ub):
    A = np.asarray(A, dtype=float)
    le, ge, eq = (sense == s for s in "<>=")
    A_ub = np.vstack([A[le], -A[ge]])
    b_ub = np.concatenate([rhs[le], -rhs[ge]])
    res = linprog(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=A[eq] if eq.any() else None, b_eq=rhs[eq] if eq.any() else None,
                  bounds=[(l, None if np.isinf(u) else u) for l, u in zip(lb, ub)], method="highs")
    return res


def random_lp(rng, m, n, box=True):
    A = rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.6)
    x0 = rng.uniform(0, 5, n)
    sense = rng.choice(np.array(["<", ">", "="]), size=m, p=[0.45, 0.35, 0.2])
    act = A @ x0
    rhs = np.where(sense == "<", act + rng.uniform(0, 2, m), np.where(sense == ">", act - rng.uniform(0, 2, m), act))
    c = rng.normal(size=n)
    lb = np.zeros(n)
    ub = np.full(n, 10.0) if box else np.where(rng.random(n) < 0.5, 10.0, np.inf)
    return A, sense, rhs, c, lb, ub


def test_trivial_bounds_only():
    lp = BoundedSimplex(sp.csr_matrix((0, 2)), np.array([], dtype="U1"), np.array([]),
                        np.array([1.0, -1.0]), np.array([0.0, 0.0]), np.array([3.0, 4.0]))
    res = lp.solve()
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(-4.0)
    np.testing.assert_allclose(res.x, [0.0, 4.0])


def test_small_textbook_lp():
    # max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
    A = np.array([[1, 0], [0, 2], [3, 2]], dtype=float)
    lp = BoundedSimplex(A, np.array(["<"] * 3), np.array([4.0, 12.0, 18.0]), np.array([-3.0, -5.0]),
                        np.zeros(2), np.full(2, np.inf))
    res = lp.solve()
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(-36.0)
    np.testing.assert_allclose(res.x, [2.0, 6.0], atol=1e-9)


def test_infeasible():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    lp = BoundedSimplex(A, np.array(["<", ">"]), np.array([1.0, 2.0]), np.zeros(2), np.zeros(2), np.full(2, 5.0))
    assert lp.solve().status == INFEASIBLE


def test_crossed_bounds_are_infeasible():
    lp = BoundedSimplex(np.array([[1.0]]), np.array(["<"]), np.array([1.0]), np.array([1.0]),
                        np.zeros(1), np.ones(1))
    assert lp.solve(lb=np.array([2.0]), ub=np.array([1.0])).status == INFEASIBLE


def test_unbounded():
    A = np.array([[1.0, -1.0]])
    lp = BoundedSimplex(A, np.array(["<"]), np.array([1.0]), np.array([-1.0, 0.0]), np.zeros(2),
                        np.full(2, np.inf))
    assert lp.solve().status == UNBOUNDED


def test_bound_changes_and_warm_start():
    rng = np.random.default_rng(5)
    A, sense, rhs, c, lb, ub = random_lp(rng, 8, 12)
    lp = BoundedSimplex(A, sense, rhs, c, lb, ub)
    first = lp.solve()
    assert first.status == OPTIMAL
    ub2 = ub.copy()
    ub2[np.argmax(first.x)] = np.floor(first.x.max() / 2)
    warm = lp.solve(lb, ub2, basis=first.basis)
    ref = reference(A, sense, rhs, c, lb, ub2)
    if ref.status == 0:
        assert warm.status == OPTIMAL
        assert warm.value == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
    else:
        assert warm.status == INFEASIBLE


@pytest.mark.parametrize("seed", range(40))
def test_random_lps_against_highs(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 15)), int(rng.integers(1, 20))
    A, sense, rhs, c, lb, ub = random_lp(rng, m, n, box=bool(seed % 2))
    res = BoundedSimplex(A, sense, rhs, c, lb, ub).solve()
    ref = reference(A, sense, rhs, c, lb, ub)
    if ref.status == 0:
        assert res.status == OPTIMAL
        assert res.value == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
        viol = np.asarray(A) @ res.x - rhs
        assert np.all(viol[sense == "<"] <= 1e-7)
        assert np.all(viol[sense == ">"] >= -1e-7)
        assert np.all(np.abs(viol[sense == "="]) <= 1e-7)
    elif ref.status == 3:
        assert res.status == UNBOUNDED
    elif ref.status == 2 and "unbounded" not in ref.message.lower():
        assert res.status == INFEASIBLE


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(1, 10), n=st.integers(1, 10))
def test_property_matches_highs_on_boxed_lps(seed, m, n):
    rng = np.random.default_rng(seed)
    A, sense, rhs, c, lb, ub = random_lp(rng, m, n, box=True)
    res = BoundedSimplex(A, sense, rhs, c, lb, ub).solve()
    ref = reference(A, sense, rhs, c, lb, ub)
    assert ref.status == 0  # feasible by construction and boxed
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
