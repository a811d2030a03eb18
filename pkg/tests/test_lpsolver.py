import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpp import lpsolver
from mpp.lpsolver import LinearProgram, Status, solve


def test_simple_equality_program():
    sol = solve(LinearProgram(objective=[1, 0], a_eq=[[1, 1]], b_eq=[1]))
    assert sol.status is Status.OPTIMAL
    assert sol.value == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-12)


def test_infeasible_program():
    lp = LinearProgram(objective=[1, 0], a_eq=[[1, 1]], b_eq=[1], a_ge=[[1, 0]], b_ge=[2])
    assert solve(lp).status is Status.INFEASIBLE


def test_unbounded_program():
    assert solve(LinearProgram(objective=[1, 0])).status is Status.UNBOUNDED
    assert solve(LinearProgram(objective=[1, 0], a_ge=[[1, -1]], b_ge=[0])).status is Status.UNBOUNDED


def test_negative_right_hand_sides_are_handled():
    # x1 - x2 = -1, maximise -x2  ->  x2 = 1, x1 = 0
    sol = solve(LinearProgram(objective=[0, -1], a_eq=[[1, -1]], b_eq=[-1]))
    assert sol.optimal
    assert sol.value == pytest.approx(-1.0)


def test_redundant_equalities_are_dropped():
    a = [[1, 1, 0], [2, 2, 0], [0, 0, 1]]
    sol = solve(LinearProgram(objective=[1, 2, 1], a_eq=a, b_eq=[1, 2, 0.5]))
    assert sol.optimal
    assert sol.value == pytest.approx(2.5)


def test_degenerate_program_terminates():
    # a classic cycling example for the textbook largest-coefficient rule (Beale)
    c = np.array([0.75, -150, 0.02, -6])
    a = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    lp = LinearProgram(objective=c, a_ge=-a, b_ge=-np.array([0, 0, 1.0]))
    sol = solve(lp)
    assert sol.optimal
    assert sol.value == pytest.approx(0.05, abs=1e-9)


def test_empty_constraint_set():
    assert solve(LinearProgram(objective=[-1.0, -2.0])).value == 0.0


def test_non_finite_coefficients_rejected():
    with pytest.raises(ValueError):
        LinearProgram(objective=[np.nan])


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve(LinearProgram(objective=[1.0], a_eq=[[1.0]], b_eq=[1.0]), backend="glpk")


def _vertex_oracle(c, a_eq, b_eq):
    """Best basic feasible solution by enumerating every column basis."""
    m, n = a_eq.shape
    best = None
    for cols in itertools.combinations(range(n), m):
        basis = a_eq[:, cols]
        if abs(np.linalg.det(basis)) < 1e-10:
            continue
        xb = np.linalg.solve(basis, b_eq)
        if np.any(xb < -1e-10):
            continue
        value = float(c[list(cols)] @ xb)
        best = value if best is None else max(best, value)
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    m, n = 2, 5
    a = rng.normal(size=(m, n))
    x0 = rng.random(n)
    b = a @ x0  # feasible by construction
    a = np.vstack([a, np.ones(n)])  # bounded: simplex-like box
    b = np.append(b, x0.sum())
    c = rng.normal(size=n)
    sol = solve(LinearProgram(objective=c, a_eq=a, b_eq=b))
    assert sol.optimal
    assert sol.value == pytest.approx(_vertex_oracle(c, a, b), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_agrees_with_highs_on_random_programs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 12))
    m_eq, m_ge = int(rng.integers(0, 4)), int(rng.integers(0, 6))
    x0 = rng.random(n)
    a_eq = rng.normal(size=(m_eq, n))
    a_ge = rng.normal(size=(m_ge, n))
    lp = LinearProgram(
        objective=rng.normal(size=n),
        a_eq=np.vstack([a_eq, np.ones((1, n))]),
        b_eq=np.append(a_eq @ x0, x0.sum()),
        a_ge=a_ge,
        b_ge=a_ge @ x0 - rng.random(m_ge),
    )
    ours = solve(lp)
    ref = solve(lp, backend="highs")
    assert ours.status is ref.status is Status.OPTIMAL
    assert ours.value == pytest.approx(ref.value, abs=1e-7)
    assert lp.max_violation(ours.x) <= 1e-9


def test_max_violation_reports_every_block():
    lp = LinearProgram(objective=[0, 0], a_eq=[[1, 1]], b_eq=[1], a_ge=[[1, 0]], b_ge=[0.5])
    assert lp.max_violation(np.array([0.5, 0.5])) == 0.0
    assert lp.max_violation(np.array([0.2, 0.8])) == pytest.approx(0.3)
    assert lp.max_violation(np.array([-0.1, 1.1])) == pytest.approx(0.6)


def test_pivot_tolerance_is_small():
    assert lpsolver.PIVOT_TOL <= 1e-8
