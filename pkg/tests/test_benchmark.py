import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpp.benchmark import (
    build_lp,
    check_equality_condition,
    extract_mechanism,
    occupancy_from_mechanism,
    solve_benchmark,
)
from mpp.core import (
    MppInstance,
    SignalingMechanism,
    check_persuasive,
    lag,
    long_run_reward,
    sender_preferred_invariant,
)
from mpp.generators import corpus, iid_instance, random_instance, single_state_instance


def test_example_no_history_optimum(ex1):
    sol = solve_benchmark(ex1, "no")
    assert sol.value == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(sol.mechanism.table[0], [[0, 1], [0, 1]], atol=1e-12)
    np.testing.assert_allclose(sol.posteriors[1], [0.5, 0.5], atol=1e-12)
    assert 0 not in sol.posteriors


def test_example_full_history_optimum(ex1):
    sol = solve_benchmark(ex1, "full")
    assert sol.value == pytest.approx(0.52, abs=1e-9)
    assert sol.mechanism.memory == 1
    assert check_persuasive(ex1, sol.mechanism, "full", tol=1e-8).ok


def test_lp_sizes_for_example(ex1):
    lp = build_lp(ex1, "no")
    assert lp.n_vars == 4
    assert lp.labels["obedience_rows"] == 4
    assert lp.labels["flow_rows"] == 2
    assert lp.labels["normalization_rows"] == 1
    assert build_lp(ex1, "full").n_vars == 16


def test_single_action_value_is_forced_average():
    inst = random_instance(4, n_states=3, n_actions=1)
    sol = solve_benchmark(inst, "no")
    sigma = SignalingMechanism(0, np.ones((1, 3, 1)))
    assert sol.value == pytest.approx(long_run_reward(inst, sigma), abs=1e-10)


def test_unknown_model():
    with pytest.raises(ValueError):
        build_lp(random_instance(0), "partial")


def _best_deterministic_value(inst):
    best = -np.inf
    for actions in itertools.product(range(inst.n_actions), repeat=inst.n_states):
        table = np.zeros((1, inst.n_states, inst.n_actions))
        table[0, np.arange(inst.n_states), list(actions)] = 1.0
        best = max(best, long_run_reward(inst, SignalingMechanism(0, table)))
    return best


def test_aligned_interests_value_is_best_policy(two_state_aligned):
    """With u = v, full revelation is optimal; compare with policy enumeration."""
    inst = two_state_aligned
    sol = solve_benchmark(inst, "no")
    fr = long_run_reward(inst, SignalingMechanism(0, np.eye(2)[None]))
    assert sol.value == pytest.approx(fr, abs=1e-9)
    assert sol.value <= _best_deterministic_value(inst) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_solution_invariants(seed):
    inst = random_instance(seed)
    for model in ("no", "full"):
        sol = solve_benchmark(inst, model)
        assert check_persuasive(inst, sol.mechanism, model, tol=1e-8).ok
        assert sol.value == pytest.approx(sol.invariant.expected_reward(inst), abs=1e-8)
        for belief in sol.posteriors.values():
            assert belief.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_full_history_never_beats_no_history(seed):
    inst = random_instance(seed)
    assert solve_benchmark(inst, "full").value <= solve_benchmark(inst, "no").value + 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_simplex_agrees_with_highs(seed):
    inst = random_instance(seed)
    for model in ("no", "full"):
        a = solve_benchmark(inst, model).value
        b = solve_benchmark(inst, model, backend="highs").value
        assert a == pytest.approx(b, abs=1e-8)


def test_round_trip_through_mechanism():
    for inst in corpus(10, seed=3):
        for model in ("no", "full"):
            sol = solve_benchmark(inst, model)
            z = occupancy_from_mechanism(inst, sol.mechanism, model)
            assert float(z.ravel() @ build_lp(inst, model).objective) == pytest.approx(sol.value, abs=1e-8)
            again = extract_mechanism(inst, z, model)
            assert long_run_reward(inst, again) == pytest.approx(sol.value, abs=1e-8)


def test_no_history_posterior_is_conditional_invariant():
    for inst in corpus(5, seed=8):
        sol = solve_benchmark(inst, "no")
        pi = sender_preferred_invariant(inst, sol.mechanism).pairs()
        for a, belief in sol.posteriors.items():
            np.testing.assert_allclose(belief, pi[:, a] / pi[:, a].sum(), atol=1e-8)


def test_full_optimum_is_obedient_with_lagged_information():
    """Lagged beliefs average full-history beliefs, so obedience is inherited."""
    for inst in corpus(8, seed=21):
        sigma = solve_benchmark(inst, "full").mechanism
        assert check_persuasive(inst, sigma, lag(1), tol=1e-8).ok
        assert check_persuasive(inst, sigma, lag(2), tol=1e-8).ok


# -- equality condition ---------------------------------------------------------------


def test_equality_fails_on_example(ex1):
    result = check_equality_condition(ex1)
    assert not result.holds
    assert result.failing_clause == "convex-hull"
    assert result.failing_pairs == (0, 1, 2, 3)
    assert result.describe().startswith("condition FAILS")


def test_equality_holds_for_single_state():
    inst = single_state_instance(2, n_actions=3)
    result = check_equality_condition(inst)
    assert result.holds
    assert result.witness_value == pytest.approx(solve_benchmark(inst, "full").value, abs=1e-9)


def test_equality_witness_on_iid_instances():
    hits = 0
    for seed in range(30):
        inst = iid_instance(seed)
        result = check_equality_condition(inst)
        if not result.holds:
            continue
        hits += 1
        full = solve_benchmark(inst, "full").value
        assert abs(result.value_no - full) <= 1e-7
        assert check_persuasive(inst, result.witness, "full", tol=1e-8).ok
        assert result.describe().startswith("holds; OPT(no)=OPT(full)=")
    assert hits >= 10


def test_dependent_beliefs_reported():
    # two recommendations with the same belief: a rank-deficient belief matrix
    kernel = np.full((2, 3, 2), 0.5)
    u = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    v = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]])
    inst = MppInstance(kernel=kernel, receiver_utility=u, sender_reward=v)
    sol = solve_benchmark(inst, "no")
    beliefs = dict(sol.posteriors)
    if len(beliefs) >= 2 and np.linalg.matrix_rank(np.array(list(beliefs.values())), tol=1e-9) < len(beliefs):
        assert check_equality_condition(inst, sol).failing_clause == "independence"
    else:
        assert check_equality_condition(inst, sol).holds
