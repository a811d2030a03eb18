import numpy as np
import pytest

from mpp.benchmark import solve_benchmark
from mpp.core import MppInstance, SignalingMechanism, check_persuasive, constant_recommendation, sender_preferred_invariant
from mpp.errors import CapExceeded
from mpp.generators import random_instance, random_persuasive_mechanism
from mpp.robust import build_robust_mechanism, persuasive_lag
from mpp.sim import simulate, summaries_to_csv


def test_example_always_one(ex1):
    T = 100_000
    traj = simulate(ex1, constant_recommendation(ex1, 1), T, seed=0)
    freq = traj.frequencies.sum(axis=1)
    # the state chain is a two-state chain with flip probability 0.8; its
    # asymptotic variance for the time average is p(1-p)(1+lambda)/(1-lambda)
    lam = -0.6
    sd = np.sqrt(0.25 * (1 + lam) / (1 - lam) / T)
    assert abs(freq[0] - 0.5) <= 3 * sd
    assert traj.reward == pytest.approx(1.0)
    assert traj.obedience_rate == 1.0


def test_constant_reward_is_exact():
    inst = random_instance(3)
    inst = MppInstance(kernel=inst.kernel, receiver_utility=inst.receiver_utility, sender_reward=np.full_like(inst.sender_reward, 0.37))
    traj = simulate(inst, random_persuasive_mechanism(inst, 0), 500, seed=4)
    assert traj.reward == pytest.approx(0.37, abs=1e-12)
    assert traj.frequencies.sum() == pytest.approx(1.0)


def test_deterministic_and_seed_sensitive(ex1):
    sigma = solve_benchmark(ex1, "full").mechanism
    a = simulate(ex1, sigma, 2000, seed=5)
    b = simulate(ex1, sigma, 2000, seed=5)
    c = simulate(ex1, sigma, 2000, seed=6)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.actions, b.actions)
    assert not np.array_equal(a.states, c.states)


def test_signal_stream_does_not_move_transition_stream(ex1):
    """With identical actions, changing only the signal rule leaves the state path fixed."""
    one = constant_recommendation(ex1, 1)
    mixed = SignalingMechanism(0, [[[0.0, 1.0], [0.0, 1.0]]])
    a = simulate(ex1, one, 1000, seed=2)
    b = simulate(ex1, mixed, 1000, seed=2)
    np.testing.assert_array_equal(a.states, b.states)


def test_follow_and_best_respond_coincide_for_obedient_mechanisms():
    for seed in range(4):
        inst = random_instance(seed)
        for model in ("no", "full"):
            sigma = solve_benchmark(inst, model).mechanism
            assert check_persuasive(inst, sigma, model).ok
            f = simulate(inst, sigma, 3000, seed=seed)
            b = simulate(inst, sigma, 3000, seed=seed, behavior=("best_respond", model))
            np.testing.assert_array_equal(f.actions, b.actions)
            assert b.obedience_rate == 1.0


def test_best_response_deviates_from_disobedient_mechanism(ex1):
    # always recommending 1 is not obedient when the receiver sees the full history
    traj = simulate(ex1, constant_recommendation(ex1, 1), 5000, seed=0, behavior=("best_respond", "full"))
    assert traj.obedience_rate < 0.9


def test_frequencies_converge_to_invariant():
    inst = random_instance(7)
    sigma = random_persuasive_mechanism(inst, 7)
    pi = sender_preferred_invariant(inst, sigma).pairs()
    T = 50_000
    gaps = [np.abs(simulate(inst, sigma, T, seed=s).frequencies - pi).sum() for s in range(5)]
    assert max(gaps) <= 5 * np.sqrt(inst.n_pairs / T)


def test_robust_scheme_obeyed_with_lagged_information(ex1, monkeypatch):
    monkeypatch.setenv("MPP_SLICE_CAP", "8")
    cert = build_robust_mechanism(ex1, 0.01)
    ell = persuasive_lag(ex1, cert).exact
    traj = simulate(ex1, cert.scheme, 20_000, seed=0, behavior=("best_respond", f"lag({ell})"))
    assert traj.obedience_rate == 1.0
    assert traj.reward == pytest.approx(cert.payoff, abs=0.02)


def test_oversized_best_response_slices(ex1, monkeypatch):
    monkeypatch.setenv("MPP_SLICE_CAP", "3")
    with pytest.raises(CapExceeded):
        simulate(ex1, constant_recommendation(ex1, 1), 10, behavior=("best_respond", "lag(3)"))


def test_summary_csv(ex1):
    traj = simulate(ex1, constant_recommendation(ex1, 1), 100, seed=1)
    text = summaries_to_csv([traj])
    header, row = text.strip().split("\n")
    assert header.startswith("seed,T,behavior,freq_0_0")
    assert row.startswith("1,100,follow,")


def test_bad_arguments(ex1):
    with pytest.raises(ValueError):
        simulate(ex1, constant_recommendation(ex1, 1), 0)
    with pytest.raises(ValueError):
        simulate(ex1, constant_recommendation(ex1, 1), 10, behavior="wander")
