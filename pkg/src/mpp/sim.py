"""Monte-Carlo simulation of the sender-receiver process.

A single integer seed is expanded with :class:`numpy.random.SeedSequence`
into three independent streams: the initial slice, state transitions and
signal draws.  Changing how signals are drawn therefore leaves the transition
stream untouched, which keeps paired comparisons meaningful.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from mpp.core import (
    MppInstance,
    SignalingMechanism,
    enforce_cap,
    induced_chain,
    parse_model,
    posterior_table,
    sender_preferred_invariant,
)
from mpp.core.chain import slice_length
from mpp.robust import SignalScheme


@dataclass(frozen=True)
class Trajectory:
    """One simulated path.

    ``signals[t]`` is the signal index (equal to the recommended action for
    plain mechanisms), ``recommendations[t]`` the action it recommends and
    ``actions[t]`` the action actually taken.
    """

    seed: int
    length: int
    behavior: str
    states: np.ndarray = field(repr=False)
    signals: np.ndarray = field(repr=False)
    recommendations: np.ndarray = field(repr=False)
    actions: np.ndarray = field(repr=False)
    frequencies: np.ndarray
    reward: float
    obedience_rate: float

    def summary(self) -> dict:
        row = {"seed": self.seed, "T": self.length, "behavior": self.behavior}
        S, A = self.frequencies.shape
        for w in range(S):
            for a in range(A):
                row[f"freq_{w}_{a}"] = f"{self.frequencies[w, a]:.6f}"
        row["reward"] = f"{self.reward:.6f}"
        row["obedience_rate"] = f"{self.obedience_rate:.6f}"
        return row


def summaries_to_csv(trajectories) -> str:
    rows = [t.summary() for t in trajectories]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _parse_behavior(behavior):
    """Return ``(name, model)`` with ``model`` ``None`` for followers."""
    if behavior == "follow":
        return "follow", None
    if isinstance(behavior, tuple) and behavior[0] == "best_respond":
        model = parse_model(behavior[1])
        return f"best_respond({model})", model
    if isinstance(behavior, str) and behavior.startswith("best_respond"):
        inner = behavior[len("best_respond") :].strip("():")
        model = parse_model(inner or "no")
        return f"best_respond({model})", model
    raise ValueError(f"unknown behaviour {behavior!r}")


def _as_scheme(inst: MppInstance, sigma):
    """Split a mechanism argument into (collapsed mechanism, signal table, signal actions)."""
    if isinstance(sigma, SignalScheme):
        mech = sigma.to_mechanism(inst.n_actions)
        return mech, sigma.table[None], np.asarray(sigma.actions)
    return sigma, np.asarray(sigma.table), np.arange(inst.n_actions)


def _signal_beliefs(inst, mech, table, model, invariant, is_scheme):
    """Posterior over states per (known slice, signal)."""
    if not is_scheme:
        post, _ = posterior_table(inst, mech, model, invariant)
        return np.transpose(post, (0, 2, 1))  # (G, signals, S)
    # memory-0 signal scheme: state law given the known slice, then Bayes per signal
    if model.kind == "no":
        laws = invariant.states()[None]
    else:
        enforce_cap(model.lag + 1)
        matrix = induced_chain(inst, mech)
        laws = np.linalg.matrix_power(matrix, model.lag) @ inst.pair_kernel
    joint = laws[:, :, None] * table[0][None]  # (G, S, signals)
    mass = joint.sum(axis=1, keepdims=True)
    return np.transpose(np.where(mass > 1e-12, joint / np.where(mass > 1e-12, mass, 1.0), 0.0), (0, 2, 1))


def simulate(inst: MppInstance, sigma, T: int, seed: int = 0, behavior="follow") -> Trajectory:
    """Simulate ``T`` periods starting from a slice drawn from the invariant.

    Parameters
    ----------
    sigma : SignalingMechanism or SignalScheme
    behavior : "follow" or ("best_respond", model)
        Best-responding receivers compute the exact posterior for the stated
        information model from the signal and the slice they know, then pick
        a utility-maximising action with ties resolved in favour of the
        recommendation.  Under a lagged model the first ``lag`` periods are a
        warm-up with obedient receivers and are not recorded.

    Raises
    ------
    CapExceeded
        For best responses whose slices exceed the cap.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    name, model = _parse_behavior(behavior)
    mech, table, signal_action = _as_scheme(inst, sigma)
    S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
    m = slice_length(mech)
    N = X**m
    n_windows = X**mech.memory
    invariant = sender_preferred_invariant(inst, mech)

    beliefs = None
    lag = 0
    if model is not None:
        beliefs = _signal_beliefs(inst, mech, table, model, invariant, isinstance(sigma, SignalScheme))
        lag = 0 if model.kind == "no" else model.lag

    init_ss, trans_ss, signal_ss = np.random.SeedSequence(seed).spawn(3)
    init_rng = np.random.default_rng(init_ss)
    total = T + lag
    u_trans = np.random.default_rng(trans_ss).random(total)
    u_signal = np.random.default_rng(signal_ss).random(total)

    trans_cdf = np.cumsum(inst.pair_kernel, axis=1)
    signal_cdf = np.cumsum(table, axis=2)
    utility = inst.receiver_utility

    h = int(init_rng.choice(N, p=invariant.probs))
    history = [h]
    states = np.empty(total, dtype=np.int64)
    signals = np.empty(total, dtype=np.int64)
    actions = np.empty(total, dtype=np.int64)
    for t in range(total):
        last = h % X
        w = min(int(np.searchsorted(trans_cdf[last], u_trans[t], side="right")), S - 1)
        window = h % n_windows if table.shape[0] > 1 else 0
        s = min(int(np.searchsorted(signal_cdf[window, w], u_signal[t], side="right")), table.shape[2] - 1)
        rec = int(signal_action[s])
        a = rec
        if model is not None and t >= lag:
            g = 0 if model.kind == "no" else history[t - lag]
            belief = beliefs[g, s]
            values = belief @ utility
            if values[rec] < values.max() - 1e-12:
                a = int(np.argmax(values))
        states[t], signals[t], actions[t] = w, s, a
        h = (h * X) % N + w * A + a
        history.append(h)

    states, signals, actions = states[lag:], signals[lag:], actions[lag:]
    recs = signal_action[signals]
    freq = np.zeros((S, A))
    np.add.at(freq, (states, actions), 1.0)
    freq /= T
    return Trajectory(
        seed=seed,
        length=T,
        behavior=name,
        states=states,
        signals=signals,
        recommendations=recs,
        actions=actions,
        frequencies=freq,
        reward=float(np.sum(freq * inst.sender_reward)),
        obedience_rate=float(np.mean(actions == recs)),
    )
