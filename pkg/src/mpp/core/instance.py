"""Domain types: instances, signaling mechanisms and invariant distributions.

Indexing conventions used throughout the package
-------------------------------------------------
* A state-action pair ``x = (w, a)`` is encoded as ``x = w * n_actions + a``.
  The set of pairs is called ``X`` and has ``n_pairs = n_states * n_actions``
  elements.
* A history slice of length ``m`` is a tuple ``(x_1, ..., x_m)`` ordered
  oldest first, encoded in base ``n_pairs`` with the most recent pair as
  the least significant digit.  Hence ``h % n_pairs`` is the most recent
  pair and ``h % n_pairs**j`` is the suffix of length ``j``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from mpp.errors import CapExceeded, InvalidMechanism

STRUCTURAL_TOL = 1e-8
ROW_SUM_TOL = 1e-12
DEFAULT_SLICE_CAP = 5


def slice_cap() -> int:
    """Return the slice-length cap, honouring ``MPP_SLICE_CAP`` when set."""
    raw = os.environ.get("MPP_SLICE_CAP")
    if raw is None or raw.strip() == "":
        return DEFAULT_SLICE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"MPP_SLICE_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError("MPP_SLICE_CAP must be at least 1")
    return cap


def enforce_cap(length: int) -> None:
    """Raise :class:`CapExceeded` when ``length`` exceeds the active cap."""
    cap = slice_cap()
    if length > cap:
        raise CapExceeded(length, cap)


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MppInstance:
    """A Markov persuasion process.

    Parameters
    ----------
    kernel : array_like, shape (n_states, n_actions, n_states)
        ``kernel[w, a, w2]`` is the probability of moving to ``w2`` after
        action ``a`` was taken in state ``w``.
    receiver_utility : array_like, shape (n_states, n_actions)
        Utility ``u(w, a)`` of the myopic receiver.
    sender_reward : array_like, shape (n_states, n_actions)
        Reward ``v(w, a)`` of the sender, expected in ``[0, 1]``.
    name : str
        Free-form label carried into reports.

    Shapes are checked on construction.  Stochasticity and reward bounds are
    reported by :func:`validate_instance` instead of raising, so broken
    inputs can still be inspected.
    """

    kernel: np.ndarray
    receiver_utility: np.ndarray
    sender_reward: np.ndarray
    name: str = ""

    def __post_init__(self):
        kernel = _frozen_array(self.kernel, 3, "kernel")
        utility = _frozen_array(self.receiver_utility, 2, "receiver_utility")
        reward = _frozen_array(self.sender_reward, 2, "sender_reward")
        n_states, n_actions, n_next = kernel.shape
        if n_next != n_states:
            raise ValueError(f"kernel must have shape (S, A, S), got {kernel.shape}")
        if utility.shape != (n_states, n_actions):
            raise ValueError(f"receiver_utility must have shape {(n_states, n_actions)}")
        if reward.shape != (n_states, n_actions):
            raise ValueError(f"sender_reward must have shape {(n_states, n_actions)}")
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "receiver_utility", utility)
        object.__setattr__(self, "sender_reward", reward)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernel.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.n_states * self.n_actions

    def pair_index(self, state: int, action: int) -> int:
        return state * self.n_actions + action

    def pair(self, index: int) -> tuple[int, int]:
        return divmod(int(index), self.n_actions)

    @property
    def pair_kernel(self) -> np.ndarray:
        """Next-state law indexed by pair: shape ``(n_pairs, n_states)``."""
        return self.kernel.reshape(self.n_pairs, self.n_states)

    @property
    def pair_reward(self) -> np.ndarray:
        """Sender reward indexed by pair: shape ``(n_pairs,)``."""
        return self.sender_reward.reshape(-1)


def incremental_utility(inst: MppInstance) -> np.ndarray:
    """Return ``du[w, a, b] = u(w, a) - u(w, b)``.

    The diagonal ``du[w, a, a]`` is identically zero.
    """
    u = inst.receiver_utility
    return u[:, :, None] - u[:, None, :]


def validate_instance(inst: MppInstance) -> list[str]:
    """List every violated instance invariant (empty when the instance is valid)."""
    problems: list[str] = []
    if inst.n_states < 1:
        problems.append("n_states must be at least 1")
    if inst.n_actions < 1:
        problems.append("n_actions must be at least 1")
    for name, arr in (
        ("kernel", inst.kernel),
        ("receiver_utility", inst.receiver_utility),
        ("sender_reward", inst.sender_reward),
    ):
        if not np.all(np.isfinite(arr)):
            problems.append(f"{name} contains non-finite entries")
    for w in range(inst.n_states):
        for a in range(inst.n_actions):
            row = inst.kernel[w, a]
            if np.any(row < 0):
                problems.append(f"negative transition probability at (ω={w},a={a})")
            total = row.sum()
            if abs(total - 1.0) > ROW_SUM_TOL:
                problems.append(f"row sum ≠ 1 at (ω={w},a={a}): {total:.12g}")
            v = inst.sender_reward[w, a]
            if not 0.0 <= v <= 1.0:
                problems.append(f"sender reward out of [0,1] at (ω={w},a={a}): {v:.6g}")
    return problems


def receiver_best_action(inst: MppInstance, state: int) -> int:
    """Receiver's best action in ``state`` with ties resolved to the lowest index."""
    return int(np.argmax(inst.receiver_utility[state]))


def receiver_best_actions(inst: MppInstance) -> np.ndarray:
    """Vector of :func:`receiver_best_action` over all states."""
    return np.argmax(inst.receiver_utility, axis=1)


# -----------------------------------------------------------------------------
# Signaling mechanisms
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class SignalingMechanism:
    """Stochastic recommendation rule with finite memory.

    ``table[h, w, a]`` is the probability of recommending ``a`` when the last
    ``memory`` state-action pairs encode to ``h`` and the current state is
    ``w``.  For ``memory == 0`` the first axis has length one.
    """

    memory: int
    table: np.ndarray

    def __post_init__(self):
        if int(self.memory) != self.memory or self.memory < 0:
            raise InvalidMechanism(f"memory must be a non-negative integer, got {self.memory}")
        table = np.array(self.table, dtype=float)
        if table.ndim != 3:
            raise InvalidMechanism(f"table must be 3-dimensional, got shape {table.shape}")
        n_windows, n_states, n_actions = table.shape
        if n_windows != (n_states * n_actions) ** self.memory:
            raise InvalidMechanism(
                f"table has {n_windows} windows, expected {(n_states * n_actions) ** self.memory}"
            )
        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise InvalidMechanism("table entries must be finite and non-negative")
        sums = table.sum(axis=2)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            h, w = np.argwhere(bad)[0]
            raise InvalidMechanism(f"row (h={h}, ω={w}) sums to {sums[h, w]:.15g}")
        table.setflags(write=False)
        object.__setattr__(self, "memory", int(self.memory))
        object.__setattr__(self, "table", table)

    @classmethod
    def normalized(cls, memory: int, table) -> "SignalingMechanism":
        """Build a mechanism after clipping negatives and renormalising rows.

        Rows whose mass is zero become uniform.
        """
        t = np.clip(np.array(table, dtype=float), 0.0, None)
        sums = t.sum(axis=2, keepdims=True)
        n_actions = t.shape[2]
        t = np.where(sums > 0, t / np.where(sums > 0, sums, 1.0), 1.0 / n_actions)
        return cls(memory, t)

    @classmethod
    def history_independent(cls, table) -> "SignalingMechanism":
        """Memory-0 mechanism from a ``(n_states, n_actions)`` table."""
        t = np.asarray(table, dtype=float)
        return cls.normalized(0, t[None, :, :])

    @property
    def n_states(self) -> int:
        return self.table.shape[1]

    @property
    def n_actions(self) -> int:
        return self.table.shape[2]

    @property
    def n_windows(self) -> int:
        return self.table.shape[0]

    def lifted(self, memory: int) -> "SignalingMechanism":
        """Same rule expressed with a longer memory (ignores the extra history)."""
        if memory < self.memory:
            raise InvalidMechanism("cannot lift a mechanism to a shorter memory")
        n_pairs = self.n_states * self.n_actions
        windows = np.arange(n_pairs**memory) % (n_pairs**self.memory)
        return SignalingMechanism(memory, self.table[windows])


def full_revelation(inst: MppInstance, memory: int = 0) -> SignalingMechanism:
    """Mechanism recommending the receiver's best action in the current state."""
    table = np.zeros((1, inst.n_states, inst.n_actions))
    table[0, np.arange(inst.n_states), receiver_best_actions(inst)] = 1.0
    return SignalingMechanism(0, table).lifted(memory)


def constant_recommendation(inst: MppInstance, action: int, memory: int = 0) -> SignalingMechanism:
    """Mechanism that always recommends ``action``."""
    table = np.zeros((1, inst.n_states, inst.n_actions))
    table[..., action] = 1.0
    return SignalingMechanism(0, table).lifted(memory)


def check_compatible(inst: MppInstance, sigma: SignalingMechanism) -> None:
    if sigma.n_states != inst.n_states or sigma.n_actions != inst.n_actions:
        raise InvalidMechanism(
            f"mechanism is for {sigma.n_states} states x {sigma.n_actions} actions, "
            f"instance has {inst.n_states} x {inst.n_actions}"
        )


# -----------------------------------------------------------------------------
# Invariant distributions
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantDistribution:
    """Probability vector over history slices of length ``slice_length``."""

    slice_length: int
    probs: np.ndarray
    n_states: int
    n_actions: int

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).reshape(-1)
        n_pairs = self.n_states * self.n_actions
        if self.slice_length < 1:
            raise ValueError("slice_length must be at least 1")
        if probs.size != n_pairs**self.slice_length:
            raise ValueError(
                f"expected {n_pairs ** self.slice_length} probabilities, got {probs.size}"
            )
        if np.any(probs < -1e-10) or abs(probs.sum() - 1.0) > 1e-10:
            raise ValueError("invariant probabilities must be non-negative and sum to one")
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_pairs(self) -> int:
        return self.n_states * self.n_actions

    def suffix(self, length: int) -> np.ndarray:
        """Marginal over the ``length`` most recent pairs (flattened)."""
        if not 0 <= length <= self.slice_length:
            raise ValueError("suffix length out of range")
        return self.probs.reshape(-1, self.n_pairs**length).sum(axis=0)

    def pairs(self) -> np.ndarray:
        """Marginal of the most recent pair as a ``(n_states, n_actions)`` table."""
        return self.suffix(1).reshape(self.n_states, self.n_actions)

    def states(self) -> np.ndarray:
        """Marginal of the most recent state."""
        return self.pairs().sum(axis=1)

    def actions(self) -> np.ndarray:
        """Marginal of the most recent action."""
        return self.pairs().sum(axis=0)

    def expected_reward(self, inst: MppInstance) -> float:
        return float(np.sum(self.pairs() * inst.sender_reward))
