"""Seeded random instances and mechanisms for property tests and benchmarks."""

from __future__ import annotations

import numpy as np

from mpp import lpsolver
from mpp.benchmark import build_lp, extract_mechanism
from mpp.core import MppInstance, SignalingMechanism


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_instance(seed, n_states: int | None = None, n_actions: int | None = None, name: str = "") -> MppInstance:
    """Instance with Dirichlet(1) kernel rows and uniform utilities and rewards.

    Kernel rows are strictly positive almost surely, so every stationary
    policy induces an irreducible aperiodic chain (the instance is unichain).
    Sizes default to 2-4 states and 2-3 actions.
    """
    rng = _rng(seed)
    S = int(rng.integers(2, 5)) if n_states is None else n_states
    A = int(rng.integers(2, 4)) if n_actions is None else n_actions
    kernel = rng.dirichlet(np.ones(S), size=(S, A))
    kernel = np.clip(kernel, 1e-6, None)
    kernel /= kernel.sum(axis=2, keepdims=True)
    return MppInstance(
        kernel=kernel,
        receiver_utility=rng.random((S, A)),
        sender_reward=rng.random((S, A)),
        name=name or f"random-{S}x{A}",
    )


def iid_instance(seed, n_states: int = 3, n_actions: int = 2) -> MppInstance:
    """Instance whose next state ignores the current pair.

    Every kernel row equals the invariant state law, so the equality
    condition between the no-history and full-history optima is typically met.
    """
    rng = _rng(seed)
    row = rng.dirichlet(np.ones(n_states))
    kernel = np.broadcast_to(row, (n_states, n_actions, n_states)).copy()
    return MppInstance(
        kernel=kernel,
        receiver_utility=rng.random((n_states, n_actions)),
        sender_reward=rng.random((n_states, n_actions)),
        name=f"iid-{n_states}x{n_actions}",
    )


def single_state_instance(seed, n_actions: int = 2) -> MppInstance:
    rng = _rng(seed)
    return MppInstance(
        kernel=np.ones((1, n_actions, 1)),
        receiver_utility=rng.random((1, n_actions)),
        sender_reward=rng.random((1, n_actions)),
        name=f"single-state-{n_actions}",
    )


def corpus(n: int, seed: int = 0) -> list[MppInstance]:
    """``n`` random instances from independent child seeds of ``seed``."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [random_instance(np.random.default_rng(c), name=f"random-{i}") for i, c in enumerate(children)]


def random_persuasive_mechanism(inst: MppInstance, seed, n_mix: int = 3) -> SignalingMechanism:
    """Random obedient memory-0 mechanism.

    Solves the no-history occupancy LP for ``n_mix`` random reward vectors
    and mixes the optimal occupancy measures with Dirichlet weights.  The
    feasible set is convex, so the mixture is again feasible and the
    extracted mechanism is obedient in the no-history model.
    """
    rng = _rng(seed)
    base = build_lp(inst, "no")
    points = []
    for _ in range(n_mix):
        lp = lpsolver.LinearProgram(
            objective=rng.normal(size=base.n_vars), a_eq=base.a_eq, b_eq=base.b_eq, a_ge=base.a_ge, b_ge=base.b_ge
        )
        sol = lpsolver.solve(lp)
        points.append(sol.x)
    weights = rng.dirichlet(np.ones(n_mix))
    z = np.tensordot(weights, np.array(points), axes=1)
    return extract_mechanism(inst, z.reshape(1, inst.n_states, inst.n_actions), "no")
