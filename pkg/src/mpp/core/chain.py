"""Markov-chain machinery for the process induced by a signaling mechanism."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from mpp.core.instance import (
    InvariantDistribution,
    MppInstance,
    SignalingMechanism,
    check_compatible,
)
from mpp.errors import DegenerateGap, InternalError, NonUnichain, NumericalFailure

STATIONARY_RESIDUAL_TOL = 1e-10
SUPPORT_TOL = 0.0  # any strictly positive transition counts as an edge


def slice_length(sigma: SignalingMechanism) -> int:
    """Length of the slices on which the induced chain lives: ``max(k, 1)``."""
    return max(sigma.memory, 1)


@dataclass(frozen=True)
class SliceIndex:
    """Precomputed index arithmetic for chains on ``X^m``.

    Attributes
    ----------
    last : ndarray
        Most recent pair of every slice.
    window : ndarray
        Encoded suffix of length ``memory`` of every slice (the mechanism input).
    successors : ndarray, shape (N, n_pairs)
        ``successors[h, x]`` is the slice obtained by appending pair ``x``.
    """

    n_slices: int
    last: np.ndarray
    window: np.ndarray
    successors: np.ndarray


def slice_index(n_pairs: int, length: int, memory: int) -> SliceIndex:
    n = n_pairs**length
    h = np.arange(n)
    shifted = (h * n_pairs) % n
    return SliceIndex(
        n_slices=n,
        last=h % n_pairs,
        window=h % (n_pairs**memory),
        successors=shifted[:, None] + np.arange(n_pairs)[None, :],
    )


def transition_weights(inst: MppInstance, sigma: SignalingMechanism, idx: SliceIndex) -> np.ndarray:
    """``W[h, x]``: probability that the next pair is ``x`` given slice ``h``."""
    next_state = inst.pair_kernel[idx.last]  # (N, S)
    rec = sigma.table[idx.window]  # (N, S, A)
    return (next_state[:, :, None] * rec).reshape(idx.n_slices, inst.n_pairs)


def induced_chain(inst: MppInstance, sigma: SignalingMechanism, length: int | None = None) -> np.ndarray:
    """Transition matrix of the slice process when receivers follow recommendations.

    Parameters
    ----------
    inst, sigma
        Instance and mechanism.
    length : int, optional
        Slice length ``m``.  Defaults to ``max(sigma.memory, 1)``; any
        ``m >= sigma.memory`` (and ``m >= 1``) is accepted.

    Returns
    -------
    ndarray, shape (|X|^m, |X|^m)
        Row-stochastic matrix.
    """
    check_compatible(inst, sigma)
    m = slice_length(sigma) if length is None else int(length)
    if m < max(sigma.memory, 1):
        raise ValueError(f"slice length {m} is shorter than the mechanism memory {sigma.memory}")
    idx = slice_index(inst.n_pairs, m, sigma.memory)
    weights = transition_weights(inst, sigma, idx)
    matrix = np.zeros((idx.n_slices, idx.n_slices))
    np.put_along_axis(matrix, idx.successors, weights, axis=1)
    return matrix


def closed_classes(matrix: np.ndarray) -> list[np.ndarray]:
    """Closed communicating classes of the support graph of ``matrix``."""
    graph = csr_matrix(matrix > SUPPORT_TOL)
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    closed = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        rows = graph[members]
        if np.all(labels[rows.indices] == c):
            closed.append(members)
    return closed


def _power_iteration(matrix: np.ndarray, max_iter: int = 20000, tol: float = 1e-14) -> np.ndarray | None:
    n = matrix.shape[0]
    lazy = 0.5 * (matrix + np.eye(n))
    vec = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = vec @ lazy
        if np.abs(nxt - vec).sum() < tol:
            return nxt
        vec = nxt
    return None


def stationary_distribution(matrix: np.ndarray, cross_check: bool = True) -> np.ndarray:
    """Unique stationary distribution of a row-stochastic matrix.

    The vector is obtained from the balance equations with one equation
    replaced by normalisation.  For small chains the result is compared with
    lazy power iteration.

    Raises
    ------
    NonUnichain
        If the chain has two or more closed recurrent classes.
    NumericalFailure
        If the linear solve and power iteration disagree.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    classes = closed_classes(matrix)
    if len(classes) != 1:
        raise NonUnichain(f"chain has {len(classes)} closed classes")
    system = (np.eye(n) - matrix).T.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        pi = np.linalg.lstsq(system, rhs, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.abs(pi @ matrix - pi).max()
    if residual > STATIONARY_RESIDUAL_TOL:
        # one round of refinement on an ill-conditioned system
        pi = np.linalg.lstsq(system, rhs, rcond=None)[0]
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        residual = np.abs(pi @ matrix - pi).max()
        if residual > 1e-8:
            raise NumericalFailure(f"stationary residual {residual:.3g}")
    if cross_check and n <= 256:
        reference = _power_iteration(matrix)
        if reference is not None and np.abs(reference - pi).sum() > 1e-6:
            raise NumericalFailure("linear solve and power iteration disagree")
    return pi


def _balance_lp(matrix: np.ndarray, reward: np.ndarray) -> np.ndarray:
    from mpp import lpsolver

    n = matrix.shape[0]
    eq = np.vstack([matrix.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    backend = "simplex" if n <= 256 else "highs"
    sol = lpsolver.solve(lpsolver.LinearProgram(objective=reward, a_eq=eq, b_eq=rhs), backend=backend)
    if sol.status != lpsolver.Status.OPTIMAL:
        raise InternalError(f"balance LP returned {sol.status.value}")
    pi = np.clip(sol.x, 0.0, None)
    return pi / pi.sum()


def sender_preferred_invariant(inst: MppInstance, sigma: SignalingMechanism) -> InvariantDistribution:
    """Invariant distribution maximising the sender's expected reward.

    When the induced chain has a single closed class the invariant is unique
    and is returned by :func:`stationary_distribution`.  Otherwise the balance
    equations and normalisation define a linear program whose optimum is the
    sender-preferred invariant.
    """
    matrix = induced_chain(inst, sigma)
    m = slice_length(sigma)
    idx = slice_index(inst.n_pairs, m, sigma.memory)
    reward = inst.pair_reward[idx.last]
    try:
        pi = stationary_distribution(matrix, cross_check=False)
    except NonUnichain:
        pi = _balance_lp(matrix, reward)
    return InvariantDistribution(m, pi, inst.n_states, inst.n_actions)


def sender_preferred_invariant_lp(inst: MppInstance, sigma: SignalingMechanism) -> InvariantDistribution:
    """Linear-programming route to the sender-preferred invariant (no shortcut)."""
    matrix = induced_chain(inst, sigma)
    m = slice_length(sigma)
    idx = slice_index(inst.n_pairs, m, sigma.memory)
    pi = _balance_lp(matrix, inst.pair_reward[idx.last])
    return InvariantDistribution(m, pi, inst.n_states, inst.n_actions)


def long_run_reward(inst: MppInstance, sigma: SignalingMechanism) -> float:
    """Sender's long-run average reward under the sender-preferred invariant."""
    return sender_preferred_invariant(inst, sigma).expected_reward(inst)


def balance_residual(inst: MppInstance, sigma: SignalingMechanism, inv: InvariantDistribution) -> float:
    """Max-norm residual of the balance equations for ``inv`` under ``sigma``."""
    matrix = induced_chain(inst, sigma, inv.slice_length)
    return float(np.abs(inv.probs @ matrix - inv.probs).max())


# -----------------------------------------------------------------------------
# Mixing quantities for history-independent mechanisms
# -----------------------------------------------------------------------------


def _require_memoryless(sigma: SignalingMechanism) -> None:
    if sigma.memory != 0:
        raise ValueError("this quantity is defined for history-independent mechanisms only")


def state_chain(inst: MppInstance, sigma: SignalingMechanism) -> np.ndarray:
    """State-marginal chain ``T(w, w') = sum_a sigma(a|w) p(w'|w, a)``."""
    _require_memoryless(sigma)
    return np.einsum("wa,wav->wv", sigma.table[0], inst.kernel)


def lag_distances(inst: MppInstance, sigma: SignalingMechanism, max_lag: int) -> np.ndarray:
    """``d_l`` for ``l = 0..max_lag`` computed by repeated propagation."""
    _require_memoryless(sigma)
    matrix = induced_chain(inst, sigma)
    pi_state = sender_preferred_invariant(inst, sigma).states()
    law = inst.pair_kernel.copy()  # law of the state l+1 steps after x, l = 0
    out = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        out[lag] = np.abs(law - pi_state[None, :]).sum(axis=1).max()
        law = matrix @ law
    return out


def lag_distance(inst: MppInstance, sigma: SignalingMechanism, lag: int) -> float:
    """Worst-case l1 distance between the lagged state law and the invariant.

    For ``lag = l`` this is ``max_x ||Q^l(x, .) - pi||_1`` where ``Q^l(x, .)``
    is the law of the state ``l + 1`` transitions after the pair ``x`` (the
    state a receiver with lag ``l`` is uncertain about).  ``lag = 0`` is a
    single kernel application.
    """
    if lag < 0:
        raise ValueError("lag must be non-negative")
    _require_memoryless(sigma)
    matrix = induced_chain(inst, sigma)
    pi_state = sender_preferred_invariant(inst, sigma).states()
    law = np.linalg.matrix_power(matrix, lag) @ inst.pair_kernel
    return float(np.abs(law - pi_state[None, :]).sum(axis=1).max())


@dataclass(frozen=True)
class SpectralQuantities:
    """Absolute spectral gap and minimum invariant mass of a state chain."""

    gamma: float
    pi_min: float
    eigenvalues: np.ndarray

    @property
    def real_spectrum(self) -> bool:
        return bool(np.all(np.abs(self.eigenvalues.imag) <= 1e-12))

    def lag_bound(self, epsilon: float) -> int:
        """Smallest integer lag guaranteed by the spectral mixing bound."""
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        return int(math.ceil(math.log(2.0 / (epsilon * self.pi_min)) / self.gamma))


def spectral_quantities(inst: MppInstance, sigma: SignalingMechanism) -> SpectralQuantities:
    """Spectral gap ``1 - max |lambda|`` over non-unit eigenvalues, and ``pi_min``.

    Raises
    ------
    DegenerateGap
        If the gap is at most ``1e-12``.
    """
    chain = state_chain(inst, sigma)
    eig = np.linalg.eigvals(chain)
    unit = int(np.argmin(np.abs(eig - 1.0)))
    rest = np.delete(eig, unit)
    second = float(np.abs(rest).max()) if rest.size else 0.0
    gamma = 1.0 - second
    if gamma <= 1e-12:
        raise DegenerateGap(f"spectral gap {gamma:.3g}")
    pi_state = sender_preferred_invariant(inst, sigma).states()
    return SpectralQuantities(gamma=gamma, pi_min=float(pi_state.min()), eigenvalues=eig)


# -----------------------------------------------------------------------------
# Unichain check
# -----------------------------------------------------------------------------


def _period(adjacency: np.ndarray) -> int:
    """Period of an irreducible chain via BFS levels."""
    graph = csr_matrix(adjacency)
    order, _ = breadth_first_order(graph, 0, directed=True, return_predecessors=True)
    level = np.full(adjacency.shape[0], -1)
    level[0] = 0
    for node in order:
        for nxt in graph.indices[graph.indptr[node] : graph.indptr[node + 1]]:
            if level[nxt] < 0:
                level[nxt] = level[node] + 1
    g = 0
    rows, cols = np.nonzero(adjacency)
    for r, c in zip(rows, cols):
        g = math.gcd(g, int(level[r] + 1 - level[c]))
    return g


def check_unichain(inst: MppInstance) -> bool:
    """True iff every deterministic stationary policy gives an irreducible aperiodic state chain."""
    states = np.arange(inst.n_states)
    for policy in itertools.product(range(inst.n_actions), repeat=inst.n_states):
        chain = inst.kernel[states, np.array(policy)]
        adjacency = chain > 0
        n_comp, _ = connected_components(csr_matrix(adjacency), directed=True, connection="strong")
        if n_comp != 1:
            return False
        if _period(adjacency) != 1:
            return False
    return True
