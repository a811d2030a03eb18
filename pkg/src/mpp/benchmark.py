"""Exact benchmark solutions for the no-history and full-history models.

Both problems are linear programs over occupancy measures ``z(w, a)`` where
``w`` ranges over ``W_no = Omega`` or ``W_full = X x Omega`` (previous pair and
current state).  Mechanisms are read off the optimal occupancy measure by
conditioning on ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mpp import lpsolver
from mpp.core import (
    FULL_HISTORY,
    NO_HISTORY,
    InvariantDistribution,
    MppInstance,
    SignalingMechanism,
    check_persuasive,
    incremental_utility,
    long_run_reward,
    receiver_best_actions,
)
from mpp.errors import SolverError, WitnessVerificationFailed

EXTRACTION_TOL = 1e-12
RANK_TOL = 1e-9
WITNESS_TOL = 1e-7

MODELS = ("no", "full")


def _model_name(model) -> str:
    name = str(model).strip().lower()
    if name not in MODELS:
        raise ValueError(f"benchmark model must be 'no' or 'full', got {model!r}")
    return name


@dataclass(frozen=True)
class PersuasionSolution:
    """Optimal benchmark mechanism and its supporting quantities.

    Attributes
    ----------
    model : str
        ``"no"`` or ``"full"``.
    value : float
        Optimal long-run sender reward.
    mechanism : SignalingMechanism
        Memory 0 for ``"no"`` and memory 1 for ``"full"``.
    invariant : InvariantDistribution
        Invariant over single pairs assembled from the occupancy measure.
    posteriors : dict
        ``"no"``: recommendation ``a`` -> belief over states.
        ``"full"``: ``(x, a)`` with ``x`` the previous pair -> belief.
        Only recommendations with positive probability appear.
    occupancy : ndarray
        Optimal ``z`` with shape ``(|W|, n_actions)``.
    """

    model: str
    value: float
    mechanism: SignalingMechanism
    invariant: InvariantDistribution
    posteriors: dict = field(repr=False)
    occupancy: np.ndarray = field(repr=False)


def build_lp(inst: MppInstance, model) -> lpsolver.LinearProgram:
    """Occupancy-measure LP for the no-history or full-history model.

    Variable ``z[w, a]`` sits at column ``w * n_actions + a``.  For the
    full-history model ``w = x * n_states + state`` with ``x`` the previous
    pair.

    Rows:

    * obedience, one per ``(x, a, a')`` including ``a == a'`` (those rows read
      ``0 >= 0``), with a single ``x`` for the no-history model;
    * flow, one per ``w``;
    * normalisation.
    """
    model = _model_name(model)
    S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
    du = incremental_utility(inst)
    pk = inst.pair_kernel
    if model == "no":
        n_w = S
        # obedience: sum_w z(w, a) du(w, a, b) >= 0
        obedience = np.zeros((A, A, S, A))
        for a in range(A):
            obedience[a, :, :, a] = du[:, a, :].T
        obedience = obedience.reshape(A * A, S * A)
        # flow: sum_{w', a'} z(w', a') p(w | w', a') = sum_a z(w, a)
        flow = pk.T.copy()  # (S, S*A): coefficient of z(w', a') in row w
        for w in range(S):
            flow[w, w * A : (w + 1) * A] -= 1.0
    else:
        n_w = X * S
        obedience = np.zeros((X, A, A, X, S, A))
        for x in range(X):
            for a in range(A):
                obedience[x, a, :, x, :, a] = du[:, a, :].T
        obedience = obedience.reshape(X * A * A, n_w * A)
        # row (x=(s, b), w): sum_{x'} z((x', s), b) p(w | s, b) = sum_a z((x, w), a)
        flow = np.zeros((X, S, X, S, A))
        for x in range(X):
            s, b = divmod(x, A)
            flow[x, :, :, s, b] += pk[x][:, None]
            for w in range(S):
                flow[x, w, x, w, :] -= 1.0
        flow = flow.reshape(X * S, n_w * A)
    n = n_w * A
    objective = np.tile(inst.pair_reward, n // X)
    eq = np.vstack([flow, np.ones((1, n))])
    rhs = np.zeros(eq.shape[0])
    rhs[-1] = 1.0
    return lpsolver.LinearProgram(
        objective=objective,
        a_eq=eq,
        b_eq=rhs,
        a_ge=obedience,
        b_ge=np.zeros(obedience.shape[0]),
        labels={
            "model": model,
            "n_w": n_w,
            "obedience_rows": obedience.shape[0],
            "flow_rows": flow.shape[0],
            "normalization_rows": 1,
        },
    )


def extract_mechanism(inst: MppInstance, occupancy: np.ndarray, model) -> SignalingMechanism:
    """Condition the occupancy measure on ``w``; unreachable ``w`` get full revelation."""
    model = _model_name(model)
    S, A = inst.n_states, inst.n_actions
    z = np.asarray(occupancy, dtype=float).reshape(-1, S, A)
    best = receiver_best_actions(inst)
    fallback = np.zeros((S, A))
    fallback[np.arange(S), best] = 1.0
    mass = z.sum(axis=2, keepdims=True)
    table = np.where(mass > EXTRACTION_TOL, z / np.where(mass > EXTRACTION_TOL, mass, 1.0), fallback[None])
    return SignalingMechanism.normalized(0 if model == "no" else 1, table)


def solve_benchmark(inst: MppInstance, model, backend: str = "simplex") -> PersuasionSolution:
    """Solve the benchmark LP and assemble the optimal mechanism.

    Raises
    ------
    SolverError
        If the LP is not solved to optimality (cannot happen on valid input).
    """
    model = _model_name(model)
    lp = build_lp(inst, model)
    sol = lpsolver.solve(lp, backend=backend)
    if not sol.optimal:
        raise SolverError(f"benchmark LP ({model}) returned {sol.status.value}")
    S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
    z = sol.x.reshape(-1, S, A)
    mechanism = extract_mechanism(inst, z, model)
    pairs = z.sum(axis=0)  # (S, A): marginal of the current pair
    pairs = pairs / pairs.sum()
    invariant = InvariantDistribution(1, pairs.reshape(-1), S, A)
    posteriors: dict = {}
    if model == "no":
        for a in range(A):
            mass = z[0, :, a].sum()
            if mass > EXTRACTION_TOL:
                posteriors[a] = z[0, :, a] / mass
    else:
        zf = z.reshape(X, S, A)
        for x in range(X):
            for a in range(A):
                mass = zf[x, :, a].sum()
                if mass > EXTRACTION_TOL:
                    posteriors[(x, a)] = zf[x, :, a] / mass
    return PersuasionSolution(
        model=model,
        value=float(sol.value),
        mechanism=mechanism,
        invariant=invariant,
        posteriors=posteriors,
        occupancy=z.reshape(-1, A),
    )


def occupancy_from_mechanism(inst: MppInstance, sigma: SignalingMechanism, model) -> np.ndarray:
    """Rebuild ``z`` from a mechanism and its invariant (inverse of extraction)."""
    from mpp.core import sender_preferred_invariant

    model = _model_name(model)
    inv = sender_preferred_invariant(inst, sigma)
    pair_mass = inv.suffix(1)  # law of the previous pair
    pk = inst.pair_kernel
    if model == "no":
        if sigma.memory != 0:
            raise ValueError("no-history occupancy needs a memory-0 mechanism")
        state_mass = pair_mass @ pk
        return state_mass[:, None] * sigma.table[0]
    lifted = sigma.lifted(1) if sigma.memory == 0 else sigma
    if lifted.memory != 1:
        raise ValueError("full-history occupancy needs memory at most 1")
    z = pair_mass[:, None, None] * pk[:, :, None] * lifted.table
    return z.reshape(-1, inst.n_actions)


# -----------------------------------------------------------------------------
# Equality condition between the two benchmarks
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class EqualityCheck:
    """Outcome of :func:`check_equality_condition`.

    ``failing_clause`` is ``None`` when the condition holds, otherwise
    ``"independence"`` or ``"convex-hull"``; ``failing_pairs`` lists the
    pairs ``x`` whose kernel row is outside the hull of the beliefs.
    """

    holds: bool
    failing_clause: str | None
    beliefs: dict
    singular_values: np.ndarray
    failing_pairs: tuple
    witness: SignalingMechanism | None
    value_no: float
    witness_value: float | None

    def describe(self) -> str:
        if self.holds:
            return f"holds; OPT(no)=OPT(full)={self.value_no:.6f}"
        if self.failing_clause == "independence":
            return "condition FAILS: recommended beliefs are linearly dependent"
        pairs = ", ".join(str(x) for x in self.failing_pairs)
        return f"condition FAILS: kernel rows outside the belief hull for pairs {pairs}"


def _hull_weights(beliefs: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """Convex weights expressing ``target`` in the hull of ``beliefs`` rows, or ``None``."""
    k = beliefs.shape[0]
    eq = np.vstack([beliefs.T, np.ones((1, k))])
    rhs = np.concatenate([target, [1.0]])
    sol = lpsolver.solve(lpsolver.LinearProgram(objective=np.zeros(k), a_eq=eq, b_eq=rhs))
    return sol.x if sol.optimal else None


def check_equality_condition(inst: MppInstance, solution: PersuasionSolution | None = None) -> EqualityCheck:
    """Test the sufficient condition for ``OPT(no) == OPT(full)`` and build a witness.

    The condition asks that the beliefs induced by the no-history optimum be
    linearly independent and that every kernel row ``p(.|x)`` lie in their
    convex hull.  When it holds, the memory-1 mechanism
    ``sigma(a | x, w) = lambda(a | x) mu_a(w) / p(w | x)`` is returned after
    checking that it is obedient under full history and earns ``OPT(no)``.

    Raises
    ------
    WitnessVerificationFailed
        If the constructed witness fails its checks.
    """
    if solution is None:
        solution = solve_benchmark(inst, "no")
    S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
    beliefs = dict(sorted(solution.posteriors.items()))
    actions = list(beliefs)
    matrix = np.array([beliefs[a] for a in actions])
    sv = np.linalg.svd(matrix, compute_uv=False)
    common = dict(beliefs=beliefs, singular_values=sv, value_no=solution.value)
    if int(np.sum(sv > RANK_TOL)) < len(actions):
        return EqualityCheck(False, "independence", failing_pairs=(), witness=None, witness_value=None, **common)
    pk = inst.pair_kernel
    weights = np.zeros((X, A))
    failing = []
    for x in range(X):
        lam = _hull_weights(matrix, pk[x])
        if lam is None:
            failing.append(x)
        else:
            weights[x, actions] = lam
    if failing:
        return EqualityCheck(
            False, "convex-hull", failing_pairs=tuple(failing), witness=None, witness_value=None, **common
        )
    mu = np.zeros((A, S))
    mu[actions] = matrix
    best = receiver_best_actions(inst)
    table = np.zeros((X, S, A))
    for x in range(X):
        for w in range(S):
            if pk[x, w] > EXTRACTION_TOL:
                table[x, w] = weights[x] * mu[:, w] / pk[x, w]
            else:
                table[x, w, best[w]] = 1.0
    witness = SignalingMechanism.normalized(1, table)
    ok, violation, _ = check_persuasive(inst, witness, FULL_HISTORY)
    value = long_run_reward(inst, witness)
    if not ok or abs(value - solution.value) > WITNESS_TOL:
        raise WitnessVerificationFailed(
            f"witness obedience violation {violation:.3g}, value {value:.9f} vs {solution.value:.9f}"
        )
    return EqualityCheck(True, None, failing_pairs=(), witness=witness, witness_value=value, **common)


__all__ = [
    "EqualityCheck",
    "PersuasionSolution",
    "build_lp",
    "check_equality_condition",
    "extract_mechanism",
    "occupancy_from_mechanism",
    "solve_benchmark",
    "NO_HISTORY",
    "FULL_HISTORY",
]
