"""Partial-history persuasion: bilinear formulation and a multi-start local solver.

With lag ``l`` the receiver knows every state-action pair up to ``l + 1``
periods ago.  Restricting the sender to mechanisms with memory ``k``, the
problem over occupancy measures ``z`` on slices of length ``L = l + max(k, 1)``
is bilinear: the obedience, flow and normalisation blocks are linear in
``z`` and a consistency block forces the conditional recommendation law to
depend on the last ``k`` pairs only.

:func:`build_bilinear` materialises that program (used for auditing and for
size accounting).  :func:`alternating_solve` searches over the factored
variables directly.  It keeps the mechanism table ``sigma`` as the decision
variable, treats the invariant distribution as an implicit function of
``sigma`` and takes sequential linear-programming steps with an exact l1
penalty and a trust region.  Every returned mechanism is re-verified with the
exact obedience oracle in :mod:`mpp.core`, so the reported value is a
certified lower bound on the optimum.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import OptimizeWarning, linprog

from mpp.core import (
    InvariantDistribution,
    MppInstance,
    SignalingMechanism,
    check_persuasive,
    enforce_cap,
    full_revelation,
    incremental_utility,
    induced_chain,
    lag,
    sender_preferred_invariant,
    stationary_distribution,
)
from mpp.core.chain import slice_index
from mpp.errors import NoFeasibleCandidate, NonUnichain

VERIFY_TOL = 1e-7


# -----------------------------------------------------------------------------
# Bilinear program
# -----------------------------------------------------------------------------


def census(ell: int, k: int, inst: MppInstance) -> dict:
    """Closed-form sizes of the bilinear program for ``(ell, k)``.

    Consistency rows count unordered pairs of slices that share the same
    ``k``-window, for every ``(window, state, action)``.
    """
    if ell < 1 or k < 0:
        raise ValueError("need ell >= 1 and k >= 0")
    S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
    m = max(k, 1)
    L = ell + m
    older = X ** (L - k)
    return {
        "slice_length": L,
        "known_length": m,
        "variables": X**L * S * A,
        "obedience_rows": X**m * A * A,
        "flow_rows": X**L * S,
        "normalization_rows": 1,
        "consistency_rows": X**k * S * A * older * (older - 1) // 2,
        "mechanism_parameters": X**k * S * A,
    }


@dataclass(frozen=True)
class BilinearProgram:
    """Bilinear program for lag ``ell`` and memory ``k``.

    Variable ``z[h, w, a]`` (slice ``h`` of length ``L``, current state ``w``,
    recommendation ``a``) sits at column ``(h * S + w) * A + a``.
    """

    inst: MppInstance
    lag: int
    memory: int
    slice_length: int
    counts: dict = field(repr=False)

    @property
    def known_length(self) -> int:
        return max(self.memory, 1)

    @property
    def n_vars(self) -> int:
        return self.counts["variables"]

    def _col(self, h, w, a):
        S, A = self.inst.n_states, self.inst.n_actions
        return (np.asarray(h) * S + np.asarray(w)) * A + np.asarray(a)

    def objective(self) -> np.ndarray:
        X, L = self.inst.n_pairs, self.slice_length
        return np.tile(self.inst.pair_reward, X**L)

    def obedience_block(self) -> sparse.csr_matrix:
        """Rows ``(g, a, a')``: ``sum_{h extends g, w} z(h, w, a) du(w, a, a') >= 0``.

        ``g`` ranges over the slices of length ``max(k, 1)`` the receiver knows,
        that is, the oldest coordinates of ``h``.
        """
        inst = self.inst
        S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
        L, m = self.slice_length, self.known_length
        du = incremental_utility(inst)
        h, w, a, b = np.meshgrid(np.arange(X**L), np.arange(S), np.arange(A), np.arange(A), indexing="ij")
        g = h // X ** (L - m)
        rows = (g * A + a) * A + b
        cols = self._col(h, w, a)
        vals = du[w, a, b]
        keep = vals != 0
        return sparse.csr_matrix(
            (vals[keep], (rows[keep], cols[keep])), shape=(X**m * A * A, self.n_vars)
        )

    def flow_block(self) -> sparse.csr_matrix:
        """Rows ``(h, w)``: inflow into ``(h, w)`` equals ``sum_a z(h, w, a)``."""
        inst = self.inst
        S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
        L = self.slice_length
        pk = inst.pair_kernel
        h, w, y = np.meshgrid(np.arange(X**L), np.arange(S), np.arange(X), indexing="ij")
        prev = y * X ** (L - 1) + h // X
        s, b = np.divmod(h % X, A)
        in_rows = h * S + w
        in_cols = self._col(prev, s, b)
        in_vals = pk[h % X, w]
        h2, w2, a2 = np.meshgrid(np.arange(X**L), np.arange(S), np.arange(A), indexing="ij")
        out_rows = h2 * S + w2
        out_cols = self._col(h2, w2, a2)
        rows = np.concatenate([in_rows.ravel(), out_rows.ravel()])
        cols = np.concatenate([in_cols.ravel(), out_cols.ravel()])
        vals = np.concatenate([in_vals.ravel(), -np.ones(out_rows.size)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(X**L * S, self.n_vars))

    def consistency_residual(self, z: np.ndarray) -> float:
        """Largest violation of ``z(h,w,a) Z(h',w) = z(h',w,a) Z(h,w)`` over slices sharing a window."""
        inst = self.inst
        S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
        L, k = self.slice_length, self.memory
        zz = np.asarray(z, dtype=float).reshape(X ** (L - k), X**k, S, A)
        tot = zz.sum(axis=3)  # (older, window, S)
        # cross[o, o', win, w, a] = z(o, ...) * tot(o', ...)
        cross = zz[:, None] * tot[None, :, :, :, None]
        return float(np.abs(cross - np.swapaxes(cross, 0, 1)).max())

    def occupancy(self, sigma: SignalingMechanism) -> np.ndarray:
        """Factored point ``z(h,w,a) = pi_L(h) p(w|last h) sigma(a|window h, w)``."""
        inst = self.inst
        L = self.slice_length
        matrix = induced_chain(inst, sigma, L)
        pi = stationary_distribution(matrix, cross_check=False)
        idx = slice_index(inst.n_pairs, L, sigma.memory)
        z = pi[:, None, None] * inst.pair_kernel[idx.last][:, :, None] * sigma.table[idx.window]
        return z.reshape(-1)

    def residuals(self, z: np.ndarray) -> dict:
        """Constraint residuals of a point, one entry per block."""
        z = np.asarray(z, dtype=float).reshape(-1)
        return {
            "obedience": float(np.clip(-(self.obedience_block() @ z), 0, None).max(initial=0.0)),
            "flow": float(np.abs(self.flow_block() @ z).max()),
            "normalization": abs(float(z.sum()) - 1.0),
            "nonnegativity": float(np.clip(-z, 0, None).max(initial=0.0)),
            "consistency": self.consistency_residual(z),
        }


def build_bilinear(inst: MppInstance, ell: int, k: int) -> BilinearProgram:
    """Bilinear program for lag ``ell`` and memory ``k``.

    Raises
    ------
    CapExceeded
        If ``ell + max(k, 1)`` exceeds the slice cap.
    """
    counts = census(ell, k, inst)
    enforce_cap(counts["slice_length"])
    return BilinearProgram(inst, int(ell), int(k), counts["slice_length"], counts)


# -----------------------------------------------------------------------------
# Local model in mechanism space
# -----------------------------------------------------------------------------


class _Evaluation:
    """Value, obedience slacks and intermediate matrices at one mechanism."""

    __slots__ = ("x", "value", "obedience", "chain", "pi", "base", "lagged")

    def __init__(self, x, value, obedience, chain, pi, base, lagged):
        self.x = x
        self.value = value
        self.obedience = obedience
        self.chain = chain
        self.pi = pi
        self.base = base
        self.lagged = lagged

    def merit(self, nu: float) -> float:
        return self.value - nu * float(np.clip(-self.obedience, 0, None).sum())

    @property
    def violation(self) -> float:
        return float(np.clip(-self.obedience, 0, None).max(initial=0.0))


class _LagModel:
    """Weighted obedience ``O = pi(g) (T^l C)(g)`` and its Jacobian in ``sigma``.

    ``pi`` is the stationary law of the slice chain ``T`` on ``X^m``; ``C`` holds
    the one-step conditional incremental utilities.  Derivatives of ``pi``
    use the fundamental matrix: along a direction that preserves row sums,
    ``d pi = pi dT Z`` with ``Z = (I - T + 1 pi)^{-1}``.  The linearised step
    problem introduces ``q = d pi`` and ``t = q 1`` as extra variables so that
    every block stays sparse: ``q (I - T) + t pi = pi dT``.
    """

    def __init__(self, inst: MppInstance, ell: int, k: int):
        self.inst = inst
        self.ell = ell
        self.k = k
        S, A, X = inst.n_states, inst.n_actions, inst.n_pairs
        self.m = max(k, 1)
        idx = slice_index(X, self.m, k)
        self.idx = idx
        self.N = idx.n_slices
        self.n_windows = X**k
        self.P = self.n_windows * S * A
        self.next_state = inst.pair_kernel[idx.last]  # (N, S)
        self.reward = inst.pair_reward[idx.last]
        self.param = np.arange(self.P).reshape(self.n_windows, S, A)
        du = incremental_utility(inst)
        self.pairs = [(a, b) for a in range(A) for b in range(A) if a != b]
        self.du = [du[:, a, b] for a, b in self.pairs]
        self.rows_rep = np.repeat(np.arange(self.N), X)
        # parameter touched by each (slice, state, action) transition
        self.theta = self.param[idx.window]  # (N, S, A)
        self.simplex = sparse.kron(sparse.eye(self.n_windows * S), np.ones((1, A))).tocsr()

    # -- evaluation -------------------------------------------------------

    def chain(self, sig: np.ndarray) -> sparse.csr_matrix:
        weights = (self.next_state[:, :, None] * sig[self.idx.window]).reshape(self.N, -1)
        return sparse.csr_matrix(
            (weights.ravel(), (self.rows_rep, self.idx.successors.ravel())), shape=(self.N, self.N)
        )

    def evaluate(self, x: np.ndarray) -> _Evaluation | None:
        sig = x.reshape(self.n_windows, self.inst.n_states, self.inst.n_actions)
        T = self.chain(sig)
        system = (np.eye(self.N) - T.toarray()).T
        system[-1, :] = 1.0
        rhs = np.zeros(self.N)
        rhs[-1] = 1.0
        try:
            pi = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(pi)) or pi.min() < -1e-9 or np.abs(T.T @ pi - pi).max() > 1e-9:
            return None
        rec = sig[self.idx.window]
        base = np.stack([(self.next_state * rec[:, :, a] * d[None, :]).sum(axis=1) for (a, _), d in zip(self.pairs, self.du)])
        lagged = base.T
        for _ in range(self.ell):
            lagged = T @ lagged
        lagged = lagged.T
        obedience = (pi[None, :] * lagged).ravel()
        return _Evaluation(x, float(pi @ self.reward), obedience, T, pi, base, lagged)

    # -- linearisation ----------------------------------------------------

    def _param_matrix(self, row_weights: np.ndarray) -> sparse.csr_matrix:
        """Sparse ``(N, P)`` matrix with entry ``row_weights[h, w, a]`` at ``(h, theta(h, w, a))``."""
        S, A = self.inst.n_states, self.inst.n_actions
        rows = np.repeat(np.arange(self.N), S * A)
        return sparse.csr_matrix((row_weights.ravel(), (rows, self.theta.ravel())), shape=(self.N, self.P))

    def jacobians(self, ev: _Evaluation):
        """Return ``B`` with ``pi dT = B d`` and ``G`` with ``pi * dY = G d``."""
        S, A = self.inst.n_states, self.inst.n_actions
        vals = (ev.pi[:, None] * self.next_state)[:, :, None] * np.ones(A)
        B = sparse.csr_matrix(
            (vals.ravel(), (self.idx.successors.ravel(), self.theta.ravel())), shape=(self.N, self.P)
        )
        T = ev.chain
        blocks = []
        for i, (a, _) in enumerate(self.pairs):
            dY = None
            # derivative of T^l C through each factor of T
            for j in range(self.ell):
                vec = ev.base[i]
                for _ in range(self.ell - 1 - j):
                    vec = T @ vec
                weights = self.next_state[:, :, None] * vec[self.idx.successors].reshape(self.N, S, A)
                term = self._param_matrix(weights)
                for _ in range(j):
                    term = T @ term
                dY = term if dY is None else dY + term
            # derivative of C itself (only the recommended action's entry moves)
            weights = np.zeros((self.N, S, A))
            weights[:, :, a] = self.next_state * self.du[i][None, :]
            term = self._param_matrix(weights)
            for _ in range(self.ell):
                term = T @ term
            dY = term if dY is None else dY + term
            blocks.append(sparse.diags(ev.pi) @ dY)
        return B, sparse.vstack(blocks).tocsr()


def _solve_step_lp(c, a_ub, b_ub, a_eq, b_eq, bounds):
    """Dual simplex with an iteration cap, falling back to interior point."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        for method, options in (("highs-ds", {"maxiter": 5000}), ("highs-ipm", {"maxiter": 500})):
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method=method, options=options)
            if res.status == 0:
                return res.x
    return None


@dataclass
class _RunState:
    x: np.ndarray
    ev: _Evaluation
    radius: float = 0.1
    nu: float = 30.0
    iterations: int = 0
    converged: bool = False


def _slp(model: _LagModel, state: _RunState, max_iter: int, tol: float = 1e-9, margin: float = 0.0) -> _RunState:
    """Trust-region sequential LP on the merit ``V - nu * sum(max(0, margin - O))``."""
    N, P = model.N, model.P
    eye = sparse.eye(N, format="csr")
    n_pairs = len(model.pairs)
    stack = sparse.vstack([eye] * n_pairs).tocsr()
    budget = state.iterations + max_iter
    while state.iterations < budget and not state.converged:
        ev, x = state.ev, state.x
        slack = ev.obedience - margin
        M = slack.size
        B, G = model.jacobians(ev)
        T = ev.chain
        eq_top = sparse.hstack(
            [-B, (eye - T).T, sparse.csr_matrix(ev.pi.reshape(-1, 1)), sparse.csr_matrix((N, M))]
        )
        eq_norm = sparse.hstack(
            [sparse.csr_matrix((1, P)), sparse.csr_matrix(-np.ones((1, N))), sparse.csr_matrix([[1.0]]), sparse.csr_matrix((1, M))]
        )
        eq_simplex = sparse.hstack([model.simplex, sparse.csr_matrix((model.simplex.shape[0], N + 1 + M))])
        a_eq = sparse.vstack([eq_top, eq_norm, eq_simplex]).tocsr()
        lagged_diag = sparse.diags(ev.lagged.ravel()) @ stack
        a_ub = sparse.hstack([-G, -lagged_diag, sparse.csr_matrix((M, 1)), -sparse.eye(M)]).tocsr()
        c = np.concatenate([np.zeros(P), -model.reward, [0.0], np.full(M, state.nu)])
        lo = np.concatenate([np.maximum(-state.radius, -x), np.full(N + 1, -np.inf), np.zeros(M)])
        hi = np.concatenate([np.minimum(state.radius, 1.0 - x), np.full(N + 1, np.inf), np.full(M, np.inf)])
        sol = _solve_step_lp(c, a_ub, slack, a_eq, np.zeros(a_eq.shape[0]), np.column_stack([lo, hi]))
        state.iterations += 1
        if sol is None:
            state.radius /= 4
            if state.radius < 1e-12:
                state.converged = True
            continue
        d = sol[:P]
        s = sol[P + N + 1 :]
        current_pen = float(np.clip(-slack, 0, None).sum())
        predicted = float(model.reward @ sol[P : P + N]) - state.nu * float(s.sum()) + state.nu * current_pen
        if predicted < tol:
            if current_pen > 1e-12 and state.nu < 1e6:
                state.nu *= 10.0
                continue
            state.converged = True
            break
        trial = np.clip(x + d, 0.0, 1.0)
        trial_ev = model.evaluate(trial)
        if trial_ev is None:
            state.radius /= 4
            continue

        def merit(e):
            return e.value - state.nu * float(np.clip(margin - e.obedience, 0, None).sum())

        ratio = (merit(trial_ev) - merit(ev)) / predicted
        if ratio > 0.1:
            state.x, state.ev = trial, trial_ev
            if ratio > 0.75:
                state.radius = min(2.0 * state.radius, 1.0)
        else:
            state.radius /= 4
            if state.radius < 1e-12:
                state.converged = True
    return state


# -----------------------------------------------------------------------------
# Multi-start driver
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class StartRecord:
    """Per-start trace entry: label, value after screening, final certified value."""

    index: int
    label: str
    screened_value: float | None
    final_value: float | None
    feasible: bool
    iterations: int


@dataclass(frozen=True)
class PartialSolution:
    """Best verified mechanism found for ``(lag, memory)``.

    ``value`` is the long-run reward of ``mechanism``; because the mechanism
    passed the exact obedience oracle it is a lower bound on the optimum over
    memory-``memory`` mechanisms.
    """

    lag: int
    memory: int
    mechanism: SignalingMechanism
    invariant: InvariantDistribution
    value: float
    n_starts: int
    starts_used: int
    best_start: int
    best_label: str
    trace: tuple
    max_violation: float
    wall_time: float


def _lift_full_optimum(inst: MppInstance, k: int) -> SignalingMechanism:
    from mpp.benchmark import solve_benchmark

    full = solve_benchmark(inst, "full")
    if k >= 1:
        return full.mechanism.lifted(k)
    # memory 0: aggregate the full-history occupancy measure over the previous pair
    z = full.occupancy.reshape(inst.n_pairs, inst.n_states, inst.n_actions).sum(axis=0)
    return SignalingMechanism.history_independent(z + 1e-12)


PURIFY_THRESHOLDS = (0.0, 1e-10, 1e-8, 1e-6)


def _certify(inst, ell, k, table):
    """Best verified variant of ``table`` after zeroing entries below a threshold.

    Local steps leave recommendations with probability around 1e-12 whose
    posteriors are numerically meaningless; dropping them changes the value
    negligibly and removes the spurious beliefs.  Returns
    ``(value, mechanism, invariant, max_violation)`` or ``None``.
    """
    best = None
    for threshold in PURIFY_THRESHOLDS:
        t = np.where(table > threshold, table, 0.0)
        if np.any(t.sum(axis=2) <= 0):
            continue
        sigma = SignalingMechanism.normalized(k, t)
        try:
            check = check_persuasive(inst, sigma, lag(ell), tol=VERIFY_TOL)
            if not check.ok:
                continue
            inv = sender_preferred_invariant(inst, sigma)
        except NonUnichain:
            continue
        value = inv.expected_reward(inst)
        if best is None or value > best[0] + 1e-12:
            best = (value, sigma, inv, check.max_violation)
    return best


def alternating_solve(
    program: BilinearProgram,
    n_starts: int = 50,
    seed: int = 0,
    *,
    warm_start: SignalingMechanism | None = None,
    screen_iterations: int = 6,
    finalists: int = 3,
    max_iterations: int = 200,
) -> PartialSolution:
    """Multi-start local search over memory-``k`` mechanisms under lag ``l``.

    Starting points are, in order: the full-history optimum lifted to memory
    ``k`` (for ``k = 0`` its state-conditional aggregate), full revelation,
    ``warm_start`` lifted to memory ``k`` when given, and ``n_starts`` random
    mechanisms whose rows are Dirichlet(1) draws from one pre-split stream per
    start.  Deterministic starts are optimised to convergence.  Random starts
    are first screened for ``screen_iterations`` steps and the best
    ``finalists`` of them continue to convergence.  Each candidate is then
    checked with the exact lag-``l`` obedience oracle (tolerance 1e-7) and the
    best verified candidate is returned.

    Raises
    ------
    NoFeasibleCandidate
        If no candidate verifies (full revelation always should).
    """
    t0 = time.perf_counter()
    inst, ell, k = program.inst, program.lag, program.memory
    S, A = inst.n_states, inst.n_actions
    if A == 1:
        # a single action leaves exactly one mechanism
        value, sigma, inv, viol = _certify(inst, ell, k, full_revelation(inst, k).table)
        record = StartRecord(0, "forced", None, value, True, 0)
        return PartialSolution(
            lag=ell, memory=k, mechanism=sigma, invariant=inv, value=float(value), n_starts=n_starts,
            starts_used=1, best_start=0, best_label="forced", trace=(record,), max_violation=float(viol),
            wall_time=time.perf_counter() - t0,
        )
    model = _LagModel(inst, ell, k)

    starts: list[tuple[str, np.ndarray]] = [
        ("full-history-lifted", _lift_full_optimum(inst, k).table.ravel().copy()),
        ("full-revelation", full_revelation(inst, k).table.ravel().copy()),
    ]
    if warm_start is not None:
        starts.append(("warm-start", warm_start.lifted(k).table.ravel().copy()))
    n_fixed = len(starts)
    streams = np.random.SeedSequence(seed).spawn(n_starts)
    for i, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        rows = rng.dirichlet(np.ones(A), size=model.n_windows * S)
        starts.append((f"random-{i}", rows.ravel()))

    states: list[_RunState | None] = []
    for _, x0 in starts:
        ev = model.evaluate(x0)
        if ev is None:
            # a start whose chain is not unichain: nudge it into the interior
            x0 = 0.999 * x0 + 0.001 / A
            ev = model.evaluate(x0)
        states.append(None if ev is None else _RunState(x0, ev))

    screened: dict[int, float] = {}
    for i in range(n_fixed, len(starts)):
        st = states[i]
        if st is None:
            continue
        _slp(model, st, screen_iterations)
        screened[i] = st.ev.merit(st.nu)
    ranked = sorted(screened, key=lambda i: (-screened[i], i))
    chosen = list(range(n_fixed)) + ranked[:finalists]

    records = []
    best = None
    for i in range(len(starts)):
        label = starts[i][0]
        st = states[i]
        if st is None or i not in chosen:
            records.append(StartRecord(i, label, screened.get(i), None, False, 0 if st is None else st.iterations))
            continue
        _slp(model, st, max_iterations - st.iterations)
        found = _certify(inst, ell, k, st.x.reshape(model.n_windows, S, A))
        if found is None and st.ev.violation > 0:
            # feasibility restoration under a much heavier penalty
            st.converged = False
            st.nu = max(100.0 * st.nu, 1e4)
            _slp(model, st, 30)
            found = _certify(inst, ell, k, st.x.reshape(model.n_windows, S, A))
        value = None if found is None else found[0]
        records.append(StartRecord(i, label, screened.get(i), value, found is not None, st.iterations))
        if found is not None and (best is None or value > best[0] + 1e-12):
            best = (value, i, *found[1:])

    if best is None:
        found = _certify(inst, ell, k, full_revelation(inst, k).table)
        if found is None:
            raise NoFeasibleCandidate("no candidate passed the lag obedience check")
        best = (found[0], 1, *found[1:])

    value, index, sigma, inv, viol = best
    return PartialSolution(
        lag=ell,
        memory=k,
        mechanism=sigma,
        invariant=inv,
        value=float(value),
        n_starts=n_starts,
        starts_used=len(starts),
        best_start=index,
        best_label=starts[index][0],
        trace=tuple(records),
        max_violation=float(viol),
        wall_time=time.perf_counter() - t0,
    )


def solve_partial(
    inst: MppInstance,
    ell: int,
    k: int,
    n_starts: int = 50,
    seed: int = 0,
    warm_start: SignalingMechanism | None = None,
    **options,
) -> PartialSolution:
    """Convenience wrapper: :func:`build_bilinear` followed by :func:`alternating_solve`."""
    return alternating_solve(build_bilinear(inst, ell, k), n_starts, seed, warm_start=warm_start, **options)


def solve_memory_sweep(inst: MppInstance, ell: int, memories, n_starts: int = 50, seed: int = 0, **options) -> list:
    """Solve for increasing memories, warm-starting each level from the previous one."""
    out = []
    previous = None
    for k in sorted(memories):
        sol = solve_partial(inst, ell, k, n_starts, seed, warm_start=previous, **options)
        out.append(sol)
        previous = sol.mechanism
    return out
