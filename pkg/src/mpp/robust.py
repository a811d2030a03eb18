"""Robustly persuasive history-independent mechanisms.

Pipeline for a radius ``eps``:

1. solve the no-history benchmark and split its invariant into weights
   ``w_a`` and beliefs ``mu_a`` (:func:`split_mechanism`);
2. find interior beliefs ``eta_a`` and a common ball radius ``D`` on which
   each recommended action stays optimal (:func:`regularity_params`);
3. solve a small LP for the state-revealing weights ``y`` that restore the
   stationarity of the shifted beliefs (:func:`perturbation_lp`);
4. shift ``xi_a = (1 - delta) mu_a + delta eta_a``, add state-revealing
   signals and assemble the mechanism (:func:`build_robust_mechanism`).

:func:`verify_robust` checks the result analytically and by sampling priors
in the ``eps``-ball; :func:`persuasive_lag` translates robustness into a lag
after which the mechanism is obedient in the lagged model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mpp import lpsolver
from mpp.benchmark import solve_benchmark
from mpp.core import (
    InvariantDistribution,
    MppInstance,
    SignalingMechanism,
    check_persuasive,
    incremental_utility,
    induced_chain,
    lag,
    receiver_best_actions,
    sender_preferred_invariant,
    slice_cap,
    spectral_quantities,
    stationary_distribution,
)
from mpp.errors import (
    CapExceeded,
    EpsilonTooLarge,
    InternalError,
    NotPersuasive,
    RegularityFails,
    StationarityViolated,
)

WEIGHT_TOL = 1e-12
REGULARITY_TOL = 1e-10
SINGULAR_TOL = 1e-10
STATIONARITY_TOL = 1e-8
LAG_SEARCH_CAP = 10**6


# -----------------------------------------------------------------------------
# Signals
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class SignalScheme:
    """History-independent mechanism over an explicit signal set.

    ``table[w, s]`` is the probability of signal ``s`` in state ``w`` and
    ``actions[s]`` is the action signal ``s`` recommends.  Distinct signals
    may recommend the same action; :meth:`to_mechanism` merges them.
    """

    table: np.ndarray
    actions: np.ndarray
    labels: tuple

    @property
    def n_signals(self) -> int:
        return self.table.shape[1]

    def to_mechanism(self, n_actions: int) -> SignalingMechanism:
        out = np.zeros((self.table.shape[0], n_actions))
        for s, a in enumerate(self.actions):
            out[:, a] += self.table[:, s]
        return SignalingMechanism.normalized(0, out[None])

    def posteriors(self, prior: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bayes posteriors per signal under ``prior`` and the signal probabilities."""
        joint = prior[:, None] * self.table  # (S, signals)
        mass = joint.sum(axis=0)
        safe = np.where(mass > WEIGHT_TOL, mass, 1.0)
        return (joint / safe).T, mass


# -----------------------------------------------------------------------------
# Splitting
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitRepresentation:
    """Weights ``w_a`` and beliefs ``mu_a`` (rows) with ``pi(w, a) = w_a mu_a(w)``."""

    weights: np.ndarray
    beliefs: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > WEIGHT_TOL)

    def joint(self) -> np.ndarray:
        """Reconstructed ``pi(w, a)`` as a ``(n_states, n_actions)`` table."""
        return (self.weights[:, None] * self.beliefs).T


def _interior_state(inst: MppInstance, action: int) -> int:
    """State where ``action`` is best, or where it is least dominated."""
    du = incremental_utility(inst)
    score = du[:, action, :].min(axis=1)
    return int(np.argmax(score))


def split_mechanism(inst: MppInstance, sigma: SignalingMechanism, tol: float = 1e-9) -> SplitRepresentation:
    """Split the invariant of an obedient memory-0 mechanism by recommendation.

    ``w_a = sum_w pi(w, a)`` and ``mu_a = pi(., a) / w_a``.  Recommendations
    that are never made get a degenerate belief at a state where the action
    is a best response.

    Raises
    ------
    NotPersuasive
        If ``sigma`` fails the no-history obedience check.
    """
    if sigma.memory != 0:
        raise ValueError("splitting is defined for history-independent mechanisms")
    check = check_persuasive(inst, sigma, "no", tol=tol)
    if not check.ok:
        raise NotPersuasive(f"mechanism violates obedience by {check.max_violation:.3g}")
    pi = sender_preferred_invariant(inst, sigma).pairs()
    weights = pi.sum(axis=0)
    beliefs = np.zeros((inst.n_actions, inst.n_states))
    for a in range(inst.n_actions):
        if weights[a] > WEIGHT_TOL:
            beliefs[a] = pi[:, a] / weights[a]
        else:
            beliefs[a, _interior_state(inst, a)] = 1.0
    return SplitRepresentation(weights, beliefs)


def stationarity_gap(inst: MppInstance, weights, beliefs, actions) -> float:
    """l_inf gap of ``sum_s w_s mu_s P_{a_s} = sum_s w_s mu_s``."""
    weights = np.asarray(weights, dtype=float)
    beliefs = np.asarray(beliefs, dtype=float)
    flow = np.zeros(inst.n_states)
    for w_s, mu_s, a_s in zip(weights, beliefs, actions):
        flow += w_s * (mu_s @ inst.kernel[:, a_s, :])
    return float(np.abs(flow - weights @ beliefs).max())


def merge_beliefs(inst: MppInstance, signals, check_posteriors: bool = True) -> SignalScheme:
    """Mechanism inducing prescribed beliefs in the no-history model.

    Parameters
    ----------
    signals : iterable of (weight, belief, action)
        Weights must sum to one and satisfy the stationarity condition.

    Returns
    -------
    SignalScheme
        ``sigma(s | w) = w_s mu_s(w) / sum_s' w_s' mu_s'(w)``; states with zero
        total mass get the receiver-best action.

    Raises
    ------
    StationarityViolated
        If the weighted beliefs are not stationary within 1e-8.
    """
    signals = list(signals)
    weights = np.array([float(s[0]) for s in signals])
    beliefs = np.array([np.asarray(s[1], dtype=float) for s in signals])
    actions = np.array([int(s[2]) for s in signals])
    labels = tuple(s[3] if len(s) > 3 else f"s{i}" for i, s in enumerate(signals))
    if abs(weights.sum() - 1.0) > 1e-10 or np.any(weights < 0):
        raise StationarityViolated("signal weights must be non-negative and sum to one")
    gap = stationarity_gap(inst, weights, beliefs, actions)
    if gap > STATIONARITY_TOL:
        raise StationarityViolated(f"stationarity residual {gap:.3g}")
    mass = weights[:, None] * beliefs  # (signals, S)
    total = mass.sum(axis=0)
    table = np.zeros((inst.n_states, len(signals)))
    best = receiver_best_actions(inst)
    for w in range(inst.n_states):
        if total[w] > WEIGHT_TOL:
            table[w] = mass[:, w] / total[w]
        else:
            hits = np.flatnonzero(actions == best[w])
            if hits.size == 0:
                # no signal recommends the best action: put the mass on any signal
                hits = np.array([0])
            table[w, hits[0]] = 1.0
    scheme = SignalScheme(table, actions, labels)
    if check_posteriors:
        post, _ = scheme.posteriors(total)
        for s in range(len(signals)):
            if weights[s] > WEIGHT_TOL and np.abs(post[s] - beliefs[s]).max() > STATIONARITY_TOL:
                raise InternalError(f"posterior of signal {labels[s]} differs from its target belief")
    return scheme


# -----------------------------------------------------------------------------
# Regularity and the perturbation LP
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class Regularity:
    """Per-action interior beliefs and margins, with ``D`` over the support."""

    D: float
    per_action: np.ndarray
    eta: np.ndarray


def _action_margin(inst: MppInstance, a: int) -> tuple[float, np.ndarray]:
    du = incremental_utility(inst)
    S, A = inst.n_states, inst.n_actions
    rows, rhs_scale = [], []
    for b in range(A):
        if b == a:
            continue
        scale = float(np.abs(du[:, a, b]).max())
        if scale <= 1e-15:
            return 0.0, np.full(S, 1.0 / S)
        rows.append(du[:, a, b])
        rhs_scale.append(scale)
    if not rows:
        # a single action is trivially optimal on the whole simplex
        return 1.0, np.full(S, 1.0 / S)
    # variables: eta (S), D+ , D-  ; maximise D+ - D-
    n = S + 2
    objective = np.zeros(n)
    objective[S], objective[S + 1] = 1.0, -1.0
    ge = np.zeros((len(rows), n))
    for r, (row, scale) in enumerate(zip(rows, rhs_scale)):
        ge[r, :S] = row
        ge[r, S] = -scale
        ge[r, S + 1] = scale
    eq = np.zeros((1, n))
    eq[0, :S] = 1.0
    sol = lpsolver.solve(
        lpsolver.LinearProgram(objective=objective, a_eq=eq, b_eq=[1.0], a_ge=ge, b_ge=np.zeros(len(rows)))
    )
    if not sol.optimal:
        raise InternalError(f"regularity LP for action {a} returned {sol.status.value}")
    return float(sol.value), sol.x[:S] / sol.x[:S].sum()


def regularity_params(inst: MppInstance, support=None, strict: bool = True) -> Regularity:
    """Largest certified margin ``D_a`` and its centre ``eta_a`` for every action.

    For action ``a`` the LP maximises ``D_a`` over beliefs ``eta`` with
    ``E_eta[du(., a, b)] >= D_a max_w |du(w, a, b)|`` for all ``b != a``.  By
    Hoelder's inequality every belief within l1 distance ``D_a`` of ``eta``
    keeps ``a`` optimal.  ``D`` is the minimum over ``support`` (all actions
    when omitted).

    Raises
    ------
    RegularityFails
        If ``strict`` and some supported action has ``D_a <= 1e-10``.
    """
    A = inst.n_actions
    per_action = np.zeros(A)
    eta = np.zeros((A, inst.n_states))
    for a in range(A):
        per_action[a], eta[a] = _action_margin(inst, a)
    support = np.arange(A) if support is None else np.asarray(support, dtype=int)
    D = float(per_action[support].min())
    if strict:
        bad = [int(a) for a in support if per_action[a] <= REGULARITY_TOL]
        if bad:
            raise RegularityFails(f"no strict-optimality ball for action(s) {bad}")
    return Regularity(D, per_action, eta)


@dataclass(frozen=True)
class Perturbation:
    """Solution of the state-revealing weight LP and the constants bounding it."""

    y: np.ndarray
    tau: float
    s_f: float
    bound: float
    nu_f: np.ndarray
    p_f: np.ndarray
    rhs: np.ndarray

    @property
    def y_norm(self) -> float:
        return float(self.y.sum())


def best_response_chain(inst: MppInstance) -> np.ndarray:
    """``P_f(w, w') = p(w' | w, a_w)`` with ``a_w`` the receiver-best action."""
    best = receiver_best_actions(inst)
    return inst.kernel[np.arange(inst.n_states), best]


def perturbation_lp(inst: MppInstance, split: SplitRepresentation, eta: np.ndarray) -> Perturbation:
    """Minimal non-negative ``y`` with ``y (I - P_f) = sum_a w_a eta_a (P_a - I)``.

    Also returns ``tau = max 1/nu_f`` (``nu_f`` stationary for ``P_f``) and the
    smallest positive singular value ``s_f`` of ``I - P_f``.

    Raises
    ------
    InternalError
        If the LP is infeasible or its optimum exceeds
        ``2 (1 + tau) sqrt(|Omega|) / s_f``, both excluded for unichain instances.
    """
    S = inst.n_states
    p_f = best_response_chain(inst)
    rhs = np.zeros(S)
    for a in split.support:
        rhs += split.weights[a] * (eta[a] @ inst.kernel[:, a, :] - eta[a])
    lhs = (np.eye(S) - p_f).T  # rows: components of y (I - P_f)
    sol = lpsolver.solve(lpsolver.LinearProgram(objective=-np.ones(S), a_eq=lhs, b_eq=rhs))
    if not sol.optimal:
        raise InternalError(f"perturbation LP returned {sol.status.value}")
    y = sol.x
    nu_f = stationary_distribution(p_f)
    tau = float((1.0 / nu_f).max())
    sv = np.linalg.svd(np.eye(S) - p_f, compute_uv=False)
    positive = sv[sv > SINGULAR_TOL]
    s_f = float(positive.min()) if positive.size else math.inf
    bound = 2.0 * (1.0 + tau) * math.sqrt(S) / s_f if positive.size else 0.0
    if y.sum() > bound + 1e-6:
        raise InternalError(f"||y||_1 = {y.sum():.6g} exceeds the bound {bound:.6g}")
    return Perturbation(y=y, tau=tau, s_f=s_f, bound=bound, nu_f=nu_f, p_f=p_f, rhs=rhs)


# -----------------------------------------------------------------------------
# Certificate
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class RobustCertificate:
    """Every intermediate of the robust construction, for independent audit.

    ``signal_weights`` lists the action signals (in ``support`` order) followed
    by one state-revealing signal per state.
    """

    epsilon: float
    opt_no: float
    support: np.ndarray
    weights: np.ndarray
    beliefs: np.ndarray
    D: float
    eta: np.ndarray
    y: np.ndarray
    y_norm: float
    tau: float
    s_f: float
    w_min: float
    delta: float
    rho: float
    xi: np.ndarray
    signal_weights: np.ndarray
    scheme: SignalScheme = field(repr=False)
    mechanism: SignalingMechanism = field(repr=False)
    invariant: np.ndarray = field(repr=False)
    payoff: float = 0.0
    payoff_lower_bound: float = 0.0
    sharper_lower_bound: float = 0.0
    epsilon_threshold: float = 0.0
    verified_radius: float = 0.0

    @property
    def state_invariant(self) -> np.ndarray:
        return self.invariant.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "opt_no": self.opt_no,
            "support": self.support,
            "w": self.weights,
            "mu": self.beliefs,
            "D": self.D,
            "eta": self.eta,
            "y": self.y,
            "y_norm": self.y_norm,
            "tau": self.tau,
            "s_f": self.s_f,
            "w_min": self.w_min,
            "delta": self.delta,
            "rho": self.rho,
            "xi": self.xi,
            "signal_weights": self.signal_weights,
            "signal_labels": list(self.scheme.labels),
            "signal_actions": self.scheme.actions,
            "signal_table": self.scheme.table,
            "invariant": self.invariant,
            "payoff": self.payoff,
            "payoff_lower_bound": self.payoff_lower_bound,
            "sharper_lower_bound": self.sharper_lower_bound,
            "epsilon_threshold": self.epsilon_threshold,
            "verified_radius": self.verified_radius,
        }


def epsilon_threshold(s_f: float, w_min: float, D: float, tau: float, n_states: int) -> float:
    """Largest admissible radius (exclusive) for the robust construction."""
    return s_f * w_min * D / (2.0 * (s_f + 2.0 * (1.0 + tau) * math.sqrt(n_states)))


def build_robust_mechanism(inst: MppInstance, epsilon: float) -> RobustCertificate:
    """Construct an ``epsilon``-robustly persuasive memory-0 mechanism.

    Raises
    ------
    EpsilonTooLarge
        If ``epsilon`` is not below the admissible threshold.
    RegularityFails
        If some recommended action has no strict-optimality ball.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    S, A = inst.n_states, inst.n_actions
    opt = solve_benchmark(inst, "no")
    split = split_mechanism(inst, opt.mechanism)
    support = split.support
    reg = regularity_params(inst, support)
    pert = perturbation_lp(inst, split, reg.eta)
    w_min = float(split.weights[support].min())
    D = reg.D
    threshold = epsilon_threshold(pert.s_f, w_min, D, pert.tau, S)
    y_norm = pert.y_norm
    denom = w_min * D - 2.0 * epsilon * y_norm
    if epsilon >= threshold or denom <= 0:
        raise EpsilonTooLarge(epsilon, threshold)
    delta = 2.0 * epsilon / denom
    rho = delta * y_norm / (1.0 + delta * y_norm)
    xi = (1.0 - delta) * split.beliefs + delta * reg.eta
    w_hat_actions = (1.0 - rho) * split.weights[support]
    w_hat_states = delta * pert.y / (1.0 + delta * y_norm)
    best = receiver_best_actions(inst)
    signals = [(w_hat_actions[i], xi[a], a, f"a{a}") for i, a in enumerate(support)]
    signals += [(w_hat_states[w], np.eye(S)[w], best[w], f"state{w}") for w in range(S)]
    scheme = merge_beliefs(inst, signals)
    mechanism = scheme.to_mechanism(A)
    invariant = np.zeros((S, A))
    for i, a in enumerate(support):
        invariant[:, a] += w_hat_actions[i] * xi[a]
    invariant[np.arange(S), best] += w_hat_states
    payoff = float(np.sum(invariant * inst.sender_reward))
    headline = (1.0 - 2.0 * epsilon / (w_min * D) * (1.0 + pert.bound)) * opt.value
    sharper = (1.0 - delta) / (1.0 + delta * y_norm) * opt.value
    cert = RobustCertificate(
        epsilon=float(epsilon),
        opt_no=opt.value,
        support=support,
        weights=split.weights,
        beliefs=split.beliefs,
        D=D,
        eta=reg.eta,
        y=pert.y,
        y_norm=y_norm,
        tau=pert.tau,
        s_f=pert.s_f,
        w_min=w_min,
        delta=delta,
        rho=rho,
        xi=xi,
        signal_weights=np.concatenate([w_hat_actions, w_hat_states]),
        scheme=scheme,
        mechanism=mechanism,
        invariant=invariant,
        payoff=payoff,
        payoff_lower_bound=headline,
        sharper_lower_bound=sharper,
        epsilon_threshold=threshold,
    )
    return _with_radius(cert)


def _continuity_factors(cert: RobustCertificate) -> np.ndarray:
    """``max_w xi_a(w) / pi_hat(w)`` for each supported action."""
    pi_state = cert.state_invariant
    safe = np.where(pi_state > WEIGHT_TOL, pi_state, np.inf)
    return np.array([float((cert.xi[a] / safe).max()) for a in cert.support])


def _with_radius(cert: RobustCertificate) -> RobustCertificate:
    factors = _continuity_factors(cert)
    top = float(factors.max()) if factors.size else 0.0
    radius = math.inf if top == 0 else cert.delta * cert.D / (2.0 * top)
    object.__setattr__(cert, "verified_radius", radius)
    return cert


# -----------------------------------------------------------------------------
# Verification
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class RobustVerification:
    """Result of :func:`verify_robust`.

    ``worst_margin`` is the smallest expected incremental utility of a
    recommended action over every sampled prior and signal.
    ``failing_action`` names the first action failing the analytic check.
    """

    analytic_ok: bool
    sampled_ok: bool
    worst_margin: float
    violations: int
    max_shift: float
    n_samples: int
    failing_action: int | None = None

    def __iter__(self):
        return iter((self.analytic_ok, self.sampled_ok, self.worst_margin))


def sample_l1_ball(center: np.ndarray, radius: float, n: int, rng: np.random.Generator, boundary_share: float = 0.5):
    """Priors near ``center`` within l1 distance ``radius`` on the simplex.

    Interior samples are uniform: the first ``S - 1`` coordinates of the
    displacement are drawn uniformly from the l1 ball in ``R^(S-1)``, the last
    one balances the sum, and points outside the ball or the simplex are
    rejected.  ``boundary_share`` of the samples are rescaled onto the sphere
    ``||d||_1 = radius``.
    """
    S = center.size
    if S == 1 or radius == 0:
        return np.repeat(center[None], n, axis=0)
    out = []
    n_boundary = int(round(boundary_share * n))
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 1000:
            raise InternalError("rejection sampler could not fill the l1 ball")
        batch = max(4 * (n - len(out)), 64)
        e = rng.exponential(size=(batch, S))
        signs = rng.choice([-1.0, 1.0], size=(batch, S - 1))
        d = np.zeros((batch, S))
        d[:, : S - 1] = signs * e[:, : S - 1] / e.sum(axis=1, keepdims=True) * radius
        d[:, S - 1] = -d[:, : S - 1].sum(axis=1)
        norms = np.abs(d).sum(axis=1)
        want_boundary = len(out) < n_boundary
        if want_boundary:
            ok = norms > 0
            d[ok] *= (radius / norms[ok])[:, None]
            norms = np.abs(d).sum(axis=1)
        keep = (norms <= radius * (1 + 1e-12)) & np.all(center[None] + d >= 0, axis=1)
        for row in d[keep]:
            out.append(center + row)
            if len(out) == n or (want_boundary and len(out) == n_boundary):
                break
    return np.array(out[:n])


def verify_robust(
    inst: MppInstance,
    cert: RobustCertificate,
    n_samples: int = 10_000,
    seed: int = 0,
    epsilon: float | None = None,
    tol: float = 1e-9,
) -> RobustVerification:
    """Check robustness of a certificate, optionally at a different radius.

    The analytic check is ``2 max_w(xi_a / pi_hat) eps <= delta D`` for each
    supported action.  The sampled check draws priors in the ``eps``-ball
    around the invariant state law, computes exact posteriors per signal and
    requires every recommendation to be a best response (within ``tol``) and
    every action-signal posterior to stay within ``delta D`` of ``xi_a``.
    """
    eps = cert.epsilon if epsilon is None else float(epsilon)
    factors = _continuity_factors(cert)
    failing = None
    for a, f in zip(cert.support, factors):
        if 2.0 * f * eps > cert.delta * cert.D + 1e-10:
            failing = int(a)
            break
    analytic_ok = failing is None

    du = incremental_utility(inst)
    rng = np.random.default_rng(seed)
    priors = sample_l1_ball(cert.state_invariant, eps, n_samples, rng)
    scheme = cert.scheme
    n_action_signals = len(cert.support)
    worst = math.inf
    violations = 0
    max_shift = 0.0
    for prior in priors:
        post, mass = scheme.posteriors(prior)
        for s in range(scheme.n_signals):
            if mass[s] <= WEIGHT_TOL:
                continue
            a = scheme.actions[s]
            gains = np.delete(post[s] @ du[:, a, :], a)
            if gains.size == 0:
                continue
            margin = float(gains.min())
            worst = min(worst, margin)
            bad = margin < -tol
            if s < n_action_signals:
                shift = float(np.abs(post[s] - cert.xi[a]).sum())
                max_shift = max(max_shift, shift)
                bad = bad or shift > cert.delta * cert.D + 1e-12
            violations += int(bad)
    return RobustVerification(
        analytic_ok=analytic_ok,
        sampled_ok=violations == 0,
        worst_margin=worst if worst < math.inf else 0.0,
        violations=violations,
        max_shift=max_shift,
        n_samples=len(priors),
        failing_action=failing,
    )


@dataclass(frozen=True)
class LagReport:
    """Lags after which the robust mechanism is obedient with lagged information.

    ``checked`` is ``None`` when ``exact + 1`` exceeds the slice cap and the
    lagged obedience check was skipped.
    """

    exact: int
    spectral: int | None
    real_spectrum: bool
    checked: bool | None

    def __iter__(self):
        return iter((self.exact, self.spectral))


def persuasive_lag(inst: MppInstance, cert: RobustCertificate) -> LagReport:
    """Smallest lag with ``d_l <= eps`` and the spectral bound on it.

    Raises
    ------
    CapExceeded
        If no lag up to ``10**6`` brings ``d_l`` below ``eps``.
    InternalError
        If the exact lag exceeds the spectral bound on a real spectrum, or
        the mechanism fails obedience at the exact lag.
    """
    eps = cert.epsilon
    sigma = cert.mechanism
    exact = exact_lag(inst, sigma, cert.state_invariant, eps)
    spectral = None
    real = False
    if eps > 0:
        sq = spectral_quantities(inst, sigma)
        spectral = sq.lag_bound(eps)
        real = sq.real_spectrum
        if real and exact > spectral:
            raise InternalError(f"exact lag {exact} exceeds spectral lag {spectral}")
    checked = None
    if exact + 1 <= slice_cap():
        checked = bool(check_persuasive(inst, sigma, lag(exact)).ok)
        if not checked:
            raise InternalError(f"robust mechanism fails obedience at lag {exact}")
    return LagReport(exact=exact, spectral=spectral, real_spectrum=real, checked=checked)


def exact_lag(inst: MppInstance, sigma: SignalingMechanism, target: np.ndarray, eps: float) -> int:
    """Smallest ``l`` with ``max_x ||law of the state l+1 steps after x - target||_1 <= eps``.

    The search propagates the pair laws one step at a time up to ``10**6``
    steps and raises :class:`CapExceeded` beyond that.
    """
    matrix = induced_chain(inst, sigma)
    law = inst.pair_kernel.copy()
    for ell in range(LAG_SEARCH_CAP + 1):
        if np.abs(law - target).sum(axis=1).max() <= eps:
            return ell
        law = matrix @ law
    raise CapExceeded(LAG_SEARCH_CAP, LAG_SEARCH_CAP)
