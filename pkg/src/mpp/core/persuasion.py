"""Obedience checks for the no-history, full-history and lagged information models."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from mpp.core.chain import induced_chain, sender_preferred_invariant, slice_index, slice_length
from mpp.core.instance import (
    InvariantDistribution,
    MppInstance,
    SignalingMechanism,
    check_compatible,
    enforce_cap,
    incremental_utility,
)

OBEDIENCE_TOL = 1e-9
POSITIVITY_TOL = 1e-12


@dataclass(frozen=True)
class InformationModel:
    """What receivers know about the history.

    ``kind`` is ``"no"`` (nothing), ``"full"`` (everything) or ``"lag"``
    (everything except the most recent ``lag`` periods).
    """

    kind: str
    lag: int = 0

    def __post_init__(self):
        if self.kind not in ("no", "full", "lag"):
            raise ValueError(f"unknown information model {self.kind!r}")
        if self.kind == "lag" and self.lag < 0:
            raise ValueError("lag must be non-negative")
        if self.kind == "full" and self.lag != 0:
            raise ValueError("the full-history model has lag 0")

    @property
    def effective_lag(self) -> int | None:
        """Lag as an integer, ``None`` for the no-history model."""
        if self.kind == "no":
            return None
        return self.lag

    def __str__(self) -> str:
        return f"lag({self.lag})" if self.kind == "lag" else self.kind


NO_HISTORY = InformationModel("no")
FULL_HISTORY = InformationModel("full")


def lag(ell: int) -> InformationModel:
    """Lagged information model; ``lag(0)`` is equivalent to full history."""
    return InformationModel("lag", int(ell))


def parse_model(spec) -> InformationModel:
    """Accept an :class:`InformationModel`, ``"no"``, ``"full"`` or ``"lag(3)"``/``"lag:3"``."""
    if isinstance(spec, InformationModel):
        return spec
    text = str(spec).strip().lower()
    if text in ("no", "none"):
        return NO_HISTORY
    if text == "full":
        return FULL_HISTORY
    match = re.fullmatch(r"lag[(:\s]?\s*(\d+)\s*\)?", text)
    if match:
        return lag(int(match.group(1)))
    raise ValueError(f"cannot parse information model {spec!r}")


class PersuasionCheck(NamedTuple):
    """Outcome of :func:`check_persuasive`.

    ``worst`` locates the largest violation as ``(slice, a, a')``; the slice
    is ``None`` for the no-history model and ``-1`` when nothing is violated.
    """

    ok: bool
    max_violation: float
    worst: tuple | None = None


def recommendation_joint(inst: MppInstance, sigma: SignalingMechanism, length: int | None = None) -> np.ndarray:
    """``J[h, w, a]``: probability of next state ``w`` and recommendation ``a`` given slice ``h``."""
    m = slice_length(sigma) if length is None else length
    idx = slice_index(inst.n_pairs, m, sigma.memory)
    next_state = inst.pair_kernel[idx.last]
    return next_state[:, :, None] * sigma.table[idx.window]


def lagged_joint(
    inst: MppInstance, sigma: SignalingMechanism, ell: int, matrix: np.ndarray | None = None
) -> np.ndarray:
    """Joint law of (current state, recommendation) given the slice known ``ell`` periods ago."""
    joint = recommendation_joint(inst, sigma)
    n = joint.shape[0]
    flat = joint.reshape(n, -1)
    if ell > 0:
        if matrix is None:
            matrix = induced_chain(inst, sigma)
        for _ in range(ell):
            flat = matrix @ flat
    return flat.reshape(joint.shape)


def _violations(beliefs: np.ndarray, du: np.ndarray) -> np.ndarray:
    """Obedience shortfalls for beliefs ``beliefs[..., w, a]`` (already normalised).

    Returns ``shortfall[..., a, b] = max(0, -E[du(w, a, b)])``.
    """
    gains = np.einsum("...wa,wab->...ab", beliefs, du)
    return np.clip(-gains, 0.0, None)


def posterior_table(
    inst: MppInstance,
    sigma: SignalingMechanism,
    model,
    invariant: InvariantDistribution | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior beliefs per known slice and recommendation.

    Returns
    -------
    posteriors : ndarray, shape (G, n_states, n_actions)
        ``posteriors[g, :, a]`` is the belief after recommendation ``a`` given
        known slice ``g`` (``G = 1`` for the no-history model).
    weight : ndarray, shape (G, n_actions)
        Probability of the conditioning event ``(g, a)``; beliefs with weight
        at most ``1e-12`` are undefined and returned as zeros.
    """
    model = parse_model(model)
    check_compatible(inst, sigma)
    m = slice_length(sigma)
    if model.kind != "no":
        enforce_cap(model.lag + m)
    if invariant is None:
        invariant = sender_preferred_invariant(inst, sigma)
    pi = invariant.probs if invariant.slice_length == m else None
    if pi is None:
        raise ValueError("invariant slice length does not match the mechanism")
    if model.kind == "no":
        joint = np.einsum("h,hwa->wa", pi, recommendation_joint(inst, sigma))[None]
        mass = np.ones(1)
    else:
        joint = lagged_joint(inst, sigma, model.lag)
        mass = pi
    rec_prob = joint.sum(axis=1)  # (G, A)
    weight = mass[:, None] * rec_prob
    defined = (mass[:, None] > POSITIVITY_TOL) & (rec_prob > POSITIVITY_TOL)
    safe = np.where(defined, rec_prob, 1.0)
    posteriors = np.where(defined[:, None, :], joint / safe[:, None, :], 0.0)
    return posteriors, np.where(defined, weight, 0.0)


def check_persuasive(
    inst: MppInstance,
    sigma: SignalingMechanism,
    model="no",
    tol: float = OBEDIENCE_TOL,
    invariant: InvariantDistribution | None = None,
) -> PersuasionCheck:
    """Check that following every recommendation is a best response.

    For each belief the information model generates (one belief for the
    no-history model, one per known slice otherwise) and every recommended
    action ``a`` with positive probability, the expected incremental utility
    of ``a`` over every alternative must be at least ``-tol``.  Recommendations
    with probability at most ``1e-12`` define no belief and are skipped.

    Raises
    ------
    CapExceeded
        When ``lag + max(k, 1)`` exceeds the slice cap.
    """
    posteriors, weight = posterior_table(inst, sigma, model, invariant)
    shortfall = _violations(posteriors, incremental_utility(inst))
    shortfall = np.where((weight > 0)[:, :, None], shortfall, 0.0)
    worst = float(shortfall.max()) if shortfall.size else 0.0
    if worst > 0:
        g, a, b = np.unravel_index(int(np.argmax(shortfall)), shortfall.shape)
        where = (None if parse_model(model).kind == "no" else int(g), int(a), int(b))
    else:
        where = (-1, -1, -1)
    return PersuasionCheck(worst <= tol, worst, where)
