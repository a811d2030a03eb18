"""Exception hierarchy shared by every solver and checker.

Each class maps onto one failure cause so that the command-line layer can
translate exceptions into disjoint exit codes (see ``mpp.cli``).
"""

from __future__ import annotations


class MppError(Exception):
    """Base class for all package errors."""


# -- input problems (exit 2) ---------------------------------------------------


class InvalidInstance(MppError):
    """An instance file or object violates the documented schema or invariants."""


class InvalidMechanism(MppError):
    """A signaling table has the wrong shape or rows that are not distributions."""


# -- solver problems (exit 3) --------------------------------------------------


class SolverError(MppError):
    """Numerical or algorithmic failure inside an optimisation routine."""


class NumericalFailure(SolverError):
    """Simplex reported feasibility but the recovered point violates constraints."""


class NonUnichain(SolverError):
    """A transition matrix has more than one closed recurrent class."""


class DegenerateGap(SolverError):
    """The absolute spectral gap of a chain is numerically zero."""


class WitnessVerificationFailed(SolverError):
    """A constructed witness mechanism failed its own verification (a bug)."""


class NoFeasibleCandidate(SolverError):
    """No multi-start candidate passed exact persuasiveness verification."""


class InternalError(SolverError):
    """A condition that the underlying theory rules out was observed."""


# -- cap problems (exit 4) -----------------------------------------------------


class CapExceeded(MppError):
    """The requested history slice is longer than the configured cap."""

    def __init__(self, length: int, cap: int):
        super().__init__(
            f"slice length {length} exceeds the cap {cap} "
            f"(raise it with the MPP_SLICE_CAP environment variable)"
        )
        self.length = length
        self.cap = cap


# -- precondition problems (exit 5) ------------------------------------------


class PreconditionError(MppError):
    """A mathematical precondition of an operation does not hold."""


class NotPersuasive(PreconditionError):
    """A mechanism expected to be obedient is not."""


class StationarityViolated(PreconditionError):
    """Weighted beliefs do not satisfy the Markov splitting condition."""


class RegularityFails(PreconditionError):
    """Some recommended action is not strictly optimal on any belief ball."""


class EpsilonTooLarge(PreconditionError):
    """The requested robustness radius exceeds the admissible threshold."""

    def __init__(self, epsilon: float, threshold: float):
        super().__init__(
            f"epsilon={epsilon:.6g} is not below the admissible threshold {threshold:.6g}"
        )
        self.epsilon = epsilon
        self.threshold = threshold
