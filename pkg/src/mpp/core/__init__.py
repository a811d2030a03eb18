"""Instance types, induced Markov chains and persuasiveness checks."""

from mpp.core.chain import (
    SpectralQuantities,
    balance_residual,
    check_unichain,
    induced_chain,
    lag_distance,
    lag_distances,
    long_run_reward,
    sender_preferred_invariant,
    sender_preferred_invariant_lp,
    spectral_quantities,
    state_chain,
    stationary_distribution,
)
from mpp.core.instance import (
    InvariantDistribution,
    MppInstance,
    SignalingMechanism,
    constant_recommendation,
    enforce_cap,
    full_revelation,
    incremental_utility,
    receiver_best_action,
    receiver_best_actions,
    slice_cap,
    validate_instance,
)
from mpp.core.persuasion import (
    FULL_HISTORY,
    NO_HISTORY,
    InformationModel,
    PersuasionCheck,
    check_persuasive,
    lag,
    parse_model,
    posterior_table,
)

__all__ = [
    "FULL_HISTORY",
    "NO_HISTORY",
    "InformationModel",
    "InvariantDistribution",
    "MppInstance",
    "PersuasionCheck",
    "SignalingMechanism",
    "SpectralQuantities",
    "balance_residual",
    "check_persuasive",
    "check_unichain",
    "constant_recommendation",
    "enforce_cap",
    "full_revelation",
    "incremental_utility",
    "induced_chain",
    "lag",
    "lag_distance",
    "lag_distances",
    "long_run_reward",
    "parse_model",
    "posterior_table",
    "receiver_best_action",
    "receiver_best_actions",
    "sender_preferred_invariant",
    "sender_preferred_invariant_lp",
    "slice_cap",
    "spectral_quantities",
    "state_chain",
    "stationary_distribution",
    "validate_instance",
]
