"""Joint spectrum allocation, user association, power control and
pairwise AP coordination for cellular downlinks."""

from .network import (
    ChannelParams,
    ExtendedApSet,
    Topology,
    build_extended_model,
    build_neighborhoods,
    compute_gains,
    enumerate_extended,
    generate_topology,
    topology_from_json,
    topology_to_json,
)
from .rates import (
    NO_UE,
    Allocation,
    Pattern,
    TrafficProfile,
    UtilityModel,
    UtilitySpec,
    allocation_rates,
    is_stable,
    pattern_rates,
    spectral_efficiency,
    utility,
    utility_gradient,
    validate_pattern,
)
from .matching import PairingGraph, brute_force_selection, max_weight_selection
from .fp import FpResult, FpState, solve_affine

__all__ = [
    "Allocation",
    "ChannelParams",
    "ExtendedApSet",
    "FpResult",
    "FpState",
    "NO_UE",
    "PairingGraph",
    "Pattern",
    "Topology",
    "TrafficProfile",
    "UtilityModel",
    "UtilitySpec",
    "allocation_rates",
    "brute_force_selection",
    "build_extended_model",
    "build_neighborhoods",
    "compute_gains",
    "enumerate_extended",
    "generate_topology",
    "is_stable",
    "max_weight_selection",
    "pattern_rates",
    "solve_affine",
    "spectral_efficiency",
    "topology_from_json",
    "topology_to_json",
    "utility",
    "utility_gradient",
    "validate_pattern",
]
