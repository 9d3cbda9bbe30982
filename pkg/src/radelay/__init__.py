"""Queueing delay of slotted random access, with and without carrier sensing.

The package computes steady-state success probabilities, service-time
moments, mean queueing delay, delay-optimal transmission probabilities and
sensing-time bounds for sensing-free and sensing-based random access, and
ships a slot-level simulator that independently estimates every analytical
quantity.
"""

from .delay import (
    DelayResult,
    DivergentServiceError,
    HoldingDist,
    InconsistentRegimeError,
    MarkovRenewalModel,
    Q0Optimum,
    Regime,
    SaturatedError,
    ServiceMoments,
    SteadyState,
    alpha_tilde,
    alpha_unconditional,
    build_renewal_model,
    mean_queueing_delay,
    optimal_q0,
    service_moments_closed_form,
    service_moments_generic,
    solve_steady_state,
)
from .fixedpoint import (
    NoRootsError,
    RootPair,
    SaturatedRoot,
    UnsaturatedRegion,
    f_of_p,
    fixed_point_map,
    max_bit_throughput,
    max_throughput,
    saturated_root,
    unsaturated_region,
    unsaturated_roots,
)
from .lambertw import Branch, LambertWDomainError, lambert_w
from .model import (
    AccessScheme,
    BackoffKind,
    BackoffPolicy,
    Connection,
    Family,
    HoldingTimes,
    ModelWarning,
    Scenario,
    ValidationError,
    derive_slot,
    holding_times,
    packet_rate,
)
from .presets_registry import (
    load_preset,
    preset_names,
    scenario_from_preset,
    scheme_from_preset,
)
from .sensing import (
    AlohaSaturatedError,
    SensingBoundResult,
    delay_optimal_bound,
    rate_grid,
    throughput_optimal_bound,
)
from .sim import RaSdtVariant, SimReport, simulate, simulate_ra_sdt

__version__ = "0.1.0"

__all__ = [
    "AccessScheme",
    "AlohaSaturatedError",
    "BackoffKind",
    "BackoffPolicy",
    "Branch",
    "Connection",
    "DelayResult",
    "DivergentServiceError",
    "Family",
    "HoldingDist",
    "HoldingTimes",
    "InconsistentRegimeError",
    "LambertWDomainError",
    "MarkovRenewalModel",
    "ModelWarning",
    "NoRootsError",
    "Q0Optimum",
    "RaSdtVariant",
    "Regime",
    "RootPair",
    "SaturatedError",
    "SaturatedRoot",
    "Scenario",
    "SensingBoundResult",
    "ServiceMoments",
    "SimReport",
    "SteadyState",
    "UnsaturatedRegion",
    "ValidationError",
    "alpha_tilde",
    "alpha_unconditional",
    "build_renewal_model",
    "delay_optimal_bound",
    "derive_slot",
    "f_of_p",
    "fixed_point_map",
    "holding_times",
    "lambert_w",
    "load_preset",
    "max_bit_throughput",
    "max_throughput",
    "mean_queueing_delay",
    "optimal_q0",
    "packet_rate",
    "preset_names",
    "rate_grid",
    "saturated_root",
    "scenario_from_preset",
    "scheme_from_preset",
    "service_moments_closed_form",
    "service_moments_generic",
    "simulate",
    "simulate_ra_sdt",
    "solve_steady_state",
    "throughput_optimal_bound",
    "unsaturated_region",
    "unsaturated_roots",
    "__version__",
]
