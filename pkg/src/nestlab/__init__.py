"""Surface-code single-fault nests, matching decoding and logical error rates."""

from .lattice import Boundary, CodeLayout, LogicalOperatorSpec, build_layout, check_commutation, logical_operator_specs
from .circuit import RoundSchedule, build_round_schedule, enumerate_fault_locations, fault_probability
from .nest import Nest, Stick, build_nest, compose_xor, export_nest, import_nest
from .decoder import build_matching_graph, exhaustive_mwpm, mwpm, pairwise_weight
from .montecarlo import RateEstimate, TrialConfig, estimate_rates

__all__ = [
    "Boundary", "CodeLayout", "LogicalOperatorSpec", "build_layout", "check_commutation",
    "logical_operator_specs", "RoundSchedule", "build_round_schedule", "enumerate_fault_locations",
    "fault_probability", "Nest", "Stick", "build_nest", "compose_xor", "export_nest", "import_nest",
    "build_matching_graph", "exhaustive_mwpm", "mwpm", "pairwise_weight", "RateEstimate", "TrialConfig",
    "estimate_rates",
]
__version__ = "0.1.0"
