"""Revenue-oriented diffusion auctions on social networks.

Mechanisms (Myerson baselines, k-PWM, CWM, CWM with shifted reserve prices),
incentive-compatibility and individual-rationality verifiers, and a
reproducible experiment harness for expected-revenue tables.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .mechanisms import (MechanismSpec, Outcome, PotentialWinnerChain,
                         ShiftingFunction, cwm, cwm_fast, cwm_srp, k_pwm,
                         k_partial_potential_winner, myerson, myerson_all,
                         myerson_rs, parse_mechanism_id, potential_winners)
from .network import (BuyerReport, ReportProfile, StructureProfile,
                      critical_buyers, diffusion_distance, generate_small_world,
                      parse_edge_list, parse_instance, serialize_instance,
                      valid_buyers, valid_without_buyer, valid_without_diffusion)
from .valuation import (IdentityVirtualDistribution, UniformDistribution,
                        ValueDistribution, check_regularity,
                        distribution_from_spec, inverse_virtual, reserve,
                        virtual_value)

__version__ = "0.1.0"

__all__ = [
    "BuyerReport", "IdentityVirtualDistribution", "KERNEL_BACKEND",
    "MechanismSpec", "Outcome", "PotentialWinnerChain", "ReportProfile",
    "ShiftingFunction", "StructureProfile", "UniformDistribution",
    "ValueDistribution", "check_regularity", "critical_buyers", "cwm",
    "cwm_fast", "cwm_srp", "diffusion_distance", "distribution_from_spec",
    "generate_small_world", "inverse_virtual", "k_partial_potential_winner",
    "k_pwm", "myerson", "myerson_all", "myerson_rs", "parse_edge_list",
    "parse_instance", "parse_mechanism_id", "potential_winners", "reserve",
    "serialize_instance", "valid_buyers", "valid_without_buyer",
    "valid_without_diffusion", "virtual_value",
]
