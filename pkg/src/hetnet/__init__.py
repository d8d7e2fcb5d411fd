"""Decoupled uplink/downlink access in a two-tier sub-6GHz and mmWave network.

Closed forms (Fox H-functions), quadrature oracles and a Monte Carlo
simulator for association probabilities, serving distances, rates and
spectral efficiencies.
"""

from .association import prob_case_closed, prob_case_quadrature, prob_mcell_coupled
from .errors import (
    ConfigError,
    ContourError,
    HetNetError,
    InvalidInputError,
    NonConvergenceError,
    PoleError,
    ProbabilityRangeError,
    UnsupportedPairError,
    ZeroProbabilityCaseError,
)
from .model import LOS, NLOS, AssociationCase, LinkDirection, NetworkConfig, Tier, derive
from .montecarlo import McResult, simulate
from .rates import RateQuery, ServingMode, avg_rate_closed, avg_rate_quadrature, spectral_efficiency

__version__ = "0.1.0"

__all__ = [
    "AssociationCase",
    "ConfigError",
    "ContourError",
    "HetNetError",
    "InvalidInputError",
    "LOS",
    "LinkDirection",
    "McResult",
    "NLOS",
    "NetworkConfig",
    "NonConvergenceError",
    "PoleError",
    "ProbabilityRangeError",
    "RateQuery",
    "ServingMode",
    "Tier",
    "UnsupportedPairError",
    "ZeroProbabilityCaseError",
    "avg_rate_closed",
    "avg_rate_quadrature",
    "derive",
    "prob_case_closed",
    "prob_case_quadrature",
    "prob_mcell_coupled",
    "simulate",
    "spectral_efficiency",
]
