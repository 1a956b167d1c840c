"""Occupancy counts of the infinite urn scheme over index sets.

Submodules
----------
distributions
    Power-law urn law, occupancy expectations, Karlin-Rouault probabilities.
intervals
    Finite unions of closed intervals and circular arcs.
occupancy
    Simulation and counting of ``R*_{nA,k}`` and its Poissonized version.
kernels
    Limiting covariance kernels, closed form and by quadrature.
montecarlo
    Replication harness producing pass/fail reports.
textscan
    Distinct-word processes and the circular homogeneity scan.
"""
from ._backend import BACKEND
from .distributions import KarlinRouault, PowerLawPmf, karlin_rouault
from .intervals import Endpoints, IntervalSet, circular_arcs, from_endpoints, parse_interval_set
from .kernels import (
    KernelValue,
    cross_kernel,
    forward_kernel,
    k_exact,
    kstar_closed,
    kstar_quadrature,
    pi_value,
    q_limit_cov,
    u_field_kernel,
)
from .occupancy import (
    BallSequence,
    PoissonRealization,
    Query,
    batch_count,
    batch_count_poisson,
    count,
    count_poisson,
    simulate_fixed,
    simulate_poisson,
    standardize,
)
from .textscan import TokenSeq, homogeneity_stat, p_value, theta_hat, tokenize

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "KarlinRouault",
    "PowerLawPmf",
    "karlin_rouault",
    "Endpoints",
    "IntervalSet",
    "circular_arcs",
    "from_endpoints",
    "parse_interval_set",
    "KernelValue",
    "cross_kernel",
    "forward_kernel",
    "k_exact",
    "kstar_closed",
    "kstar_quadrature",
    "pi_value",
    "q_limit_cov",
    "u_field_kernel",
    "BallSequence",
    "PoissonRealization",
    "Query",
    "batch_count",
    "batch_count_poisson",
    "count",
    "count_poisson",
    "simulate_fixed",
    "simulate_poisson",
    "standardize",
    "TokenSeq",
    "homogeneity_stat",
    "p_value",
    "theta_hat",
    "tokenize",
]
