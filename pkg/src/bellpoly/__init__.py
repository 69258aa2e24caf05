"""Exact correlation polytopes for Bell scenarios with locally compatible
measurements: behaviour checks, local-set membership with certificates,
facet/vertex enumeration, Fine-style joint-distribution conversions and a
floating-point quantum layer."""

from .scenario import Party, Scenario, ScenarioError, build_index, subcontexts
from .behaviour import Behaviour, MarginalBehaviour, check_nd, check_ns, classify_nsnd, marginal

__all__ = [
    "Party", "Scenario", "ScenarioError", "build_index", "subcontexts",
    "Behaviour", "MarginalBehaviour", "check_ns", "check_nd", "classify_nsnd", "marginal",
]
