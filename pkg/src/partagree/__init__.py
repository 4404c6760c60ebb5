"""Min-flooding k-agreement in p-partitioned dynamic networks.

Simulator, adversaries and potential-function analytics.
"""

from partagree.netcore import (
    ComponentLabeling,
    PartitionViolation,
    RoundTopology,
    TopologyError,
    count_components,
    validate_p_partitioned,
)
from partagree.protocol import (
    KnownBound,
    ProcessState,
    UnknownSize,
    budget_k_agreement,
    budget_p_agreement,
    outgoing_message,
    step,
)

__all__ = [
    "ComponentLabeling",
    "KnownBound",
    "PartitionViolation",
    "ProcessState",
    "RoundTopology",
    "TopologyError",
    "UnknownSize",
    "budget_k_agreement",
    "budget_p_agreement",
    "count_components",
    "outgoing_message",
    "step",
    "validate_p_partitioned",
]
