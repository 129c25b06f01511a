"""Maxmin CSP reconfiguration toolkit.

Exact desk-scale solvers, Hadamard codeword reconfiguration, robustization
into circuit systems, assignment-tester composition, and arity reduction,
with a CLI for generation, reduction, verification, and experiments.
"""

from .constants import DEFAULT_BUDGET, DEFAULT_SEED, FARNESS_MARGIN, QUARTER, THEORETICAL
from .core import (
    Assignment,
    ConstraintGraph,
    InstanceError,
    ReconfInstance,
    ReconfigSequence,
    Value,
    deserialize,
    sequence_value,
    serialize,
    validate_sequence,
    value,
)
from .solver import MaxminResult, dfs_maxmin, maxmin_value, reachable_at_threshold

__all__ = [
    "Assignment",
    "ConstraintGraph",
    "DEFAULT_BUDGET",
    "DEFAULT_SEED",
    "FARNESS_MARGIN",
    "InstanceError",
    "MaxminResult",
    "QUARTER",
    "ReconfInstance",
    "ReconfigSequence",
    "THEORETICAL",
    "Value",
    "deserialize",
    "dfs_maxmin",
    "maxmin_value",
    "reachable_at_threshold",
    "sequence_value",
    "serialize",
    "validate_sequence",
    "value",
]
