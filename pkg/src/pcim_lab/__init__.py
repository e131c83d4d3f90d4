"""Exact analysis of piecewise contracting interval maps."""
from .map_core import (
    Branch,
    ClosedInterval,
    PCIMDefinition,
    ValidatedPCIM,
    check_D_in_Xtilde,
    check_separation,
    contracted_rotation,
    evaluate,
    make_map,
    one_sided_limits,
    piece_index,
    validate_pcim,
)

__all__ = [
    "Branch",
    "ClosedInterval",
    "PCIMDefinition",
    "ValidatedPCIM",
    "check_D_in_Xtilde",
    "check_separation",
    "contracted_rotation",
    "evaluate",
    "make_map",
    "one_sided_limits",
    "piece_index",
    "validate_pcim",
]

__version__ = "0.1.0"
