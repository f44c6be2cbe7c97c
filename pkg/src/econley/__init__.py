"""Conley index computation for strongly indefinite gradient flows.

The package computes cohomological Conley indices of isolated
invariant sets through finite-dimensional truncations, takes direct
limits over the truncation tower, and cross-checks the result against
a critical-point complex built from connecting-orbit counts.
"""

from .cubical import (
    CubeSet,
    CubicalPair,
    GradedZ2Map,
    GradedZ2Space,
    Grid,
    check_exact,
    induced_inclusion,
    mayer_vietoris_delta,
    mayer_vietoris_sequence,
    relative_cohomology,
    triple_sequence,
)
from .functional import (
    CriticalPoint,
    DegeneracyError,
    FunctionalSpec,
    Nonlinearity,
    SpectralOperator,
    TruncationLevel,
    e_index,
    evaluate,
    find_critical_points,
    vector_field,
)

__version__ = "0.1.0"

__all__ = [
    "CriticalPoint",
    "CubeSet",
    "CubicalPair",
    "DegeneracyError",
    "FunctionalSpec",
    "GradedZ2Map",
    "GradedZ2Space",
    "Grid",
    "Nonlinearity",
    "SpectralOperator",
    "TruncationLevel",
    "check_exact",
    "e_index",
    "evaluate",
    "find_critical_points",
    "induced_inclusion",
    "mayer_vietoris_delta",
    "mayer_vietoris_sequence",
    "relative_cohomology",
    "triple_sequence",
    "vector_field",
]
