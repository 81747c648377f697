"""Maximal flows and minimal cutsets in lattice networks with random i.i.d. capacities."""

from .capacity import CapacityField, CapacityLaw, replicate_stream, sample_field, validate_law
from .errors import (
    ConfigError,
    DegenerateDiscretization,
    GeometryError,
    InvariantViolation,
    LawError,
    ResourceLimitError,
)
from .flow import CutSet, FlowResult, brute_force_min_cut, is_cutset, is_epsilon_cutset, max_flow
from .geometry import Box, ConvexPolytope, DomainSpec, PolyhedralSet, VoxelSet
from .lattice import Hyperrectangle, LatticeGraph, build_ball, build_cylinder, build_lattice

__version__ = "0.1.0"

__all__ = [
    "Box",
    "CapacityField",
    "CapacityLaw",
    "ConfigError",
    "ConvexPolytope",
    "CutSet",
    "DegenerateDiscretization",
    "DomainSpec",
    "FlowResult",
    "GeometryError",
    "Hyperrectangle",
    "InvariantViolation",
    "LatticeGraph",
    "LawError",
    "PolyhedralSet",
    "ResourceLimitError",
    "VoxelSet",
    "brute_force_min_cut",
    "build_ball",
    "build_cylinder",
    "build_lattice",
    "is_cutset",
    "is_epsilon_cutset",
    "max_flow",
    "replicate_stream",
    "sample_field",
    "validate_law",
]
