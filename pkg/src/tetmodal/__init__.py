"""Multimodal bi-objective benchmark problems built on FC24 tetrahedral meshes."""

from .errors import (
    DegenerateBox,
    InvalidNesting,
    InvalidPrimitive,
    InvalidTransform,
    IrrationalScale,
    MisalignedChild,
    NonDivisibleExtent,
    NoPersistentOptimum,
    OutOfDomain,
    SpecError,
    SpecParseError,
    TetmodalError,
    ZeroSpacing,
)
from .mesh import BaryCoords, Box3, PLFieldPair, TetMesh, build_fc24_mesh, interpolate, locate
from .modes import ModeHierarchy, ModeId, ModeSet, admissible_vertices, local_pareto_vertices, mode_regions, mode_set
from .nesting import ChildPlacement, NestingNode, Problem, compose_problem, plan_refinement
from .primitive import Optimum, PrimitiveSpec, build_primitive_field, standard_primitive, validate_primitive
from .transform import MonotoneMap, TransformChain, apply_monotone, rotate_objectives

__version__ = "0.1.0"
