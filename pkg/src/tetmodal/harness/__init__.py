"""Spec files, artifact bundles, slices, the descent baseline and the CLI."""

from .artifacts import load_artifact, write_artifact
from .slicing import Slice, slice_at
from .solver import SolverConfig, Trajectory, descent_solver
from .specfile import ProblemSpecFile, load_spec, parse_spec, serialize_spec
