"""Nesting primitive domains into one PL problem.

A child primitive is shrunk in x/y by ``scale``, turned about z in quarter
turns, centred at (an offset from) one of its parent's optima and spans the
parent's full z range. Inside that footprint the parent's ``psi2`` is
replaced by ``anchor_value + value_gain * child_psi2``; across the outermost
grid cell of the footprint the two are linearly blended so the footprint
boundary carries the parent's values.

The composite lives on a single FC24 mesh whose spacing is refined (by a
power of two) until every descendant's grid maps onto parent grid corners.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .errors import InvalidNesting, IrrationalScale, MisalignedChild, NonDivisibleExtent
from .mesh import DOMAIN_TOL, Box3, PLFieldPair, TetMesh, build_fc24_mesh, grid_counts
from .primitive import (
    Optimum,
    PrimitiveSpec,
    basin_depth,
    build_primitive_field,
    midpoint,
    nearest_pairs,
    on_grid,
    validate_primitive,
)
from .transform import TransformChain, apply_chain

ROTATIONS = (0, 90, 180, 270)
DEFAULT_GAIN_FRACTION = 0.4
MAX_REFINEMENT = 64

_ROT = {
    0: np.array([[1, 0], [0, 1]]),
    90: np.array([[0, -1], [1, 0]]),
    180: np.array([[-1, 0], [0, -1]]),
    270: np.array([[0, 1], [-1, 0]]),
}


@dataclass(frozen=True)
class ChildPlacement:
    node: "NestingNode"
    anchor: str = "major"
    rotation: int = 0
    scale: float = 0.25
    value_gain: float | None = None
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        anchor = str(self.anchor)
        if anchor == "minor":
            anchor = "minor:0"
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))
        if self.value_gain is not None:
            object.__setattr__(self, "value_gain", float(self.value_gain))


@dataclass(frozen=True)
class NestingNode:
    primitive: PrimitiveSpec = field(default_factory=PrimitiveSpec)
    children: tuple[ChildPlacement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def depth(self) -> int:
        return 1 + max((c.node.depth for c in self.children), default=0)


def resolve_anchor(spec: PrimitiveSpec, anchor: str) -> Optimum:
    if anchor == "major":
        return spec.major
    if anchor.startswith("minor:"):
        try:
            k = int(anchor.split(":", 1)[1])
        except ValueError:
            raise InvalidNesting(f"bad anchor {anchor!r}") from None
        minors = spec.minors
        if not 0 <= k < len(minors):
            raise InvalidNesting(f"anchor {anchor!r} but the primitive has {len(minors)} minor optima")
        return minors[k]
    raise InvalidNesting(f"anchor must be 'major' or 'minor:<k>', got {anchor!r}")


@dataclass(frozen=True)
class Anchorage:
    """Resolved placement of a child: the affine map between child and parent coordinates."""

    center: tuple[float, float]
    rotation: int
    scale: float
    child_box: Box3
    parent_z: tuple[float, float]
    anchor_value: float
    value_gain: float = 1.0

    @property
    def _child_center(self) -> np.ndarray:
        return (np.asarray(self.child_box.min[:2]) + np.asarray(self.child_box.max[:2])) / 2.0

    @property
    def _z_ratio(self) -> float:
        return (self.parent_z[1] - self.parent_z[0]) / (self.child_box.max[2] - self.child_box.min[2])

    def region(self) -> tuple[float, float, float, float]:
        """Parent-space footprint ``(xmin, xmax, ymin, ymax)``."""
        half = self.scale * np.abs(_ROT[self.rotation]) @ (self.child_box.extent[:2] / 2.0)
        cx, cy = self.center
        return (cx - half[0], cx + half[0], cy - half[1], cy + half[1])

    def to_parent(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xy = np.asarray(self.center) + self.scale * (pts[:, :2] - self._child_center) @ _ROT[self.rotation].T
        z = self.parent_z[0] + (pts[:, 2] - self.child_box.min[2]) * self._z_ratio
        return np.column_stack([xy, z])

    def to_child(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        uv = self._child_center + ((pts[:, :2] - np.asarray(self.center)) @ _ROT[self.rotation]) / self.scale
        w = self.child_box.min[2] + (pts[:, 2] - self.parent_z[0]) / self._z_ratio
        return np.column_stack([uv, w])

    def child_spacing(self, spacing) -> tuple[float, float, float]:
        hx, hy, hz = (float(s) for s in spacing)
        if self.rotation in (90, 270):
            hx, hy = hy, hx
        return (hx / self.scale, hy / self.scale, hz / self._z_ratio)


def anchorage_for(parent: PrimitiveSpec, placement: ChildPlacement, value_gain: float = 1.0) -> Anchorage:
    anchor = resolve_anchor(parent, placement.anchor)
    center = (anchor.position[0] + placement.offset[0], anchor.position[1] + placement.offset[1])
    return Anchorage(
        center=center,
        rotation=int(placement.rotation),
        scale=placement.scale,
        child_box=placement.node.primitive.box,
        parent_z=(parent.box.min[2], parent.box.max[2]),
        anchor_value=anchor.base_value,
        value_gain=value_gain,
    )


def validate_tree(node: NestingNode) -> None:
    """Structural checks that need no mesh: placements, footprints, disjointness."""
    spec = node.primitive
    validate_primitive(spec, check_grid=False)
    box = spec.box
    regions = []
    for i, ch in enumerate(node.children):
        if ch.rotation not in ROTATIONS:
            raise InvalidNesting(f"child {i}: rotation must be one of {ROTATIONS}, got {ch.rotation!r}")
        if not (0.0 < ch.scale < 1.0):
            raise InvalidNesting(f"child {i}: scale must lie in (0, 1), got {ch.scale!r}")
        if ch.value_gain is not None and not (np.isfinite(ch.value_gain) and ch.value_gain > 0):
            raise InvalidNesting(f"child {i}: value_gain must be > 0, got {ch.value_gain!r}")
        anchor = resolve_anchor(spec, ch.anchor)
        anch = anchorage_for(spec, ch)
        x0, x1, y0, y1 = anch.region()
        if not (box.min[0] < x0 and x1 < box.max[0] and box.min[1] < y0 and y1 < box.max[1]):
            raise InvalidNesting(f"child {i}: footprint {anch.region()} not strictly inside the parent box")
        for o in spec.optima:
            if o is anchor:
                continue
            if x0 - DOMAIN_TOL <= o.position[0] <= x1 + DOMAIN_TOL and y0 - DOMAIN_TOL <= o.position[1] <= y1 + DOMAIN_TOL:
                raise InvalidNesting(f"child {i}: footprint covers the parent optimum at {o.position}")
        regions.append((i, (x0, x1, y0, y1)))
        validate_tree(ch.node)
    for (i, a), (j, b) in combinations(regions, 2):
        overlap_x = min(a[1], b[1]) - max(a[0], b[0])
        overlap_y = min(a[3], b[3]) - max(a[2], b[2])
        if overlap_x > DOMAIN_TOL and overlap_y > DOMAIN_TOL:
            raise InvalidNesting(f"children {i} and {j} overlap")


def _aligned(node: NestingNode, spacing) -> bool:
    spec = node.primitive
    box = spec.box
    try:
        grid_counts(box, spacing)
    except NonDivisibleExtent:
        return False
    hx, hy, _ = spacing

    def on(pt):
        return on_grid(pt[0], box.min[0], hx) and on_grid(pt[1], box.min[1], hy)

    if not all(on(o.position) for o in spec.optima):
        return False
    if not all(on(midpoint(o, q)) for o, q in nearest_pairs(spec.optima)):
        return False
    for ch in node.children:
        anch = anchorage_for(spec, ch)
        x0, x1, y0, y1 = anch.region()
        if not all(on(c) for c in ((x0, y0), (x1, y1))):
            return False
        if not _aligned(ch.node, anch.child_spacing(spacing)):
            return False
    return True


def plan_refinement(root: NestingNode, spacing=None, max_refinement: int = MAX_REFINEMENT) -> np.ndarray:
    """Coarsest dyadic refinement of the root spacing that aligns every descendant."""
    base = np.asarray(root.primitive.spacing if spacing is None else spacing, dtype=float)
    # the requested spacing must tile the root box before any refinement
    grid_counts(root.primitive.box, base)
    k = 1
    while k <= max_refinement:
        if _aligned(root, base / k):
            return base / k
        k *= 2
    raise IrrationalScale(
        f"no refinement of spacing {tuple(float(b) for b in base)} down to 1/{max_refinement} aligns all nested children"
    )


def blend_weights(points, region, spacing) -> np.ndarray:
    """0 on the footprint boundary, rising linearly to 1 one grid cell inside."""
    x0, x1, y0, y1 = region
    hx, hy = float(spacing[0]), float(spacing[1])
    p = np.atleast_2d(points)
    d = np.minimum.reduce([(p[:, 0] - x0) / hx, (x1 - p[:, 0]) / hx, (p[:, 1] - y0) / hy, (y1 - p[:, 1]) / hy])
    return np.clip(d, 0.0, 1.0)


def embed_child(parent_field: PLFieldPair, anchorage: Anchorage, child_field: PLFieldPair) -> PLFieldPair:
    mesh = parent_field.mesh
    x0, x1, y0, y1 = anchorage.region()
    v = mesh.vertices
    inside = (
        (v[:, 0] >= x0 - DOMAIN_TOL) & (v[:, 0] <= x1 + DOMAIN_TOL)
        & (v[:, 1] >= y0 - DOMAIN_TOL) & (v[:, 1] <= y1 + DOMAIN_TOL)
    )
    sel = np.flatnonzero(inside)
    pre = anchorage.to_child(v[sel])
    idx = child_field.mesh.vertex_at(pre)
    if np.any(idx < 0):
        bad = v[sel][idx < 0][0]
        raise MisalignedChild(f"parent vertex {tuple(bad)} has no child vertex at its pre-image")
    child_psi2 = anchorage.anchor_value + anchorage.value_gain * child_field.values[idx, 1]
    w = blend_weights(v[sel], (x0, x1, y0, y1), mesh.spacing)
    values = parent_field.values.copy()
    values[sel, 1] = (1.0 - w) * values[sel, 1] + w * child_psi2
    return parent_field.with_values(values)


def default_gain(depth: float, child_range: float) -> float:
    return DEFAULT_GAIN_FRACTION * depth / child_range


def _compose_field(node: NestingNode, spacing) -> PLFieldPair:
    spec = node.primitive
    mesh = build_fc24_mesh(spec.box, spacing)
    psi = build_primitive_field(spec, mesh)
    for i, ch in enumerate(node.children):
        anch = anchorage_for(spec, ch)
        child = _compose_field(ch.node, anch.child_spacing(spacing))
        child_range = float(np.ptp(child.values[:, 1]))
        depth = basin_depth(spec, resolve_anchor(spec, ch.anchor))
        gain = default_gain(depth, child_range) if ch.value_gain is None else ch.value_gain
        if not gain * child_range < depth:
            raise InvalidNesting(
                f"child {i}: value_gain * child range = {gain * child_range!r} must stay below "
                f"the anchor basin depth {depth!r}"
            )
        psi = embed_child(psi, replace(anch, value_gain=gain), child)
    return psi


@dataclass(frozen=True, eq=False)
class Problem:
    mesh: TetMesh
    psi: PLFieldPair
    objectives: PLFieldPair
    root: NestingNode
    transform: TransformChain

    def evaluate(self, points, raw_psi: bool = False, baked: bool = False) -> np.ndarray:
        """Objective values at arbitrary points.

        By default the range maps are applied after interpolating the base
        map (exact level sets); ``baked`` interpolates the vertex objectives
        instead, and ``raw_psi`` returns the base map itself.
        """
        if baked:
            return self.objectives.evaluate(points)
        psi = self.psi.evaluate(points)
        return psi if raw_psi else self.transform.apply_values(psi)


def compose_problem(root: NestingNode, transform: TransformChain | None = None, spacing=None) -> Problem:
    transform = TransformChain() if transform is None else transform
    validate_tree(root)
    fine = plan_refinement(root, spacing)
    psi = _compose_field(root, fine)
    return Problem(psi.mesh, psi, apply_chain(psi, transform), root, transform)
