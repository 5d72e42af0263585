"""The primitive domain: a box carrying a major and a minor optimum.

The second base objective ``psi2`` is built slice-wise. On the bottom slice
every point takes the value of its dominant optimum's l1 valley,
``base + slope * |a - position|_1``; on the top slice only the optima flagged
``persists_at_top`` compete. Vertex values in between are the affine blend of
the two slice formulas in z, and ``psi1`` is simply z.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidPrimitive, NoPersistentOptimum
from .mesh import Box3, PLFieldPair, TetMesh, build_fc24_mesh, grid_counts

TIE_TOL = 1e-12


@dataclass(frozen=True)
class Optimum:
    position: tuple[float, float]
    base_value: float
    slope: float
    rank: int
    persists_at_top: bool = False

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "base_value", float(self.base_value))
        object.__setattr__(self, "slope", float(self.slope))
        object.__setattr__(self, "rank", int(self.rank))
        object.__setattr__(self, "persists_at_top", bool(self.persists_at_top))

    def branch(self, a) -> float:
        """Value of this optimum's valley at the 2D point ``a``."""
        return self.base_value + self.slope * l1_distance(a, self.position)


STANDARD_BOX = Box3((0.0, -1.0, 0.0), (4.0, 1.0, 1.0))
MAJOR = Optimum((1.0, 0.0), 0.0, 1.0, rank=1, persists_at_top=True)
MINOR = Optimum((3.0, 0.0), 0.5, 0.5, rank=0, persists_at_top=False)


@dataclass(frozen=True)
class PrimitiveSpec:
    box: Box3 = STANDARD_BOX
    optima: tuple[Optimum, ...] = (MAJOR, MINOR)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "optima", tuple(self.optima))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def major(self) -> Optimum:
        return max(self.optima, key=lambda o: o.rank)

    @property
    def minors(self) -> tuple[Optimum, ...]:
        """Non-major optima, strongest first."""
        return tuple(sorted((o for o in self.optima if o is not self.major), key=lambda o: -o.rank))


def standard_primitive() -> PrimitiveSpec:
    return PrimitiveSpec()


def l1_distance(a, b) -> float:
    return abs(float(a[0]) - float(b[0])) + abs(float(a[1]) - float(b[1]))


def dominant_optimum(a, optima) -> Optimum:
    """The optimum whose valley is lowest at ``a``; equal valleys go to the higher rank."""
    if not optima:
        raise InvalidPrimitive("dominant_optimum needs at least one optimum")
    best = None
    for o in optima:
        v = o.branch(a)
        if best is None or v < best[0] - TIE_TOL or (abs(v - best[0]) <= TIE_TOL and o.rank > best[1].rank):
            best = (v, o)
    return best[1]


def slice_value_z0(a, optima) -> float:
    return dominant_optimum(a, optima).branch(a)


def slice_value_z1(a, optima) -> float:
    top = [o for o in optima if o.persists_at_top]
    if not top:
        raise NoPersistentOptimum("no optimum persists to the top slice")
    return dominant_optimum(a, top).branch(a)


def slice_values(xy, optima) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised slice formula: lowest valley value and index of the dominant optimum."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    if not optima:
        raise NoPersistentOptimum("empty optimum set")
    branches = np.stack(
        [o.base_value + o.slope * np.abs(xy - np.asarray(o.position)).sum(axis=1) for o in optima], axis=1
    )
    low = branches.min(axis=1, keepdims=True)
    ranks = np.array([o.rank for o in optima], dtype=float)
    # among near-ties pick the highest rank
    score = np.where(branches <= low + TIE_TOL, ranks, -np.inf)
    idx = np.argmax(score, axis=1)
    return branches[np.arange(len(xy)), idx], idx


def psi2_at(spec: PrimitiveSpec, points) -> np.ndarray:
    """Pointwise z-blend of the bottom and top slice formulas."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    top = [o for o in spec.optima if o.persists_at_top]
    if not top:
        raise NoPersistentOptimum("no optimum persists to the top slice")
    v0, _ = slice_values(pts[:, :2], spec.optima)
    v1, _ = slice_values(pts[:, :2], top)
    z0, z1 = spec.box.min[2], spec.box.max[2]
    t = (pts[:, 2] - z0) / (z1 - z0)
    return (1.0 - t) * v0 + t * v1


def nearest_pairs(optima) -> list[tuple[Optimum, Optimum]]:
    """Each optimum paired with its l1-nearest neighbour (deduplicated)."""
    pairs = []
    for o in optima:
        others = [q for q in optima if q is not o]
        if not others:
            continue
        d = min(l1_distance(o.position, q.position) for q in others)
        for q in others:
            if abs(l1_distance(o.position, q.position) - d) <= TIE_TOL:
                pair = tuple(sorted((o, q), key=lambda x: -x.rank))
                if pair not in pairs:
                    pairs.append(pair)
    return pairs


def midpoint(o: Optimum, q: Optimum) -> tuple[float, float]:
    return ((o.position[0] + q.position[0]) / 2.0, (o.position[1] + q.position[1]) / 2.0)


def saddle_value(o: Optimum, q: Optimum) -> float:
    """Value where the valleys of ``o`` and ``q`` meet on the segment between them."""
    d = l1_distance(o.position, q.position)
    t = (q.base_value + q.slope * d - o.base_value) / ((o.slope + q.slope) * d)
    t = min(max(t, 0.0), 1.0)
    return o.base_value + o.slope * t * d


def basin_depth(spec: PrimitiveSpec, anchor: Optimum) -> float:
    """Height from an optimum's floor to its lowest pass on the bottom slice."""
    others = [q for q in spec.optima if q is not anchor]
    if others:
        return min(saddle_value(anchor, q) for q in others) - anchor.base_value
    lo, hi = spec.box.min, spec.box.max
    corners = [(x, y) for x in (lo[0], hi[0]) for y in (lo[1], hi[1])]
    return max(anchor.branch(c) for c in corners) - anchor.base_value


def on_grid(value: float, origin: float, step: float, tol: float = 1e-9) -> bool:
    t = (value - origin) / step
    return abs(t - round(t)) * step <= tol


def validate_primitive(spec: PrimitiveSpec, check_grid: bool = True) -> None:
    box = spec.box
    if not spec.optima:
        raise InvalidPrimitive("at least one optimum is required")
    if check_grid:
        grid_counts(box, spec.spacing)
    ranks = [o.rank for o in spec.optima]
    if len(set(ranks)) != len(ranks):
        raise InvalidPrimitive(f"optimum ranks must be distinct, got {ranks}")
    for o in spec.optima:
        if not (np.isfinite(o.slope) and o.slope > 0):
            raise InvalidPrimitive(f"slope must be > 0 at {o.position}")
        if not np.isfinite(o.base_value):
            raise InvalidPrimitive(f"non-finite base value at {o.position}")
        x, y = o.position
        if not (box.min[0] < x < box.max[0] and box.min[1] < y < box.max[1]):
            raise InvalidPrimitive(f"optimum {o.position} not strictly inside the slice rectangle")
        if check_grid and not (on_grid(x, box.min[0], spec.spacing[0]) and on_grid(y, box.min[1], spec.spacing[1])):
            raise InvalidPrimitive(f"optimum {o.position} is not a grid corner")
    for a, b in combinations(spec.optima, 2):
        if a.position == b.position:
            raise InvalidPrimitive(f"two optima share position {a.position}")
    if not any(o.persists_at_top for o in spec.optima):
        raise NoPersistentOptimum("no optimum persists to the top slice")
    if not spec.major.persists_at_top:
        raise InvalidPrimitive("the major (highest-rank) optimum must persist to the top slice")
    for o, q in nearest_pairs(spec.optima):
        m = midpoint(o, q)
        if abs(o.branch(m) - q.branch(m)) > TIE_TOL:
            raise InvalidPrimitive(
                f"valleys of {o.position} and {q.position} do not meet at their midpoint "
                f"({o.branch(m)!r} vs {q.branch(m)!r}); adjust slopes"
            )
        if check_grid and not (on_grid(m[0], box.min[0], spec.spacing[0]) and on_grid(m[1], box.min[1], spec.spacing[1])):
            raise InvalidPrimitive(f"saddle midpoint {m} is not a grid corner")


def build_primitive_field(spec: PrimitiveSpec, mesh: TetMesh | None = None) -> PLFieldPair:
    if mesh is None:
        validate_primitive(spec)
        mesh = build_fc24_mesh(spec.box, spec.spacing)
    psi2 = psi2_at(spec, mesh.vertices)
    return PLFieldPair(mesh, np.column_stack([mesh.vertices[:, 2], psi2]))
