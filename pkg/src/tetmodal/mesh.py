"""Face-centered 24-fold tetrahedral meshes of boxes and PL evaluation on them.

Every grid cube gets a vertex at each of its 8 corners, 6 face centers and
its body center. Each face is fanned into 4 triangles about its face center
and every triangle is coned to the body center, giving 24 tetrahedra per
cube. Neighbouring cubes share their common face center and face triangles,
so the result is conforming.

Vertices are addressed internally on the half-lattice: a vertex at
``box.min + h * spacing / 2`` has integer half-coordinates ``h``. Corners
have all-even half-coordinates, face centers exactly one even one, body
centers none.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateBox, NonDivisibleExtent, OutOfDomain, ZeroSpacing

DOMAIN_TOL = 1e-9
WEIGHT_TOL = 1e-9
SNAP_TOL = 1e-12

CORNER, FACE_CENTER, BODY_CENTER = 0, 1, 2
KIND_NAMES = ("corner", "face-center", "body-center")

# (a, b) pairs of tet-local vertex slots forming the 6 tet edges
_TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# cyclic walk around a square face, in the two in-face axes
_FACE_LOOP = ((0, 0), (1, 0), (1, 1), (0, 1))


@dataclass(frozen=True)
class Box3:
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min)
        hi = tuple(float(v) for v in self.max)
        if len(lo) != 3 or len(hi) != 3:
            raise DegenerateBox("box corners must be 3-vectors")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)
        if not all(np.isfinite(lo + hi)):
            raise DegenerateBox(f"non-finite box {lo} .. {hi}")
        if any(a >= b for a, b in zip(lo, hi)):
            raise DegenerateBox(f"box min {lo} must be < max {hi} componentwise")

    @property
    def extent(self) -> np.ndarray:
        return np.subtract(self.max, self.min)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, p, tol: float = DOMAIN_TOL) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= np.subtract(self.min, tol)) and np.all(p <= np.add(self.max, tol)))


@dataclass(frozen=True)
class BaryCoords:
    tet: int
    weights: np.ndarray


def grid_counts(box: Box3, spacing) -> tuple[int, int, int]:
    """Number of cubes per axis, enforcing that spacing divides the extent."""
    spacing = np.asarray(spacing, dtype=float)
    if spacing.shape != (3,):
        raise ZeroSpacing(f"spacing must be a 3-vector, got {spacing!r}")
    if np.any(~np.isfinite(spacing)) or np.any(spacing <= 0):
        raise ZeroSpacing(f"spacing must be positive, got {tuple(spacing)}")
    ratio = box.extent / spacing
    counts = np.rint(ratio)
    if np.any(np.abs(ratio - counts) * spacing > DOMAIN_TOL) or np.any(counts < 1):
        raise NonDivisibleExtent(
            f"extent {tuple(box.extent)} is not an integer multiple of spacing {tuple(spacing)}"
        )
    return tuple(int(c) for c in counts)


class TetMesh:
    """Immutable FC24 tetrahedral mesh of an axis-aligned box."""

    def __init__(self, box: Box3, spacing):
        self.box = box
        self.spacing = np.array(spacing, dtype=float)
        self.shape = grid_counts(box, self.spacing)
        nx, ny, nz = self.shape

        half = []
        kinds = []
        # corners, then x/y/z-normal face centers, then body centers; each lexicographic
        blocks = [
            ((nx + 1, ny + 1, nz + 1), (0, 0, 0), CORNER),
            ((nx + 1, ny, nz), (0, 1, 1), FACE_CENTER),
            ((nx, ny + 1, nz), (1, 0, 1), FACE_CENTER),
            ((nx, ny, nz + 1), (1, 1, 0), FACE_CENTER),
            ((nx, ny, nz), (1, 1, 1), BODY_CENTER),
        ]
        for dims, odd, kind in blocks:
            idx = np.indices(dims).reshape(3, -1).T
            half.append(2 * idx + np.array(odd))
            kinds.append(np.full(len(idx), kind, dtype=np.int8))
        self.half_coords = np.concatenate(half).astype(np.int64)
        self.vertex_kind = np.concatenate(kinds)
        self.vertices = np.asarray(box.min) + self.half_coords * (self.spacing / 2.0)

        self._lookup = np.full((2 * nx + 1, 2 * ny + 1, 2 * nz + 1), -1, dtype=np.int64)
        hc = self.half_coords
        self._lookup[hc[:, 0], hc[:, 1], hc[:, 2]] = np.arange(len(hc))

        self.tets = self._build_tets()
        self.tet_volumes = self._signed_volumes(self.tets)
        self.edges = self._build_edges()
        self._build_csr()

        d = self.vertices[self.tets[:, 1:]] - self.vertices[self.tets[:, :1]]
        self._inv = np.linalg.inv(np.transpose(d, (0, 2, 1)))

        for arr in (self.half_coords, self.vertex_kind, self.vertices, self._lookup, self.tets,
                    self.tet_volumes, self.edges, self.adj_indptr, self.adj_indices, self._inv):
            arr.setflags(write=False)

    # construction -------------------------------------------------------

    def _build_tets(self) -> np.ndarray:
        nx, ny, nz = self.shape
        cubes = np.indices((nx, ny, nz)).reshape(3, -1).T
        body = 2 * cubes + 1
        local = []
        for axis in range(3):
            b, c = [a for a in range(3) if a != axis]
            for side in (0, 1):
                fc = body.copy()
                fc[:, axis] = 2 * (cubes[:, axis] + side)
                ring = []
                for db, dc in _FACE_LOOP:
                    corner = fc.copy()
                    corner[:, b] = 2 * (cubes[:, b] + db)
                    corner[:, c] = 2 * (cubes[:, c] + dc)
                    ring.append(corner)
                for e in range(4):
                    local.append((body, fc, ring[e], ring[(e + 1) % 4]))
        tets = np.empty((len(cubes), 24, 4), dtype=np.int64)
        for t, quad in enumerate(local):
            for slot, hcoords in enumerate(quad):
                tets[:, t, slot] = self._lookup[hcoords[:, 0], hcoords[:, 1], hcoords[:, 2]]
        tets = tets.reshape(-1, 4)
        flip = self._signed_volumes(tets) < 0
        tets[flip, 2], tets[flip, 3] = tets[flip, 3].copy(), tets[flip, 2].copy()
        return tets

    def _signed_volumes(self, tets: np.ndarray) -> np.ndarray:
        v = self.vertices[tets]
        return np.linalg.det(v[:, 1:] - v[:, :1]) / 6.0

    def _build_edges(self) -> np.ndarray:
        pairs = np.concatenate([self.tets[:, [a, b]] for a, b in _TET_EDGES])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0)

    def _build_csr(self):
        n = len(self.vertices)
        both = np.concatenate([self.edges, self.edges[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        self.adj_indptr = np.searchsorted(both[:, 0], np.arange(n + 1)).astype(np.int64)
        self.adj_indices = both[:, 1].copy()

    # queries -------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def cube_tets(self, cell) -> np.ndarray:
        """Indices of the 24 tetrahedra of grid cell ``(i, j, k)``."""
        i, j, k = cell
        nx, ny, nz = self.shape
        if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
            raise IndexError(f"cell {cell} outside grid {self.shape}")
        c = (i * ny + j) * nz + k
        return np.arange(24 * c, 24 * c + 24)

    def neighbors(self, v: int) -> np.ndarray:
        return self.adj_indices[self.adj_indptr[v]:self.adj_indptr[v + 1]]

    def vertex_at(self, points, tol: float = DOMAIN_TOL) -> np.ndarray:
        """Vertex index at each point, or -1 where no vertex lies within ``tol``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = (pts - np.asarray(self.box.min)) / (self.spacing / 2.0)
        h = np.rint(t)
        ok = np.all(np.abs(t - h) * (self.spacing / 2.0) <= tol, axis=1)
        h = h.astype(np.int64)
        dims = np.array(self._lookup.shape)
        ok &= np.all((h >= 0) & (h < dims), axis=1)
        out = np.full(len(pts), -1, dtype=np.int64)
        hh = h[ok]
        out[ok] = self._lookup[hh[:, 0], hh[:, 1], hh[:, 2]]
        return out

    def barycentric(self, tets: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Raw barycentric weights of ``points[i]`` w.r.t. tet ``tets[i]`` (broadcast)."""
        v0 = self.vertices[self.tets[tets, 0]]
        lam = np.einsum("...ij,...j->...i", self._inv[tets], points - v0)
        return np.concatenate([1.0 - lam.sum(axis=-1, keepdims=True), lam], axis=-1)

    def locate_many(self, points, check: bool = True, chunk: int = 2048):
        """Vectorised point location.

        Returns ``(tet, weights)``. Points outside the box raise
        :class:`OutOfDomain` when ``check`` is true and get ``tet == -1``
        otherwise. Among several containing tets the lowest index wins.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != 3:
            raise ValueError(f"points must have shape (m, 3), got {pts.shape}")
        lo, hi = np.asarray(self.box.min), np.asarray(self.box.max)
        inside = np.all((pts >= lo - DOMAIN_TOL) & (pts <= hi + DOMAIN_TOL), axis=1)
        if check and not inside.all():
            bad = pts[~inside][0]
            raise OutOfDomain(f"point {tuple(bad)} outside box {self.box.min} .. {self.box.max}")
        tet_out = np.full(len(pts), -1, dtype=np.int64)
        w_out = np.full((len(pts), 4), np.nan)
        idx = np.flatnonzero(inside)
        for start in range(0, len(idx), chunk):
            sel = idx[start:start + chunk]
            t, w = self._locate_inside(np.clip(pts[sel], lo, hi))
            tet_out[sel] = t
            w_out[sel] = w
        return tet_out, w_out

    def _locate_inside(self, pts: np.ndarray):
        n = np.array(self.shape)
        t = (pts - np.asarray(self.box.min)) / self.spacing
        eps = DOMAIN_TOL / self.spacing
        lo = np.clip(np.floor(t - eps), 0, n - 1).astype(np.int64)
        hi = np.clip(np.floor(t + eps), 0, n - 1).astype(np.int64)
        cand = []
        for ci in (lo[:, 0], hi[:, 0]):
            for cj in (lo[:, 1], hi[:, 1]):
                for ck in (lo[:, 2], hi[:, 2]):
                    cube = (ci * n[1] + cj) * n[2] + ck
                    cand.append(24 * cube[:, None] + np.arange(24))
        cand = np.concatenate(cand, axis=1)
        w = self.barycentric(cand, pts[:, None, :])
        wmin = w.min(axis=-1)
        valid = wmin >= -WEIGHT_TOL
        # tets containing the point up to rounding beat those only within the loose tolerance
        big = np.iinfo(np.int64).max // 2
        key = np.where(wmin >= -SNAP_TOL, cand, np.where(valid, big + cand, np.iinfo(np.int64).max))
        pick = np.argmin(key, axis=1)
        rows = np.arange(len(pts))
        if not valid[rows, pick].all():
            raise OutOfDomain("point location failed inside the box")
        return cand[rows, pick], _clean_weights(w[rows, pick])

    def locate(self, p) -> BaryCoords:
        tets, w = self.locate_many(np.asarray(p, dtype=float)[None, :])
        return BaryCoords(int(tets[0]), w[0])


def _clean_weights(w: np.ndarray) -> np.ndarray:
    w = np.where(np.abs(w) < SNAP_TOL, 0.0, w)
    w = np.where(np.abs(w - 1.0) < SNAP_TOL, 1.0, w)
    w = np.clip(w, 0.0, None)
    return w / w.sum(axis=-1, keepdims=True)


def build_fc24_mesh(box: Box3, spacing=(1.0, 1.0, 1.0)) -> TetMesh:
    return TetMesh(box, spacing)


def locate(mesh: TetMesh, p) -> BaryCoords:
    return mesh.locate(p)


def vertex_adjacency(mesh: TetMesh) -> dict[int, set[int]]:
    return {v: set(mesh.neighbors(v).tolist()) for v in range(mesh.n_vertices)}


@dataclass(frozen=True, eq=False)
class PLFieldPair:
    """Per-vertex pair of values on a mesh, realised as a PL map by barycentric interpolation."""

    mesh: TetMesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.mesh.n_vertices, 2):
            raise ValueError(f"values must have shape ({self.mesh.n_vertices}, 2), got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def evaluate(self, points) -> np.ndarray:
        tets, w = self.mesh.locate_many(points)
        return np.einsum("mk,mkj->mj", w, self.values[self.mesh.tets[tets]])

    def with_values(self, values) -> "PLFieldPair":
        return PLFieldPair(self.mesh, values)


def interpolate(field: PLFieldPair, p) -> tuple[float, float]:
    out = field.evaluate(np.asarray(p, dtype=float)[None, :])[0]
    return float(out[0]), float(out[1])


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_mesh_csv(mesh: TetMesh, vertices_path, tets_path) -> None:
    """Dump the vertex table (index, x, y, z, kind) and the tet table."""
    with open(Path(vertices_path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "x", "y", "z", "kind"])
        for i, (p, k) in enumerate(zip(mesh.vertices, mesh.vertex_kind)):
            w.writerow([i, fmt(p[0]), fmt(p[1]), fmt(p[2]), KIND_NAMES[k]])
    with open(Path(tets_path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tet", "a", "b", "c", "d"])
        for i, t in enumerate(mesh.tets):
            w.writerow([i, *t.tolist()])
