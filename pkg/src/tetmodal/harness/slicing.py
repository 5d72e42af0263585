"""Constant-z cross sections of a problem, for external contour plotting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OutOfDomain
from ..mesh import DOMAIN_TOL


@dataclass(frozen=True, eq=False)
class Slice:
    z: float
    points: np.ndarray  # (m, 3)
    source: np.ndarray  # "vertex" or "edge" per row
    psi: np.ndarray  # (m, 2)
    f: np.ndarray  # (m, 2)


def slice_at(problem, z: float) -> Slice:
    """Mesh vertices lying on the plane plus every edge crossing it.

    Values on crossing edges are linear in the edge endpoints, which is
    exactly what the PL map takes there; objectives apply the transform
    chain to those interpolated base values.
    """
    mesh = problem.mesh
    z0, z1 = mesh.box.min[2], mesh.box.max[2]
    z = float(z)
    if not (z0 - DOMAIN_TOL <= z <= z1 + DOMAIN_TOL):
        raise OutOfDomain(f"z = {z!r} is outside [{z0!r}, {z1!r}]")
    verts, psi = mesh.vertices, problem.psi.values
    on = np.flatnonzero(np.abs(verts[:, 2] - z) <= DOMAIN_TOL)
    a, b = mesh.edges[:, 0], mesh.edges[:, 1]
    da, db = verts[a, 2] - z, verts[b, 2] - z
    cross = np.flatnonzero(((da < -DOMAIN_TOL) & (db > DOMAIN_TOL)) | ((da > DOMAIN_TOL) & (db < -DOMAIN_TOL)))
    a, b = a[cross], b[cross]
    t = ((z - verts[a, 2]) / (verts[b, 2] - verts[a, 2]))[:, None]
    pts = np.vstack([verts[on], (1 - t) * verts[a] + t * verts[b]])
    pts[:, 2] = np.where(np.arange(len(pts)) < len(on), pts[:, 2], z)
    vals = np.vstack([psi[on], (1 - t) * psi[a] + t * psi[b]])
    source = np.array(["vertex"] * len(on) + ["edge"] * len(cross), dtype=object)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts, vals, source = pts[order], vals[order], source[order]
    return Slice(z, pts, source, vals, problem.transform.apply_values(vals) if len(vals) else vals.copy())
