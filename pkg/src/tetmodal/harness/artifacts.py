"""Problem artifacts: a directory with mesh tables, vertex values and metadata.

The bundle is self-describing: ``metadata.json`` embeds the canonical spec
text together with the spacing actually used, so a loader rebuilds the exact
same problem without parsing the mesh tables back in. All numbers are written
with 17 significant digits and files are replaced atomically.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..mesh import KIND_NAMES, fmt
from ..nesting import Problem, compose_problem
from .specfile import ProblemSpecFile, parse_spec, serialize_spec

FORMAT = "tetmodal-artifact"
VERTICES = "mesh_vertices.csv"
TETS = "mesh_tets.csv"
VALUES = "values.csv"
METADATA = "metadata.json"


class ArtifactError(RuntimeError):
    pass


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def build_problem(spec: ProblemSpecFile, spacing=None) -> Problem:
    return compose_problem(spec.root, spec.transform, spacing)


def _tables(problem: Problem) -> dict[str, str]:
    mesh = problem.mesh
    verts = csv_text(
        ["index", "x", "y", "z", "kind"],
        ([i, fmt(p[0]), fmt(p[1]), fmt(p[2]), KIND_NAMES[k]] for i, (p, k) in enumerate(zip(mesh.vertices, mesh.vertex_kind))),
    )
    tets = csv_text(["tet", "a", "b", "c", "d"], ([i, *t] for i, t in enumerate(mesh.tets.tolist())))
    vals = csv_text(
        ["index", "psi1", "psi2", "f1", "f2"],
        ([i, *map(fmt, (*p, *f))] for i, (p, f) in enumerate(zip(problem.psi.values, problem.objectives.values))),
    )
    return {VERTICES: verts, TETS: tets, VALUES: vals}


def write_artifact(spec: ProblemSpecFile, out_dir, spacing_override=None) -> Problem:
    """Compose the problem described by ``spec`` and write its bundle to ``out_dir``."""
    if spacing_override is not None:
        spec = spec.with_spacing(spacing_override)
    problem = build_problem(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = _tables(problem)
    meta = {
        "format": FORMAT,
        "schema_version": spec.schema_version,
        "spec": serialize_spec(spec),
        "spacing": [float(s) for s in problem.mesh.spacing],
        "n_vertices": problem.mesh.n_vertices,
        "n_tets": problem.mesh.n_tets,
        "sha256": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(tables.items())},
    }
    for name, text in tables.items():
        atomic_write(out / name, text)
    atomic_write(out / METADATA, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return problem


def read_metadata(path) -> dict:
    meta_path = Path(path) / METADATA
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ArtifactError(f"{meta_path}: no artifact metadata found") from None
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{meta_path}: {exc}") from None
    if meta.get("format") != FORMAT:
        raise ArtifactError(f"{meta_path}: not a {FORMAT} bundle")
    return meta


def load_artifact(path) -> tuple[ProblemSpecFile, Problem]:
    """Rebuild the problem stored in a bundle and check it against the stored values."""
    meta = read_metadata(path)
    spec = parse_spec(meta["spec"], str(Path(path) / METADATA))
    problem = build_problem(spec, meta["spacing"])
    if problem.mesh.n_vertices != meta["n_vertices"]:
        raise ArtifactError(f"{path}: rebuilt mesh has {problem.mesh.n_vertices} vertices, bundle says {meta['n_vertices']}")
    values_path = Path(path) / VALUES
    if values_path.exists():
        digest = hashlib.sha256(values_path.read_bytes()).hexdigest()
        if digest != meta["sha256"][VALUES]:
            raise ArtifactError(f"{values_path}: contents do not match the metadata checksum")
    return spec, problem


def read_values(path) -> np.ndarray:
    """The (n, 4) table of psi1, psi2, f1, f2 stored in a bundle."""
    data = np.loadtxt(Path(path) / VALUES, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1:]
