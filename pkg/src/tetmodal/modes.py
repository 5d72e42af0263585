"""Admissible sets, local Pareto vertices, mode sets and the mode hierarchy.

Everything is discretised on the mesh vertex graph under minimisation. A
step ``v -> w`` along a mesh edge is admissible when ``f(w) <= f(v)``
componentwise (equality allowed unless ``strict`` is requested). A vertex is
local Pareto when no neighbour strictly dominates it. Modes are the
connected components of the local Pareto vertices; the mode set of a point
is the set of modes its admissible closure reaches.

Reachability is computed once per objective field by sweeping vertices in
increasing ``(f1 + f2, f1, f2)`` order: every admissible step goes to a
strictly smaller key except between equal-valued vertices, which are merged
into plateaus first.
"""

from __future__ import annotations

import weakref
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .mesh import PLFieldPair


@dataclass(frozen=True, order=True)
class ModeId:
    index: int
    representative: int


@dataclass(frozen=True)
class ModeSet:
    query: tuple[float, float, float]
    modes: frozenset

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self):
        return iter(sorted(self.modes))


def _objectives(problem) -> PLFieldPair:
    return problem.objectives if hasattr(problem, "objectives") else problem


def _csr(n: int, src: np.ndarray, dst: np.ndarray):
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    return np.searchsorted(src, np.arange(n + 1)), dst


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class ModeAnalysis:
    """Per-field precomputation shared by all mode queries."""

    def __init__(self, objectives: PLFieldPair, strict: bool = False):
        self.field = objectives
        self.strict = strict
        mesh = objectives.mesh
        f = objectives.values
        n = mesh.n_vertices
        a, b = mesh.edges[:, 0], mesh.edges[:, 1]
        fa, fb = f[a], f[b]
        b_le_a = np.all(fb <= fa, axis=1)
        a_le_b = np.all(fa <= fb, axis=1)
        equal = b_le_a & a_le_b

        lp = np.ones(n, dtype=bool)
        lp[a[b_le_a & ~equal]] = False
        lp[b[a_le_b & ~equal]] = False
        self.local_pareto = lp

        fwd = b_le_a & ~equal if strict else b_le_a
        bwd = a_le_b & ~equal if strict else a_le_b
        src = np.concatenate([a[fwd], b[bwd]])
        dst = np.concatenate([b[fwd], a[bwd]])
        self.succ_ptr, self.succ = _csr(n, src, dst)

        both = lp[a] & lp[b]
        graph = coo_matrix((np.ones(both.sum()), (a[both], b[both])), shape=(n, n))
        _, labels = connected_components(graph, directed=False)
        lp_idx = np.flatnonzero(lp)
        # number components by their lowest vertex
        reps = {}
        for v in lp_idx:
            reps.setdefault(labels[v], v)
        ordered = sorted(reps.items(), key=lambda kv: kv[1])
        remap = {lab: i for i, (lab, _) in enumerate(ordered)}
        self.modes = [ModeId(i, int(rep)) for i, (_, rep) in enumerate(ordered)]
        self.component = np.full(n, -1, dtype=np.int64)
        self.component[lp_idx] = [remap[labels[v]] for v in lp_idx]

        if strict:
            plateau = np.arange(n)
        else:
            eq_graph = coo_matrix((np.ones(equal.sum()), (a[equal], b[equal])), shape=(n, n))
            _, plateau = connected_components(eq_graph, directed=False)
        self.reach = self._sweep(f, plateau)

    def _sweep(self, f: np.ndarray, plateau: np.ndarray) -> list[int]:
        n = len(f)
        order = np.lexsort((f[:, 1], f[:, 0], f[:, 0] + f[:, 1]))
        members: dict[int, list[int]] = {}
        for v in order.tolist():
            members.setdefault(int(plateau[v]), []).append(v)
        ptr, succ, comp = self.succ_ptr.tolist(), self.succ.tolist(), self.component.tolist()
        reach = [0] * n
        done = [False] * n
        for v in order.tolist():
            if done[v]:
                continue
            group = members[int(plateau[v])]
            mask = 0
            for u in group:
                if comp[u] >= 0:
                    mask |= 1 << comp[u]
                for k in range(ptr[u], ptr[u + 1]):
                    w = succ[k]
                    if done[w]:
                        mask |= reach[w]
            for u in group:
                reach[u] = mask
                done[u] = True
        return reach

    def seeds(self, x) -> np.ndarray:
        bc = self.field.mesh.locate(x)
        return self.field.mesh.tets[bc.tet][bc.weights > 0]

    def mode_ids(self, mask: int) -> frozenset:
        return frozenset(self.modes[i] for i in _bits(mask))

    def mask_at(self, x) -> int:
        mask = 0
        for v in self.seeds(x):
            mask |= self.reach[v]
        return mask

    def closure(self, seeds) -> set[int]:
        seen = set(int(s) for s in seeds)
        queue = deque(seen)
        ptr, succ = self.succ_ptr, self.succ
        while queue:
            v = queue.popleft()
            for w in succ[ptr[v]:ptr[v + 1]].tolist():
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen


_CACHE: "weakref.WeakKeyDictionary[PLFieldPair, dict]" = weakref.WeakKeyDictionary()


def analysis(problem, strict: bool = False) -> ModeAnalysis:
    obj = _objectives(problem)
    per_field = _CACHE.setdefault(obj, {})
    if strict not in per_field:
        per_field[strict] = ModeAnalysis(obj, strict)
    return per_field[strict]


def local_pareto_vertices(problem) -> set[int]:
    return set(np.flatnonzero(analysis(problem).local_pareto).tolist())


def admissible_vertices(problem, x, strict: bool = False) -> set[int]:
    an = analysis(problem, strict)
    return an.closure(an.seeds(x))


def mode_set(problem, x, strict: bool = False) -> ModeSet:
    an = analysis(problem, strict)
    return ModeSet(tuple(float(c) for c in x), an.mode_ids(an.mask_at(x)))


def vertex_mode_sets(problem, strict: bool = False) -> list[frozenset]:
    """Mode set of every vertex, each vertex seeding its own closure."""
    an = analysis(problem, strict)
    return [an.mode_ids(m) for m in an.reach]


def dual_volumes(mesh) -> np.ndarray:
    """Quarter of the incident tet volume at each vertex; sums to the box volume."""
    return np.bincount(mesh.tets.ravel(), weights=np.repeat(mesh.tet_volumes, 4), minlength=mesh.n_vertices) / 4.0


@dataclass(frozen=True)
class ModeHierarchy:
    modes: tuple
    signatures: tuple  # tuple of frozenset[ModeId]
    volumes: np.ndarray
    vertex_signature: np.ndarray
    edges: tuple  # covering pairs (sub, sup) of strict inclusion

    def includes(self, sub: int, sup: int) -> bool:
        return self.signatures[sub] < self.signatures[sup]

    def signature_of(self, modes) -> int:
        return self.signatures.index(frozenset(modes))

    @property
    def depth(self) -> int:
        """Number of signatures on the longest strict inclusion chain."""
        order = sorted(range(len(self.signatures)), key=lambda i: len(self.signatures[i]))
        best = {}
        for i in order:
            best[i] = 1 + max((best[j] for j in best if self.signatures[j] < self.signatures[i]), default=0)
        return max(best.values(), default=0)


def mode_regions(problem, strict: bool = False) -> ModeHierarchy:
    an = analysis(problem, strict)
    mesh = an.field.mesh
    masks = sorted(set(an.reach), key=lambda m: (bin(m).count("1"), sorted(_bits(m))))
    sig_index = {m: i for i, m in enumerate(masks)}
    vertex_sig = np.array([sig_index[m] for m in an.reach], dtype=np.int64)
    volumes = np.bincount(vertex_sig, weights=dual_volumes(mesh), minlength=len(masks))
    strictly_below = {
        (i, j) for i, mi in enumerate(masks) for j, mj in enumerate(masks) if mi != mj and mi & mj == mi
    }
    covering = sorted(
        (i, j) for i, j in strictly_below
        if not any((i, k) in strictly_below and (k, j) in strictly_below for k in range(len(masks)))
    )
    return ModeHierarchy(
        modes=tuple(an.modes),
        signatures=tuple(an.mode_ids(m) for m in masks),
        volumes=volumes,
        vertex_signature=vertex_sig,
        edges=tuple(covering),
    )
