"""Range transforms turning the base map into benchmark objectives.

The objective plane is rotated first (default -45 degrees, counterclockwise
positive), then each objective may go through a strictly increasing scalar
map. Maps are odd-symmetric extensions so they stay strictly increasing on
negative objective values as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidTransform
from .mesh import PLFieldPair

MAP_PARAMS = {
    "identity": (),
    "power": ("gamma",),
    "affine": ("a", "b"),
    "log1p": ("k",),
}


@dataclass(frozen=True)
class MonotoneMap:
    kind: str = "identity"
    gamma: float = 1.0
    a: float = 1.0
    b: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if self.kind not in MAP_PARAMS:
            raise InvalidTransform(f"unknown map kind {self.kind!r}; expected one of {sorted(MAP_PARAMS)}")
        for name in ("gamma", "a", "b", "k"):
            object.__setattr__(self, name, float(getattr(self, name)))
            if not math.isfinite(getattr(self, name)):
                raise InvalidTransform(f"{self.kind}: {name} must be finite")
        if self.kind == "power" and self.gamma <= 0:
            raise InvalidTransform("power: gamma must be > 0")
        if self.kind == "affine" and self.a <= 0:
            raise InvalidTransform("affine: a must be > 0")
        if self.kind == "log1p" and self.k <= 0:
            raise InvalidTransform("log1p: k must be > 0")

    def params(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in MAP_PARAMS[self.kind]}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x.copy()
        if self.kind == "power":
            return np.sign(x) * np.abs(x) ** self.gamma
        if self.kind == "affine":
            return self.a * x + self.b
        return np.sign(x) * np.log1p(self.k * np.abs(x))


IDENTITY = MonotoneMap()


@dataclass(frozen=True)
class TransformChain:
    rotation_angle: float = -45.0
    maps: tuple[MonotoneMap, MonotoneMap] = (IDENTITY, IDENTITY)

    def __post_init__(self):
        angle = float(self.rotation_angle)
        if not math.isfinite(angle):
            raise InvalidTransform("rotation angle must be finite")
        object.__setattr__(self, "rotation_angle", angle)
        maps = tuple(self.maps)
        if len(maps) != 2 or not all(isinstance(m, MonotoneMap) for m in maps):
            raise InvalidTransform("exactly one monotone map per objective is required")
        object.__setattr__(self, "maps", maps)

    def apply_values(self, psi_values) -> np.ndarray:
        """Rotate, then map, an (m, 2) array of base-map values."""
        f = rotate_values(psi_values, self.rotation_angle)
        return np.column_stack([self.maps[0](f[:, 0]), self.maps[1](f[:, 1])])


def rotation_cos_sin(angle: float) -> tuple[float, float]:
    # exact octant values keep (psi1 + psi2)/sqrt(2) symmetric in both objectives
    eighths = angle / 45.0
    if eighths == round(eighths):
        r = math.sqrt(0.5)
        table = [(1.0, 0.0), (r, r), (0.0, 1.0), (-r, r), (-1.0, 0.0), (-r, -r), (0.0, -1.0), (r, -r)]
        return table[int(round(eighths)) % 8]
    theta = math.radians(angle)
    return math.cos(theta), math.sin(theta)


def rotate_values(values, angle: float) -> np.ndarray:
    v = np.atleast_2d(np.asarray(values, dtype=float))
    c, s = rotation_cos_sin(angle)
    if c != 0 and abs(c) == abs(s):
        # add before scaling so equal sums stay equal after rounding
        t = s / c
        return np.column_stack([c * (v[:, 0] - t * v[:, 1]), c * (t * v[:, 0] + v[:, 1])])
    return np.column_stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]])


def rotate_objectives(psi: PLFieldPair, angle: float = -45.0) -> PLFieldPair:
    if not math.isfinite(angle):
        raise InvalidTransform("rotation angle must be finite")
    return psi.with_values(rotate_values(psi.values, angle))


def apply_monotone(f: PLFieldPair, maps) -> PLFieldPair:
    maps = tuple(maps)
    return f.with_values(np.column_stack([maps[0](f.values[:, 0]), maps[1](f.values[:, 1])]))


def apply_chain(psi: PLFieldPair, chain: TransformChain) -> PLFieldPair:
    """Vertex values of the objectives (maps baked in at vertices)."""
    return apply_monotone(rotate_objectives(psi, chain.rotation_angle), chain.maps)


def dominates(a, b) -> bool:
    """Minimisation Pareto dominance of objective vector ``a`` over ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))
