"""Seeded random descent, a baseline that exhibits mode-dependent outcomes.

Each iteration samples a fixed number of candidate points uniformly in a ball
around the current point, keeps the in-domain ones that weakly dominate it
and jumps to one of those picked uniformly at random. Failed iterations
shrink the ball; the run stops after ``patience`` consecutive failures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OutOfDomain
from ..mesh import DOMAIN_TOL
from ..modes import ModeId, analysis


@dataclass(frozen=True)
class SolverConfig:
    n_candidates: int = 16
    radius: float = 0.5
    shrink: float = 0.5
    min_radius: float = 1e-6
    patience: int = 12
    max_steps: int = 500

    def __post_init__(self):
        if self.n_candidates < 1 or self.patience < 1 or self.max_steps < 0:
            raise ValueError("n_candidates and patience must be >= 1, max_steps >= 0")
        if not (self.radius > 0 and 0 < self.shrink < 1 and self.min_radius >= 0):
            raise ValueError("radius must be > 0 and shrink in (0, 1)")


@dataclass(frozen=True, eq=False)
class Trajectory:
    points: np.ndarray  # (k, 3)
    objectives: np.ndarray  # (k, 2)
    terminal_mode: ModeId
    seed: int

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.terminal_mode == other.terminal_mode
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.objectives, other.objectives)
        )

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.objectives, axis=0) <= 0))


def _ball(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


def terminal_mode(problem, x) -> ModeId:
    """Mode of the local Pareto vertex nearest to ``x``."""
    an = analysis(problem)
    lp = np.flatnonzero(an.local_pareto)
    d = np.linalg.norm(problem.mesh.vertices[lp] - np.asarray(x, dtype=float), axis=1)
    v = lp[np.argmin(d)]
    return an.modes[an.component[v]]


def descent_solver(problem, start, seed: int, config: SolverConfig = SolverConfig()) -> Trajectory:
    box = problem.mesh.box
    x = np.asarray(start, dtype=float)
    if x.shape != (3,) or not box.contains(x):
        raise OutOfDomain(f"start {tuple(x)} is outside the domain {box.min}..{box.max}")
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(box.min), np.asarray(box.max)
    fx = problem.evaluate(x[None, :])[0]
    points, values = [x], [fx]
    radius, misses = config.radius, 0
    while len(points) <= config.max_steps and misses < config.patience and radius >= config.min_radius:
        cand = x + _ball(rng, config.n_candidates, radius)
        cand = cand[np.all((cand >= lo - DOMAIN_TOL) & (cand <= hi + DOMAIN_TOL), axis=1)]
        cand = np.clip(cand, lo, hi)
        if len(cand):
            fc = problem.evaluate(cand)
            better = np.flatnonzero(np.all(fc <= fx, axis=1) & np.any(fc < fx, axis=1))
        else:
            better = []
        if len(better) == 0:
            misses += 1
            radius *= config.shrink
            continue
        pick = better[rng.integers(len(better))]
        x, fx = cand[pick], fc[pick]
        points.append(x)
        values.append(fx)
        misses = 0
    return Trajectory(np.array(points), np.array(values), terminal_mode(problem, x), int(seed))
