"""Coordinate boxes and the sample points geometry checks run on."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_PER_AXIS = 11
MAX_GRID_POINTS = 20000
RANDOM_SAMPLES = 32


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ChartDomain:
    n: int
    box: tuple[tuple[float, float], ...]

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", box)
        if len(box) != self.n:
            raise GeometryError(f"box has {len(box)} intervals for n={self.n}")
        for lo, hi in box:
            if not lo < hi:
                raise GeometryError(f"empty interval [{lo}, {hi}]")

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.box])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.box])

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        span = self.upper - self.lower
        return np.all((x >= self.lower - tol * span) & (x <= self.upper + tol * span), axis=-1)

    def grid(self, per_axis: int | None = None) -> np.ndarray:
        """Regular grid including the faces, as an (m, n) array.

        ``per_axis`` defaults to 11, reduced in high dimension so the grid
        stays below MAX_GRID_POINTS points.
        """
        if per_axis is None:
            per_axis = GRID_PER_AXIS
            while per_axis > 2 and per_axis**self.n > MAX_GRID_POINTS:
                per_axis -= 1
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in self.box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def random_points(self, count: int, seed: int = 0) -> np.ndarray:
        """Uniform points in the open box (deterministic for a given seed)."""
        rng = np.random.default_rng(seed)
        u = rng.uniform(0.0, 1.0, size=(count, self.n))
        u = np.clip(u, 1e-9, 1 - 1e-9)
        return self.lower + u * (self.upper - self.lower)

    def sample_points(self, per_axis: int | None = None, count: int = RANDOM_SAMPLES,
                      seed: int = 0) -> np.ndarray:
        return np.concatenate([self.grid(per_axis), self.random_points(count, seed)])

    def to_json(self) -> list[list[float]]:
        return [[lo, hi] for lo, hi in self.box]
