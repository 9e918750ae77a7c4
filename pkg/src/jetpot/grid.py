"""Lattice grids on balls and boxes with explicit boundary and exclusion sets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError


def sphere_points(n: int, radius: float, h: float, max_points: int = 20000) -> np.ndarray:
    """Points on the sphere of given radius with spacing about ``h``."""
    if n == 1:
        return np.array([[-radius], [radius]])
    if n == 2:
        m = max(8, int(np.ceil(2 * np.pi * radius / h)))
        ang = 2 * np.pi * np.arange(m) / m
        return radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    area = 2 * np.pi ** (n / 2) / _gamma(n / 2) * radius ** (n - 1)
    m = int(min(max_points, max(2 * n, np.ceil(area / h ** (n - 1)))))
    if n == 3:
        return radius * fibonacci_sphere(m)
    rng = np.random.default_rng(0)
    g = rng.standard_normal((m, n))
    return radius * g / np.linalg.norm(g, axis=1, keepdims=True)


def _gamma(x):
    from math import gamma

    return gamma(x)


def fibonacci_sphere(m: int) -> np.ndarray:
    """``m`` nearly uniform unit vectors in R^3."""
    i = np.arange(m) + 0.5
    z = 1 - 2 * i / m
    rho = np.sqrt(1 - z * z)
    phi = np.pi * (1 + 5 ** 0.5) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


@dataclass
class GridDomain:
    """Interior lattice points, boundary points and excluded points.

    Interior points keep distance at least ``h`` from the boundary. Points
    closer than ``exclude_radius`` to ``center`` are moved to ``excluded``.
    For boxes with ``parabolic=True`` the top face ``t = T`` (last
    coordinate maximal) is left out of :attr:`active_boundary`.
    """

    kind: str
    n: int
    h: float
    center: np.ndarray
    radius: float | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    boundary: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    excluded: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    parabolic: bool = False

    @classmethod
    def ball(cls, center, radius: float, h: float, exclude_radius: float = 0.0) -> "GridDomain":
        center = np.atleast_1d(np.asarray(center, dtype=float))
        n = center.size
        if radius <= 0 or h <= 0:
            raise PreconditionError("radius and spacing must be positive")
        k = int(np.floor(radius / h))
        axis = h * np.arange(-k, k + 1)
        mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
        d = np.linalg.norm(mesh, axis=1)
        inside = d <= radius - h + 1e-12 * radius
        pts = mesh[inside] + center
        d = d[inside]
        excl = d < exclude_radius
        bd = sphere_points(n, radius, h) + center
        return cls("ball", n, h, center, radius=radius, points=pts[~excl], boundary=bd,
                   excluded=pts[excl])

    @classmethod
    def box(cls, lo, hi, h: float, parabolic: bool = False) -> "GridDomain":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        n = lo.size
        if np.any(hi <= lo) or h <= 0:
            raise PreconditionError("box must have hi > lo and positive spacing")
        axes = [np.linspace(a, b, max(3, int(round((b - a) / h)) + 1)) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        on_face = np.any(np.isclose(mesh, lo) | np.isclose(mesh, hi), axis=1)
        return cls("box", n, h, 0.5 * (lo + hi), lo=lo, hi=hi, points=mesh[~on_face],
                   boundary=mesh[on_face], excluded=np.zeros((0, n)), parabolic=parabolic)

    @property
    def active_boundary(self) -> np.ndarray:
        """Boundary points used by comparison: all of them, or the parabolic part."""
        if self.parabolic and self.kind == "box":
            keep = self.boundary[:, -1] < self.hi[-1] - 1e-12 * (1 + abs(self.hi[-1]))
            return self.boundary[keep]
        return self.boundary

    @property
    def bounding_radius(self) -> float:
        """Largest distance from the center to a point of the closed domain."""
        if self.kind == "ball":
            return float(self.radius)
        return float(0.5 * np.linalg.norm(self.hi - self.lo))

    def describe(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "h": self.h, "n_points": len(self.points),
               "n_boundary": len(self.boundary), "n_excluded": len(self.excluded)}
        if self.kind == "ball":
            out.update(center=self.center.tolist(), radius=self.radius)
        else:
            out.update(lo=self.lo.tolist(), hi=self.hi.tolist(), parabolic=self.parabolic)
        return out
