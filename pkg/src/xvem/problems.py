"""Manufactured solutions: a smooth part plus the singular field of the domain."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .enrichment import ENRICHMENTS


@dataclass(frozen=True)
class ManufacturedSolution:
    """u = sin(pi x) sin(pi y) + sum(singular fields); -Lap u = f.

    All callables take ``(points, ref=None)`` as the rest of the package does.
    """

    space: object = None

    def value(self, points, ref=None):
        p = np.atleast_2d(points)
        u = np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
        if self.space is not None:
            u = u + self.space.values(p, ref).sum(axis=0)
        return u

    def gradient(self, points, ref=None):
        p = np.atleast_2d(points)
        sx, sy = np.sin(np.pi * p[:, 0]), np.sin(np.pi * p[:, 1])
        cx, cy = np.cos(np.pi * p[:, 0]), np.cos(np.pi * p[:, 1])
        g = np.pi * np.column_stack([cx * sy, sx * cy])
        if self.space is not None:
            g = g + self.space.gradients(p, ref).sum(axis=0)
        return g

    def source(self, points, ref=None):
        p = np.atleast_2d(points)
        f = 2 * np.pi**2 * np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
        if self.space is not None:
            f = f - self.space.laplacians(p, ref).sum(axis=0)
        return f


def manufactured(domain):
    """Benchmark solution of ``domain`` (fracture, lshape-tr or lshape-br)."""
    if domain not in ENRICHMENTS:
        raise ValueError(f"unknown domain {domain!r}")
    return ManufacturedSolution(ENRICHMENTS[domain]())


@dataclass(frozen=True)
class PolynomialSolution:
    """u = sum c_ab x^a y^b with ``coeffs`` keyed by exponent pairs."""

    coeffs: tuple  # ((a, b, c), ...)

    @classmethod
    def random(cls, degree, rng):
        return cls(tuple((d - j, j, float(rng.standard_normal())) for d in range(degree + 1)
                         for j in range(d + 1)))

    def value(self, points, ref=None):
        p = np.atleast_2d(points)
        return sum(c * p[:, 0] ** a * p[:, 1] ** b for a, b, c in self.coeffs)

    def gradient(self, points, ref=None):
        p = np.atleast_2d(points)
        gx = sum(c * a * p[:, 0] ** max(a - 1, 0) * p[:, 1] ** b for a, b, c in self.coeffs if a)
        gy = sum(c * b * p[:, 0] ** a * p[:, 1] ** max(b - 1, 0) for a, b, c in self.coeffs if b)
        z = np.zeros(len(p))
        return np.column_stack([z + gx, z + gy])

    def source(self, points, ref=None):
        p = np.atleast_2d(points)
        out = np.zeros(len(p))
        for a, b, c in self.coeffs:
            if a >= 2:
                out -= c * a * (a - 1) * p[:, 0] ** (a - 2) * p[:, 1] ** b
            if b >= 2:
                out -= c * b * (b - 1) * p[:, 0] ** a * p[:, 1] ** (b - 2)
        return out
