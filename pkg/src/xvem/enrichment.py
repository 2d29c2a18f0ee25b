"""Enrichment fields and the rule deciding which elements carry them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quadrature import point_polygon_distance


class CornerSingularity:
    """``r**alpha * sin(alpha * (theta - phase))`` in polar coordinates about
    ``origin``.

    The angle is taken in ``[cut, cut + 2*pi)``.  A point lying exactly on the
    cut ray is ambiguous; it is resolved with ``ref``, a point on the same
    side (typically the centroid of the owning element), given either once or
    per evaluation point.  All built-in fields are harmonic away from the
    origin.
    """

    def __init__(self, alpha, phase=0.0, cut=0.0, origin=(0.0, 0.0)):
        self.alpha = float(alpha)
        self.phase = float(phase)
        self.cut = float(cut)
        self.origin = np.asarray(origin, dtype=float)

    def _polar(self, points, ref=None):
        p = np.atleast_2d(np.asarray(points, dtype=float)) - self.origin
        r = np.hypot(p[:, 0], p[:, 1])
        theta = np.mod(np.arctan2(p[:, 1], p[:, 0]) - self.cut, 2 * np.pi)
        if ref is not None:
            q = np.atleast_2d(np.asarray(ref, dtype=float)) - self.origin  # one row or one per point
            ref_theta = np.mod(np.arctan2(q[:, 1], q[:, 0]) - self.cut, 2 * np.pi)
            on_cut = (np.minimum(theta, 2 * np.pi - theta) < 1e-12) & (r > 0)
            theta = np.where(on_cut, np.where(ref_theta < np.pi, 0.0, 2 * np.pi), theta)
        return r, theta + self.cut

    def value(self, points, ref=None):
        r, theta = self._polar(points, ref)
        s = np.sin(self.alpha * (theta - self.phase))
        s = np.where(np.abs(s) < 1e-13, 0.0, s)  # exact zero on faces where the field vanishes
        return r**self.alpha * s

    def gradient(self, points, ref=None):
        r, theta = self._polar(points, ref)
        s = self.alpha * (theta - self.phase)
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = self.alpha * r ** (self.alpha - 1)
            mag = np.where(r > 0, mag, np.inf)
            return np.column_stack([mag * np.sin(s - theta), mag * np.cos(s - theta)])

    def laplacian(self, points, ref=None):
        return np.zeros(len(np.atleast_2d(points)))

    def __repr__(self):
        return f"CornerSingularity(alpha={self.alpha:g}, phase={self.phase:g}, cut={self.cut:g})"


class FunctionField:
    """Field given by user callables acting on ``(n, 2)`` point arrays."""

    def __init__(self, value, gradient, laplacian):
        self._value, self._gradient, self._laplacian = value, gradient, laplacian

    def value(self, points, ref=None):
        return np.asarray(self._value(np.atleast_2d(points)), dtype=float)

    def gradient(self, points, ref=None):
        return np.asarray(self._gradient(np.atleast_2d(points)), dtype=float).reshape(-1, 2)

    def laplacian(self, points, ref=None):
        return np.asarray(self._laplacian(np.atleast_2d(points)), dtype=float)


@dataclass(frozen=True)
class EnrichmentSpace:
    fields: tuple
    singular_point: np.ndarray = field(default_factory=lambda: np.zeros(2))
    name: str = ""

    def __len__(self):
        return len(self.fields)

    def values(self, points, ref=None):
        """Field values, shape ``(n_fields, n_points)``."""
        return np.array([f.value(points, ref) for f in self.fields]).reshape(len(self.fields), -1)

    def gradients(self, points, ref=None):
        """Field gradients, shape ``(n_fields, n_points, 2)``."""
        return np.array([f.gradient(points, ref) for f in self.fields]).reshape(len(self.fields), -1, 2)

    def laplacians(self, points, ref=None):
        return np.array([f.laplacian(points, ref) for f in self.fields]).reshape(len(self.fields), -1)


def fracture_singularity():
    """Crack-tip field r^(1/2) sin(theta/2) for a slit along the positive x-axis."""
    return EnrichmentSpace((CornerSingularity(0.5, 0.0, 0.0),), np.zeros(2), "fracture")


def lshape_singularity_topright():
    """Re-entrant corner field for (-1,1)^2 minus [0,1)^2."""
    f = CornerSingularity(2.0 / 3.0, np.pi / 2, np.pi / 4)
    return EnrichmentSpace((f,), np.zeros(2), "lshape-tr")


def lshape_singularity_bottomright():
    """Re-entrant corner field for (-1,1)^2 minus [0,1)x(-1,0]."""
    f = CornerSingularity(2.0 / 3.0, 0.0, -np.pi / 4)
    return EnrichmentSpace((f,), np.zeros(2), "lshape-br")


ENRICHMENTS = {
    "fracture": fracture_singularity,
    "lshape-tr": lshape_singularity_topright,
    "lshape-br": lshape_singularity_bottomright,
}


@dataclass(frozen=True)
class EnrichmentPlan:
    mode: str = "local"  # none | global | local
    gamma: float | None = 0.15

    def __post_init__(self):
        if self.mode not in ("none", "global", "local"):
            raise ValueError(f"unknown enrichment mode {self.mode!r}")
        if self.mode == "local" and (self.gamma is None or self.gamma < 0):
            raise ValueError("local enrichment needs a radius gamma >= 0")


def is_enriched(coords, plan, space):
    """Whether the element with vertex ``coords`` carries the enrichment.

    In local mode this holds iff the closed element meets the closed disk of
    radius ``gamma`` about the singular point; a radius of 0 enriches nothing.
    """
    if plan.mode == "none" or space is None or len(space) == 0:
        return False
    if plan.mode == "global":
        return True
    if plan.gamma <= 0:
        return False
    return point_polygon_distance(space.singular_point, np.asarray(coords, float)) <= plan.gamma
