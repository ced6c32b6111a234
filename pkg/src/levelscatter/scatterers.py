"""Analytic test scatterers rasterized by element-centroid membership."""
from __future__ import annotations

import numpy as np

from .forward import ScattererField
from .mesh import Mesh


def love_region(x, y):
    # clipped to the disk by rasterize(); the curve itself pokes outside B_1
    return x**2 + (y - np.cbrt(x**2)) ** 2 <= 1.0


def cross_region(x, y, length: float = 1.0, width: float = 0.3):
    """Two centred bars, ``length x width``, along the coordinate axes."""
    a, b = length / 2, width / 2
    return ((np.abs(x) <= a) & (np.abs(y) <= b)) | ((np.abs(x) <= b) & (np.abs(y) <= a))


def two_circles_region(x, y):
    return ((x + 0.3) ** 2 + (y - 0.3) ** 2 <= 0.04) | ((x - 0.3) ** 2 + (y + 0.3) ** 2 <= 0.04)


def disk_region(x, y, radius: float = 0.5):
    return x**2 + y**2 < radius**2


SHAPES = {
    "love": (love_region, 1.0),
    "cross": (cross_region, 1.0),
    "two_circles": (two_circles_region, 3.0),
    "disk": (disk_region, 1.0),
}


def rasterize(mesh: Mesh, region, contrast: float) -> ScattererField:
    c = mesh.centroids
    inside = region(c[:, 0], c[:, 1]) & (np.hypot(c[:, 0], c[:, 1]) < mesh.radius)
    return ScattererField(np.where(inside, float(contrast), 0.0), float(contrast))


def named_scatterer(name: str, mesh: Mesh, contrast: float | None = None) -> ScattererField:
    """Rasterize one of the shipped shapes (``love``, ``cross``, ``two_circles``, ``disk``)."""
    try:
        region, default = SHAPES[name]
    except KeyError:
        raise ValueError(f"unknown scatterer {name!r}; choose from {sorted(SHAPES)}") from None
    return rasterize(mesh, region, default if contrast is None else contrast)
