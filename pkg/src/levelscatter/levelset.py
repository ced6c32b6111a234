"""Level-set map from a nodal field to a piecewise-constant scatterer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import ScattererField
from .mesh import Mesh


class LevelSetSpecError(ValueError):
    pass


@dataclass(frozen=True)
class LevelSetSpec:
    """Interior thresholds ``c_1 < ... < c_{L-1}`` and bin values ``b_1..b_L``.

    Bin ``i`` is ``c_{i-1} <= phi < c_i`` with ``c_0 = -inf`` and ``c_L = +inf``.
    """

    thresholds: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in self.thresholds)
        b = tuple(float(x) for x in self.values)
        if len(b) != len(c) + 1:
            raise LevelSetSpecError(f"{len(c)} thresholds need {len(c) + 1} values, got {len(b)}")
        if any(not lo < hi for lo, hi in zip(c[:-1], c[1:])):
            raise LevelSetSpecError(f"thresholds must be strictly increasing: {c}")
        if not np.all(np.isfinite(c)):
            raise LevelSetSpecError("thresholds must be finite")
        if 0.0 not in b:
            raise LevelSetSpecError("at least one bin must carry the background value 0")
        nonzero = {v for v in b if v != 0}
        if len(nonzero) > 1:
            raise LevelSetSpecError(f"bins may only take the values 0 and b, got {b}")
        object.__setattr__(self, "thresholds", c)
        object.__setattr__(self, "values", b)

    @property
    def contrast(self) -> float:
        return next((v for v in self.values if v != 0), 0.0)

    @classmethod
    def two_phase(cls, contrast: float, threshold: float = 0.0) -> "LevelSetSpec":
        """``q = contrast`` where ``phi >= threshold``, else 0."""
        return cls((threshold,), (0.0, contrast))


def centroid_values(phi, mesh: Mesh) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (mesh.n_nodes,):
        raise ValueError(f"level-set field has shape {phi.shape}, mesh has {mesh.n_nodes} nodes")
    return phi[mesh.elements].mean(axis=1)


def apply_level_set(phi, spec: LevelSetSpec, mesh: Mesh) -> ScattererField:
    """Classify each element by the level-set value at its centroid."""
    pc = centroid_values(phi, mesh)
    bins = np.searchsorted(np.asarray(spec.thresholds), pc, side="right")
    return ScattererField(np.asarray(spec.values)[bins], spec.contrast)


def apply_direct(phi, mesh: Mesh, floor: float = -0.99) -> ScattererField:
    """Use the field itself as the contrast (clipped below), no thresholding.

    A stand-in for a plain Gaussian-prior inversion without level sets.
    """
    pc = np.maximum(centroid_values(phi, mesh), floor)
    return ScattererField(pc, float(np.max(np.abs(pc))) if pc.size else 0.0)


def jaccard_index(q1: ScattererField, q2: ScattererField, mesh: Mesh) -> float:
    """Area of intersection over area of union of the two supports."""
    s1, s2 = np.asarray(q1.values) != 0, np.asarray(q2.values) != 0
    if s1.shape != (mesh.n_elements,) or s2.shape != (mesh.n_elements,):
        raise ValueError("scatterer fields do not match the mesh")
    area = mesh.areas
    union = area[s1 | s2].sum()
    if union == 0:
        return 1.0
    return float(area[s1 & s2].sum() / union)


def write_scatterer(q: ScattererField, path) -> None:
    with open(path, "w") as fh:
        for i, v in enumerate(np.asarray(q.values).tolist()):
            fh.write(f"{i} {v!r}\n")


def read_scatterer(path, contrast: float | None = None) -> ScattererField:
    data = np.loadtxt(path, ndmin=2)
    order = np.argsort(data[:, 0])
    vals = data[order, 1]
    if contrast is None:
        nz = vals[vals != 0]
        contrast = float(nz[0]) if nz.size else 0.0
    return ScattererField(vals, contrast)
