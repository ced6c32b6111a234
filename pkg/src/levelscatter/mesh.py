"""Structured triangulations of the disk and queries on them.

The generator places concentric rings of nodes and stitches neighbouring
rings together.  Rings are ``0.8 * target_h`` apart.  The innermost ring
has 6 nodes and the count doubles outward whenever the arc spacing would
stay above ``0.75 * 0.8 * target_h``, so every ring count divides the next
and each annulus is invariant under a fixed rotation.  That alignment keeps
the discrete operator from coupling Fourier modes of different order across
rings, which matters for the DtN truncation.  Optional ``fitted_radii`` force rings onto given circles
(used for interfaces that should be resolved exactly, e.g. the
concentric-disk oracle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

SPACING_FACTOR = 0.8
DOUBLING_FACTOR = 0.75
MAX_NODES = 2_000_000


class MeshError(ValueError):
    """Structurally invalid mesh or failed geometric query."""


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    elements: np.ndarray
    radius: float
    target_h: float = float("nan")

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise MeshError("nodes must have shape (n, 2)")
        if elements.ndim != 2 or elements.shape[1] != 3:
            raise MeshError("elements must have shape (m, 3)")
        if elements.size and (elements.min() < 0 or elements.max() >= len(nodes)):
            raise MeshError("element references a missing node")
        nodes.flags.writeable = False
        elements.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    @cached_property
    def edge_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges ``(k, 2)`` and how many elements use each."""
        e = self.elements
        pairs = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
        pairs.sort(axis=1)
        edges, counts = np.unique(pairs, axis=0, return_counts=True)
        return edges, counts

    def element_diameters(self) -> np.ndarray:
        p = self.nodes[self.elements]
        lens = [np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)]
        return np.max(lens, axis=0)


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Counterclockwise loop of boundary nodes with their polar angles."""

    node_indices: np.ndarray
    angles: np.ndarray
    radius: float

    @property
    def size(self) -> int:
        return len(self.node_indices)

    @property
    def edges(self) -> np.ndarray:
        idx = self.node_indices
        return np.column_stack([idx, np.roll(idx, -1)])

    def unwrapped_angles(self) -> np.ndarray:
        """Angles with the first node appended again at ``+2*pi``."""
        return np.append(self.angles, self.angles[0] + 2 * np.pi)


def _ring_radii(radius: float, step: float, fitted: Sequence[float]) -> np.ndarray:
    breaks = [0.0, *sorted(float(r) for r in fitted), radius]
    radii = [0.0]
    for r0, r1 in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((r1 - r0) / step - 1e-9))
        radii.extend(r0 + (r1 - r0) * np.arange(1, n + 1) / n)
    radii[-1] = radius
    return np.asarray(radii)


def _stitch(inner_ids, inner_ang, outer_ids, outer_ang) -> list[tuple[int, int, int]]:
    """Triangulate the annulus between two rings of nodes (angles sorted)."""
    na, nb = len(inner_ids), len(outer_ids)
    a0 = inner_ang[0]
    rel = np.mod(outer_ang - a0, 2 * np.pi)
    j0 = int(np.argmax(rel))
    b_ext = np.empty(nb + 1)
    b_ext[0] = a0 + rel[j0] - 2 * np.pi
    order = [(j0 + t) % nb for t in range(nb)]
    b_ext[1:nb] = b_ext[0] + np.mod(outer_ang[order[1:]] - outer_ang[j0], 2 * np.pi)
    b_ext[nb] = b_ext[0] + 2 * np.pi
    a_ext = np.append(a0 + np.mod(inner_ang - a0, 2 * np.pi), a0 + 2 * np.pi)
    ids_b = [outer_ids[o] for o in order] + [outer_ids[j0]]
    ids_a = list(inner_ids) + [inner_ids[0]]

    tris = []
    i = j = 0
    while i < na or j < nb:
        if j == nb or (i < na and a_ext[i + 1] <= b_ext[j + 1]):
            tris.append((ids_a[i], ids_b[j], ids_a[i + 1]))
            i += 1
        else:
            tris.append((ids_a[i], ids_b[j], ids_b[j + 1]))
            j += 1
    return tris


def generate_disk_mesh(
    radius: float,
    target_h: float,
    fitted_radii: Sequence[float] = (),
    max_nodes: int = MAX_NODES,
) -> Mesh:
    """Triangulate the disk of the given radius with nominal meshsize ``target_h``.

    Parameters
    ----------
    radius : float
        Disk radius R.
    target_h : float
        Nominal meshsize; must satisfy ``0 < target_h < radius``.
    fitted_radii : sequence of float, optional
        Radii in ``(0, R)`` that must coincide with a ring of nodes.
    max_nodes : int
        Refuse to build meshes with more nodes than this.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not 0 < target_h < radius:
        raise ValueError(f"target_h must lie in (0, radius), got {target_h}")
    for r in fitted_radii:
        if not 0 < r < radius:
            raise ValueError(f"fitted radius {r} outside (0, {radius})")
    step = SPACING_FACTOR * target_h
    radii = _ring_radii(radius, step, fitted_radii)
    counts = [1]
    c = 6
    for r in radii[1:]:
        while np.pi * r / c >= DOUBLING_FACTOR * step:
            c *= 2
        counts.append(c)
    if sum(counts) > max_nodes:
        raise MemoryError(
            f"mesh would need {sum(counts)} nodes, above the cap of {max_nodes}"
        )

    n_rings = len(radii) - 1
    nodes = [np.zeros((1, 2))]
    ids = [np.array([0])]
    angles = [np.zeros(1)]
    start = 1
    for i in range(1, n_rings + 1):
        n = counts[i]
        # outermost ring starts at theta = 0; neighbours are staggered
        offset = 0.5 * ((n_rings - i) % 2)
        theta = 2 * np.pi * (np.arange(n) + offset) / n
        nodes.append(radii[i] * np.column_stack([np.cos(theta), np.sin(theta)]))
        ids.append(np.arange(start, start + n))
        angles.append(theta)
        start += n
    nodes = np.concatenate(nodes)
    # exact projection of the outer ring onto the circle
    theta = angles[-1]
    nodes[ids[-1]] = radius * np.column_stack([np.cos(theta), np.sin(theta)])

    tris = [(0, int(ids[1][p]), int(ids[1][(p + 1) % counts[1]])) for p in range(counts[1])]
    for i in range(1, n_rings):
        tris.extend(_stitch(ids[i], angles[i], ids[i + 1], angles[i + 1]))
    elements = np.asarray(tris, dtype=np.int64)

    mesh = Mesh(nodes, elements, radius, target_h)
    flip = mesh.signed_areas < 0
    if flip.any():
        elements = elements.copy()
        elements[flip] = elements[flip][:, [0, 2, 1]]
        mesh = Mesh(nodes, elements, radius, target_h)
    return mesh


def boundary_trace(mesh: Mesh) -> BoundaryTrace:
    """Ordered loop of boundary nodes, starting at the smallest polar angle."""
    e = mesh.elements
    directed = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
    edges, counts = mesh.edge_counts
    bnd = edges[counts == 1]
    if len(bnd) == 0:
        raise MeshError("mesh has no boundary edges")
    key = set(map(tuple, bnd))
    succ = {}
    for a, b in directed:
        if (min(a, b), max(a, b)) in key:
            succ[int(a)] = int(b)
    pts = mesh.nodes
    cand = np.fromiter(succ.keys(), dtype=np.int64)
    ang = np.mod(np.arctan2(pts[cand, 1], pts[cand, 0]), 2 * np.pi)
    first = int(cand[np.argmin(ang)])
    loop = [first]
    nxt = succ[first]
    while nxt != first:
        loop.append(nxt)
        if len(loop) > len(succ):
            raise MeshError("boundary edges do not form a single closed loop")
        nxt = succ[nxt]
    if len(loop) != len(bnd):
        raise MeshError("boundary has more than one component")
    loop = np.asarray(loop)
    angles = np.mod(np.arctan2(pts[loop, 1], pts[loop, 0]), 2 * np.pi)
    return BoundaryTrace(loop, angles, mesh.radius)


def barycentric(mesh: Mesh, point) -> np.ndarray:
    """Barycentric coordinates of ``point`` with respect to every element."""
    p = mesh.nodes[mesh.elements]
    x, y = float(point[0]), float(point[1])
    area2 = 2.0 * mesh.signed_areas
    l0 = ((p[:, 1, 0] - x) * (p[:, 2, 1] - y) - (p[:, 2, 0] - x) * (p[:, 1, 1] - y)) / area2
    l1 = ((p[:, 2, 0] - x) * (p[:, 0, 1] - y) - (p[:, 0, 0] - x) * (p[:, 2, 1] - y)) / area2
    return np.column_stack([l0, l1, 1.0 - l0 - l1])


def locate_point(mesh: Mesh, point, tol: float = 1e-12) -> tuple[int, np.ndarray]:
    """Containing element and barycentric weights of a point."""
    lam = barycentric(mesh, point)
    worst = lam.min(axis=1)
    e = int(np.argmax(worst))
    if worst[e] < -tol:
        raise MeshError(f"point {tuple(point)} is outside the mesh")
    return e, lam[e]


def interpolation_weights(mesh: Mesh, points) -> tuple[np.ndarray, np.ndarray]:
    """Node indices ``(P, 3)`` and weights ``(P, 3)`` for P1 interpolation."""
    pts = np.atleast_2d(points)
    idx = np.empty((len(pts), 3), dtype=np.int64)
    w = np.empty((len(pts), 3))
    for i, p in enumerate(pts):
        e, lam = locate_point(mesh, p)
        idx[i] = mesh.elements[e]
        w[i] = lam
    return idx, w


def write_mesh(mesh: Mesh, path) -> None:
    lines = [f"mesh v1 {mesh.n_nodes} {mesh.n_elements} {mesh.radius!r}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.elements.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 5 or head[:2] != ["mesh", "v1"]:
            raise MeshError(f"{path}: not a 'mesh v1' file")
        n_nodes, n_elements, radius = int(head[2]), int(head[3]), float(head[4])
        nodes = np.loadtxt(fh, max_rows=n_nodes, ndmin=2)
        elements = np.loadtxt(fh, max_rows=n_elements, dtype=np.int64, ndmin=2)
    if len(nodes) != n_nodes or len(elements) != n_elements:
        raise MeshError(f"{path}: truncated mesh file")
    return Mesh(nodes, elements, radius)
