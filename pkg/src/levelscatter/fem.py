"""P1 finite elements for the truncated Helmholtz problem.

The discrete bilinear form is

    A = K - k^2 M(1 + q) - T_k

with ``K`` the stiffness matrix, ``M(w)`` the mass matrix weighted by a
per-element constant and ``T_k`` the dense boundary block of the truncated
Dirichlet-to-Neumann map, ``T_k[p, r] = int_Gamma (T psi_r) psi_p dS``.
All three share one fixed sparsity pattern per mesh, so assembling a new
scatterer only rewrites the data array of a CSC matrix.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .bessel import hankel_log_derivative, hankel_log_derivatives
from .mesh import BoundaryTrace, Mesh, boundary_trace

__all__ = [
    "AssemblyError",
    "SolverError",
    "DtNBlock",
    "FEMSpace",
    "Factorization",
    "assemble_stiffness",
    "assemble_weighted_mass",
    "assemble_dtn",
    "default_n_trunc",
    "hankel_log_derivative",
    "solve_complex_system",
    "write_triplets",
]

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


class AssemblyError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


def _gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    area = mesh.signed_areas
    bad = np.flatnonzero(area <= 1e-14 * max(mesh.radius, 1.0) ** 2)
    if bad.size:
        raise AssemblyError(
            f"element {bad[0]} is degenerate or inverted (signed area {area[bad[0]]:.3e})"
        )
    p = mesh.nodes[mesh.elements]
    # grad of barycentric i is the rotated opposite edge / (2 area)
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    return grads, area


def _element_pattern(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    e = mesh.elements
    rows = np.repeat(e, 3, axis=1).ravel()
    cols = np.tile(e, (1, 3)).ravel()
    return rows, cols


def local_stiffness(mesh: Mesh) -> np.ndarray:
    grads, area = _gradients(mesh)
    return area[:, None, None] * np.einsum("eik,ejk->eij", grads, grads)


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    rows, cols = _element_pattern(mesh)
    vals = local_stiffness(mesh).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_weighted_mass(mesh: Mesh, element_weights) -> sp.csr_matrix:
    """Mass matrix with a constant weight on each element."""
    w = np.asarray(element_weights, dtype=float)
    if w.shape != (mesh.n_elements,):
        raise ValueError(
            f"expected {mesh.n_elements} element weights, got shape {w.shape}"
        )
    rows, cols = _element_pattern(mesh)
    vals = ((w * mesh.areas)[:, None, None] * _MASS_REF).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def default_n_trunc(k: float, radius: float) -> int:
    return max(math.ceil(k * radius) + 10, 20)


def _hat_integrals(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``g0(x) = int_0^1 e^{-ixs} ds`` and ``g1(x) = int_0^1 s e^{-ixs} ds``."""
    x = np.asarray(x, dtype=float)
    g0 = np.empty(x.shape, dtype=complex)
    g1 = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 0.05
    xs = x[small]
    term = np.ones_like(xs, dtype=complex)
    s0 = np.zeros_like(term)
    s1 = np.zeros_like(term)
    for m in range(10):
        s0 += term / (m + 1)
        s1 += term / (m + 2)
        term = term * (-1j * xs) / (m + 1)
    g0[small], g1[small] = s0, s1
    xl = x[~small]
    c = -1j * xl
    ec = np.exp(c)
    g0[~small] = (ec - 1.0) / c
    g1[~small] = (ec * (c - 1.0) + 1.0) / c**2
    return g0, g1


def boundary_fourier_matrix(trace: BoundaryTrace, n_trunc: int) -> np.ndarray:
    """Real matrix ``(2N+1, n_b)`` of exact Fourier integrals of the boundary hats.

    Row 0 holds ``int psi_p dtheta``, rows ``1..N`` hold
    ``int psi_p cos(n theta)`` and rows ``N+1..2N`` hold ``int psi_p sin(n theta)``.
    """
    th = trace.unwrapped_angles()
    nb = trace.size
    a, length = th[:-1], np.diff(th)
    n = np.arange(n_trunc + 1)[:, None]
    g0, g1 = _hat_integrals(n * length[None, :])
    phase = length[None, :] * np.exp(-1j * n * a[None, :])
    left = phase * (g0 - g1)  # hat of the edge's first node
    right = phase * g1  # hat of the edge's second node
    f = left + np.roll(right, 1, axis=1)
    out = np.empty((2 * n_trunc + 1, nb))
    out[0] = f[0].real
    out[1 : n_trunc + 1] = f[1:].real
    out[n_trunc + 1 :] = -f[1:].imag
    return out


@dataclass(frozen=True, eq=False)
class DtNBlock:
    """Boundary block ``basis.T @ diag(symbol) @ basis`` of the DtN term."""

    node_indices: np.ndarray
    basis: np.ndarray
    symbol: np.ndarray
    n_trunc: int

    def matrix(self) -> np.ndarray:
        return self.basis.T @ (self.symbol[:, None] * self.basis)

    def quadratic_form(self, v) -> complex:
        c = self.basis @ np.asarray(v)
        return complex(np.sum(self.symbol * c * c))


def assemble_dtn(
    trace: BoundaryTrace, k: float, radius: float | None = None, n_trunc: int | None = None
) -> DtNBlock:
    """Truncated DtN term ``int_Gamma (T u) v dS`` on the P1 boundary trace.

    Its imaginary part is positive on real vectors; the system matrix
    subtracts it.
    """
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    radius = trace.radius if radius is None else radius
    n_trunc = default_n_trunc(k, radius) if n_trunc is None else int(n_trunc)
    if n_trunc < 1:
        raise ValueError("n_trunc must be at least 1")
    if 2 * n_trunc + 1 > trace.size:
        raise ValueError(
            f"n_trunc={n_trunc} aliases on a boundary with {trace.size} nodes"
        )
    basis = boundary_fourier_matrix(trace, n_trunc)
    rho = hankel_log_derivatives(n_trunc, k * radius)
    scale = radius * k / np.pi
    symbol = np.concatenate([[0.5 * scale * rho[0]], scale * rho[1:], scale * rho[1:]])
    return DtNBlock(trace.node_indices.copy(), basis, symbol, n_trunc)


class Factorization:
    """Sparse LU of a complex system; ``solve`` accepts one or many right-hand sides."""

    def __init__(self, matrix: sp.spmatrix, check: bool = True):
        self.matrix = sp.csc_matrix(matrix)
        self.check = check
        try:
            self._lu = splu(self.matrix)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from None
        d = np.abs(self._lu.U.diagonal())
        self.pivot_ratio = float(d.min() / d.max()) if d.size else 0.0
        if not self.pivot_ratio > 1e-14:
            raise SolverError(
                f"matrix is numerically singular (min/max |U_ii| = {self.pivot_ratio:.2e})"
            )
        self._norm = sp.linalg.norm(self.matrix, 1)

    def solve(self, rhs) -> np.ndarray:
        b = np.asarray(rhs, dtype=complex)
        x = self._lu.solve(b)
        if self.check:
            r = self.matrix @ x - b
            lhs = np.abs(r).max(axis=0)
            bound = 1e-10 * (self._norm * np.abs(x).max(axis=0) + np.abs(b).max(axis=0))
            if np.any(lhs > bound):
                raise SolverError(
                    "residual check failed "
                    f"(|r|={lhs.max():.2e}, pivot ratio {self.pivot_ratio:.2e})"
                )
        return x


def solve_complex_system(matrix: sp.spmatrix, rhs) -> np.ndarray:
    rhs = np.asarray(rhs)
    if rhs.shape[0] != matrix.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, matrix has {matrix.shape[0]}")
    return Factorization(matrix).solve(rhs)


class FEMSpace:
    """P1 space on a disk mesh with a fixed system pattern.

    Holds the stiffness matrix and index maps so that
    ``system_matrix(k, weights)`` is a couple of scatter-adds.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.trace = boundary_trace(mesh)
        n = mesh.n_nodes
        rows, cols = _element_pattern(mesh)
        self._mass_local = (mesh.areas[:, None, None] * _MASS_REF).reshape(len(rows) // 9, 9)
        self._k_vals = local_stiffness(mesh).ravel()
        bnd = self.trace.node_indices
        brow = np.repeat(bnd, len(bnd))
        bcol = np.tile(bnd, len(bnd))
        all_r = np.concatenate([rows, brow])
        all_c = np.concatenate([cols, bcol])
        pattern = sp.csc_matrix((np.ones(len(all_r)), (all_r, all_c)), shape=(n, n))
        pattern.sum_duplicates()
        pattern.sort_indices()
        self._indices = pattern.indices.copy()
        self._indptr = pattern.indptr.copy()
        keys = np.repeat(np.arange(n, dtype=np.int64), np.diff(self._indptr)) * n + self._indices
        self._nnz = len(keys)
        self._pos_elem = np.searchsorted(keys, cols.astype(np.int64) * n + rows)
        self._pos_bnd = np.searchsorted(keys, bcol.astype(np.int64) * n + brow)
        self._stiff_data = np.bincount(self._pos_elem, weights=self._k_vals, minlength=self._nnz)
        self._dtn_cache: dict[tuple[float, int], tuple[DtNBlock, np.ndarray]] = {}

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_nodes

    def stiffness(self) -> sp.csc_matrix:
        return self._csc(self._stiff_data.astype(float))

    def dtn(self, k: float, n_trunc: int | None = None) -> DtNBlock:
        return self._dtn_data(k, n_trunc)[0]

    def _dtn_data(self, k: float, n_trunc: int | None):
        n_trunc = default_n_trunc(k, self.mesh.radius) if n_trunc is None else int(n_trunc)
        key = (float(k), n_trunc)
        if key not in self._dtn_cache:
            block = assemble_dtn(self.trace, k, self.mesh.radius, n_trunc)
            vals = block.matrix().ravel()
            data = np.bincount(self._pos_bnd, weights=vals.real, minlength=self._nnz) + 1j * (
                np.bincount(self._pos_bnd, weights=vals.imag, minlength=self._nnz)
            )
            self._dtn_cache[key] = (block, data)
        return self._dtn_cache[key]

    def mass_data(self, element_weights) -> np.ndarray:
        w = np.asarray(element_weights, dtype=float)
        if w.shape != (self.mesh.n_elements,):
            raise ValueError(
                f"expected {self.mesh.n_elements} element weights, got shape {w.shape}"
            )
        vals = (self._mass_local * w[:, None]).ravel()
        return np.bincount(self._pos_elem, weights=vals, minlength=self._nnz)

    def system_matrix(self, k: float, element_weights, n_trunc: int | None = None) -> sp.csc_matrix:
        """``K - k^2 M(weights) - T_k`` on the shared pattern."""
        _, dtn = self._dtn_data(k, n_trunc)
        data = self._stiff_data - k * k * self.mass_data(element_weights) - dtn
        return self._csc(data)

    def _csc(self, data: np.ndarray) -> sp.csc_matrix:
        n = self.mesh.n_nodes
        return sp.csc_matrix((data, self._indices.copy(), self._indptr.copy()), shape=(n, n))

    def factorize(self, k: float, element_weights, n_trunc: int | None = None) -> Factorization:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sp.SparseEfficiencyWarning)
            return Factorization(self.system_matrix(k, element_weights, n_trunc))


def write_triplets(matrix: sp.spmatrix, path) -> None:
    """Dump a complex matrix as ``i j re im`` lines."""
    coo = sp.coo_matrix(matrix)
    data = np.asarray(coo.data, dtype=complex)
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), data.tolist()):
            fh.write(f"{i} {j} {v.real!r} {v.imag!r}\n")
