"""Whittle-Matern Gaussian prior on a disk mesh via a truncated KL expansion.

The covariance operator ``C = s * tau^(2a-2) * (tau^2 - Lap)^(-a)`` with the
Neumann Laplacian is diagonal in the eigenbasis of ``K v = lam M v``, so a
sample is ``phi = sum_j w_j xi_j v_j`` with
``w_j = sqrt(s) * tau^(a-1) * (tau^2 + lam_j)^(-a/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from scipy.special import gamma, kv

from .fem import assemble_stiffness, assemble_weighted_mass
from .mesh import Mesh

DENSE_EIGEN_LIMIT = 4000


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class PriorSpec:
    alpha: float
    tau: float
    sigma2: float = 1.0
    n_kl: int = 300

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if int(self.n_kl) < 1:
            raise ValueError(f"n_kl must be at least 1, got {self.n_kl}")

    @property
    def length_scale(self) -> float:
        return 1.0 / self.tau

    @property
    def varsigma(self) -> float:
        """Normalization ``sigma^2 * 4 pi Gamma(alpha) / Gamma(alpha - 1)``."""
        return self.sigma2 * 4.0 * math.pi * math.gamma(self.alpha) / math.gamma(self.alpha - 1.0)


@dataclass(frozen=True, eq=False)
class KLBasis:
    """Mass-orthonormal generalized eigenpairs of the Neumann Laplacian."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def n_nodes(self) -> int:
        return self.eigenvectors.shape[0]

    def truncate(self, n_kl: int) -> "KLBasis":
        if n_kl > self.size:
            raise ValueError(f"basis holds {self.size} modes, {n_kl} requested")
        return KLBasis(self.eigenvalues[:n_kl], self.eigenvectors[:, :n_kl])


def build_kl_basis(mesh: Mesh, n_kl: int) -> KLBasis:
    """Smallest ``n_kl`` eigenpairs of ``K v = lam M v`` (no boundary constraint)."""
    n = mesh.n_nodes
    if not 1 <= n_kl <= n:
        raise ValueError(f"n_kl must lie in [1, {n}], got {n_kl}")
    K = assemble_stiffness(mesh)
    M = assemble_weighted_mass(mesh, np.ones(mesh.n_elements))
    if n <= DENSE_EIGEN_LIMIT:
        lam, vec = sla.eigh(K.toarray(), M.toarray(), subset_by_index=[0, n_kl - 1])
    else:
        try:
            lam, vec = spla.eigsh(K.tocsc(), k=n_kl, M=M.tocsc(), sigma=-1.0, which="LM")
        except spla.ArpackError as exc:
            raise EigenSolverError(f"eigensolver failed: {exc}") from None
        order = np.argsort(lam)
        lam, vec = lam[order], vec[:, order]
        # re-normalize in the mass inner product
        vec /= np.sqrt(np.einsum("ij,ij->j", vec, M @ vec))
    resid = np.linalg.norm(K @ vec - (M @ vec) * lam, axis=0)
    # the floor keeps the null mode (K v = 0) from demanding relative accuracy
    knorm = abs(K).sum(axis=0).max()
    scale = np.maximum(np.linalg.norm(K @ vec, axis=0), 1e-4 * knorm * np.linalg.norm(vec, axis=0))
    if np.any(resid > 1e-8 * scale):
        raise EigenSolverError(f"eigenpair residuals too large (max {resid.max():.2e})")
    lam = np.maximum(lam, 0.0)
    # deterministic sign: largest-magnitude entry positive
    idx = np.argmax(np.abs(vec), axis=0)
    vec *= np.sign(vec[idx, np.arange(vec.shape[1])])
    return KLBasis(lam, vec)


def kl_weights(spec: PriorSpec, eigenvalues) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    a, t = spec.alpha, spec.tau
    return math.sqrt(spec.varsigma) * t ** (a - 1.0) * (t * t + lam) ** (-a / 2.0)


def synthesize(basis: KLBasis, spec: PriorSpec, coeffs) -> np.ndarray:
    """Nodal field from standard-normal KL coefficients (rows allowed)."""
    xi = np.asarray(coeffs, dtype=float)
    w = kl_weights(spec, basis.eigenvalues)
    return (xi * w) @ basis.eigenvectors.T


def sample_prior(basis: KLBasis, spec: PriorSpec, rng: np.random.Generator):
    """One prior draw; returns ``(nodal field, coefficient vector)``."""
    xi = rng.standard_normal(basis.size)
    return synthesize(basis, spec, xi), xi


def matern_covariance(x, y, spec: PriorSpec) -> float:
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if r == 0.0:
        return spec.sigma2
    z = r * spec.tau
    nu = spec.alpha - 1.0
    return spec.sigma2 * 2.0 ** (1.0 - nu) / gamma(nu) * z**nu * kv(nu, z)


def save_basis(basis: KLBasis, path) -> None:
    header = f"klb v1 {basis.size} {basis.n_nodes}"
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(header), eigenvalues=basis.eigenvalues,
                 eigenvectors=basis.eigenvectors)


def load_basis(path) -> KLBasis:
    with np.load(path) as data:
        head = str(data["header"]).split()
        if head[:2] != ["klb", "v1"]:
            raise ValueError(f"{path}: not a 'klb v1' basis file")
        lam, vec = data["eigenvalues"], data["eigenvectors"]
    if vec.shape != (int(head[3]), int(head[2])):
        raise ValueError(f"{path}: basis header does not match its arrays")
    return KLBasis(lam, vec)


def cached_kl_basis(mesh: Mesh, n_kl: int, cache_dir=None) -> KLBasis:
    """Load a cached basis with enough modes, else build and store one."""
    if cache_dir is None:
        return build_kl_basis(mesh, n_kl)
    path = Path(cache_dir) / f"klbasis_{mesh.n_nodes}_{mesh.n_elements}_{n_kl}.npz"
    if path.exists():
        basis = load_basis(path)
        if basis.n_nodes == mesh.n_nodes and basis.size >= n_kl:
            return basis.truncate(n_kl)
    basis = build_kl_basis(mesh, n_kl)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_basis(basis, path)
    return basis
