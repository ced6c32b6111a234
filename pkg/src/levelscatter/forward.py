"""Forward scattering: FEM solves, boundary observations and the stacked map."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bessel import bessel_jy, derivative
from .fem import FEMSpace
from .mesh import BoundaryTrace, Mesh

DEFAULT_N_OBS = 32
DEFAULT_N_DIRECTIONS = 5


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave ``exp(i k x . d)``."""

    k: float
    direction: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (2,) or abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError(f"direction must be a unit 2-vector, got {self.direction}")
        object.__setattr__(self, "direction", (float(d[0]), float(d[1])))

    def __call__(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.exp(1j * self.k * (p[..., 0] * self.direction[0] + p[..., 1] * self.direction[1]))


@dataclass(frozen=True, eq=False)
class ScattererField:
    """Piecewise-constant contrast, one value per element."""

    values: np.ndarray
    contrast: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def support(self) -> np.ndarray:
        return self.values != 0

    def is_admissible(self, mesh: Mesh) -> bool:
        """Values in ``{0, b}`` and no support on elements touching the boundary."""
        if self.values.shape != (mesh.n_elements,):
            return False
        if not np.all((self.values == 0) | (self.values == self.contrast)):
            return False
        r = np.linalg.norm(mesh.nodes, axis=1)
        touching = (r[mesh.elements] >= mesh.radius * (1 - 1e-12)).any(axis=1)
        return not np.any(self.support & touching)

    @classmethod
    def zeros(cls, mesh: Mesh, contrast: float = 1.0) -> "ScattererField":
        return cls(np.zeros(mesh.n_elements), contrast)


def direction_vectors(n_directions: int) -> np.ndarray:
    """``d_j = (cos, sin)(2 pi (j-1) / J)``, starting at ``(1, 0)``."""
    t = 2 * np.pi * np.arange(n_directions) / n_directions
    return np.column_stack([np.cos(t), np.sin(t)])


def observation_angles(n_obs: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n_obs) / n_obs


def wavenumber_grid(k_min: float, k_max: float, count: int) -> np.ndarray:
    if count == 1:
        return np.array([k_min])
    return np.linspace(k_min, k_max, count)


@dataclass(eq=False)
class ScatterConfig:
    mesh: Mesh
    wavenumbers: np.ndarray
    directions: np.ndarray = field(default_factory=lambda: direction_vectors(DEFAULT_N_DIRECTIONS))
    angles: np.ndarray = field(default_factory=lambda: observation_angles(DEFAULT_N_OBS))
    n_trunc: int | None = None

    def __post_init__(self):
        self.wavenumbers = np.atleast_1d(np.asarray(self.wavenumbers, dtype=float))
        self.directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        self.angles = np.atleast_1d(np.asarray(self.angles, dtype=float))
        if min(len(self.wavenumbers), len(self.directions), len(self.angles)) < 1:
            raise ValueError("need at least one wavenumber, direction and angle")
        if np.any(self.wavenumbers <= 0):
            raise ValueError("wavenumbers must be positive")
        if np.any(np.abs(np.linalg.norm(self.directions, axis=1) - 1) > 1e-12):
            raise ValueError("directions must be unit vectors")
        a = self.angles
        if np.any(a < 0) or np.any(a >= 2 * np.pi) or len(np.unique(a)) != len(a):
            raise ValueError("observation angles must be distinct and in [0, 2pi)")

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.wavenumbers), len(self.directions), len(self.angles)

    @property
    def n_data(self) -> int:
        m, j, n = self.shape
        return m * j * n


def boundary_interpolation(trace: BoundaryTrace, n_nodes: int, angles) -> np.ndarray:
    """Dense ``(len(angles), n_nodes)`` matrix of linear-in-angle interpolation."""
    th = trace.unwrapped_angles()
    q = np.asarray(angles, dtype=float)
    q = np.where(q < th[0], q + 2 * np.pi, q)
    seg = np.clip(np.searchsorted(th, q, side="right") - 1, 0, trace.size - 1)
    t = (q - th[seg]) / (th[seg + 1] - th[seg])
    out = np.zeros((len(q), n_nodes))
    rows = np.arange(len(q))
    nxt = (seg + 1) % trace.size
    np.add.at(out, (rows, trace.node_indices[seg]), 1.0 - t)
    np.add.at(out, (rows, trace.node_indices[nxt]), t)
    return out


def observe_boundary(field, trace: BoundaryTrace, angles) -> np.ndarray:
    """Sample a nodal field on the boundary at the given polar angles."""
    u = np.asarray(field)
    return boundary_interpolation(trace, len(u), angles) @ u


def incident_load(mesh: Mesh, q_values, k: float, directions) -> np.ndarray:
    """Load vectors ``k^2 int q u^i psi_p`` for each direction, shape ``(n_nodes, J)``.

    Uses the edge-midpoint rule on each element.
    """
    q = np.asarray(q_values, dtype=float)
    d = np.atleast_2d(directions)
    out = np.zeros((mesh.n_nodes, len(d)), dtype=complex)
    active = np.flatnonzero(q)
    if active.size == 0:
        return out
    el = mesh.elements[active]
    p = mesh.nodes[el]
    # midpoint m_i sits opposite vertex i
    mids = np.stack([(p[:, 1] + p[:, 2]) / 2, (p[:, 2] + p[:, 0]) / 2, (p[:, 0] + p[:, 1]) / 2], axis=1)
    ui = np.exp(1j * k * np.einsum("emx,jx->emj", mids, d))
    scale = (k * k * q[active] * mesh.areas[active] / 3.0)[:, None]
    for i in range(3):
        # psi_i is 1/2 at the two midpoints adjacent to vertex i
        contrib = 0.5 * (ui.sum(axis=1) - ui[:, i]) * scale
        np.add.at(out, el[:, i], contrib)
    return out


def solve_scattered(
    mesh: Mesh,
    q: ScattererField | np.ndarray,
    wave: IncidentWave,
    n_trunc: int | None = None,
    space: FEMSpace | None = None,
) -> np.ndarray:
    """Scattered field at the mesh nodes for one incident plane wave."""
    values = q.values if isinstance(q, ScattererField) else np.asarray(q, dtype=float)
    if values.shape != (mesh.n_elements,):
        raise ValueError(
            f"scatterer has {values.shape} values, mesh has {mesh.n_elements} elements"
        )
    rhs = incident_load(mesh, values, wave.k, [wave.direction])[:, 0]
    if not rhs.any():
        return np.zeros(mesh.n_nodes, dtype=complex)
    space = FEMSpace(mesh) if space is None else space
    return space.factorize(wave.k, 1.0 + values, n_trunc).solve(rhs)


class ForwardModel:
    """Stacked boundary observations for every (wavenumber, direction) pair.

    One factorization per wavenumber serves all incident directions.
    Output ordering is wavenumber-major, then direction, then angle.
    """

    def __init__(self, cfg: ScatterConfig, space: FEMSpace | None = None):
        self.cfg = cfg
        self.mesh = cfg.mesh
        self.space = FEMSpace(cfg.mesh) if space is None else space
        self.trace = self.space.trace
        self.observer = boundary_interpolation(self.trace, self.mesh.n_nodes, cfg.angles)
        for k in cfg.wavenumbers:
            self.space.dtn(k, cfg.n_trunc)

    def fields(self, q_values, k: float) -> np.ndarray:
        """Nodal scattered fields ``(n_nodes, J)`` at one wavenumber."""
        q = np.asarray(q_values, dtype=float)
        rhs = incident_load(self.mesh, q, k, self.cfg.directions)
        if not rhs.any():
            return np.zeros_like(rhs)
        return self.space.factorize(k, 1.0 + q, self.cfg.n_trunc).solve(rhs)

    def __call__(self, q) -> np.ndarray:
        values = q.values if isinstance(q, ScattererField) else np.asarray(q, dtype=float)
        if values.shape != (self.mesh.n_elements,):
            raise ValueError(
                f"scatterer has {values.shape} values, mesh has {self.mesh.n_elements} elements"
            )
        blocks = []
        for k in self.cfg.wavenumbers:
            u = self.fields(values, k)
            blocks.append((self.observer @ u).T.ravel())
        return np.concatenate(blocks)


def forward_map(q, cfg: ScatterConfig) -> np.ndarray:
    return ForwardModel(cfg)(q)


def analytic_disk_scattering(
    a: float,
    b: float,
    k: float,
    angles,
    radius: float = 1.0,
    direction=(1.0, 0.0),
    tol: float = 1e-12,
    n_max: int | None = None,
) -> np.ndarray:
    """Scattered field on ``r = radius`` for a concentric disk of contrast ``b``.

    Separation of variables: inside ``r < a`` the total field is a sum of
    ``J_n(k sqrt(1+b) r)``, outside the scattered part is a sum of
    ``H_n^(1)(k r)``; coefficients follow from continuity of the field and
    its radial derivative at ``r = a``.
    """
    if b <= -1:
        raise ValueError(f"contrast must exceed -1, got {b}")
    if not 0 < a < radius:
        raise ValueError(f"inner radius must lie in (0, {radius}), got {a}")
    th = np.asarray(angles, dtype=float)
    if b == 0:
        return np.zeros(th.shape, dtype=complex)
    k1 = k * math.sqrt(1.0 + b)
    nmax = n_max if n_max is not None else int(max(k1 * a, k * radius) + 40)
    ja, ya = bessel_jy(nmax + 1, k * a)
    j1, _ = bessel_jy(nmax + 1, k1 * a)
    jr, yr = bessel_jy(nmax, k * radius)
    ha = ja + 1j * ya
    dja, dha, dj1 = derivative(ja), derivative(ha), derivative(j1)
    ja, ha, j1 = ja[:-1], ha[:-1], j1[:-1]
    n = np.arange(nmax + 1)
    num = k1 * dj1 * ja - k * dja * j1
    den = k * dha * j1 - k1 * dj1 * ha
    coef = (1j**n) * num / den * (jr + 1j * yr)
    keep = nmax + 1
    if n_max is None:
        mag = np.abs(coef)
        keep = int(np.flatnonzero(mag >= tol * mag.max())[-1]) + 1
    coef = coef[:keep]
    phi = math.atan2(direction[1], direction[0])
    rel = th[..., None] - phi
    weights = np.where(np.arange(keep) == 0, 1.0, 2.0)
    return np.sum(weights * coef * np.cos(np.arange(keep) * rel), axis=-1)


@dataclass(eq=False)
class ObservationFile:
    """Contents of an ``obs v1`` file."""

    wavenumbers: np.ndarray
    directions: np.ndarray
    angles: np.ndarray
    values: np.ndarray
    gamma: float
    seed: int

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.wavenumbers), len(self.directions), len(self.angles)


def write_observations(path, obs: ObservationFile) -> None:
    m, j, n = obs.shape
    if obs.values.shape != (m * j * n,):
        raise ValueError("observation vector does not match M*J*N")
    lines = [f"obs v1 {m} {j} {n} {obs.gamma!r} {obs.seed}"]
    lines += [repr(float(k)) for k in obs.wavenumbers]
    lines += [f"{float(d[0])!r} {float(d[1])!r}" for d in obs.directions]
    lines += [repr(float(a)) for a in obs.angles]
    lines += [f"{v.real!r} {v.imag!r}" for v in obs.values.tolist()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_observations(path) -> ObservationFile:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 7 or head[:2] != ["obs", "v1"]:
            raise ValueError(f"{path}: not an 'obs v1' file")
        m, j, n = int(head[2]), int(head[3]), int(head[4])
        gamma, seed = float(head[5]), int(head[6])
        rest = fh.read().split("\n")
    rows = [r.split() for r in rest if r.strip()]
    if len(rows) != m + j + n + m * j * n:
        raise ValueError(f"{path}: expected {m + j + n + m * j * n} data lines, got {len(rows)}")
    ks = np.array([float(r[0]) for r in rows[:m]])
    dirs = np.array([[float(r[0]), float(r[1])] for r in rows[m : m + j]])
    angles = np.array([float(r[0]) for r in rows[m + j : m + j + n]])
    vals = np.array([complex(float(r[0]), float(r[1])) for r in rows[m + j + n :]])
    return ObservationFile(ks, dirs, angles, vals, gamma, seed)
