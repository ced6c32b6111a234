"""Data-misfit potential and the pCN sampler in KL-coefficient space.

The chain state is the vector of standard-normal KL coefficients, so the
prior is N(0, I) and the pCN proposal ``sqrt(1 - beta^2) xi + beta eta``
leaves it invariant.  Randomness for step ``s`` comes from
``default_rng([seed, s + 1])`` (the initial draw uses ``[seed, 0]``), which
makes a run resumable from just the seed and the step index.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .forward import ForwardModel, ScattererField
from .levelset import LevelSetSpec, apply_direct, apply_level_set
from .prior import KLBasis, PriorSpec, synthesize

log = logging.getLogger(__name__)

Potential = Callable[[np.ndarray], float]


@dataclass(frozen=True, eq=False)
class ObservationData:
    y: np.ndarray
    gamma: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex)
        if not np.all(np.isfinite(y)):
            raise ValueError("observations must be finite")
        if not self.gamma > 0:
            raise ValueError(f"noise level must be positive, got {self.gamma}")
        object.__setattr__(self, "y", y)

    def weighted_norm(self, v=None) -> float:
        """``|v|_Sigma`` with ``Sigma = gamma^2 I`` on real and imaginary parts."""
        v = self.y if v is None else np.asarray(v)
        return float(np.linalg.norm(v) / self.gamma)


def add_noise(clean, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Add independent N(0, gamma^2) noise to real and imaginary parts."""
    if gamma < 0:
        raise ValueError(f"noise level must be non-negative, got {gamma}")
    y = np.asarray(clean, dtype=complex)
    if gamma == 0:
        return y.copy()
    noise = rng.normal(0.0, gamma, size=(2,) + y.shape)
    return y + noise[0] + 1j * noise[1]


def misfit(pred, data: ObservationData) -> float:
    r = np.asarray(pred) - data.y
    return float(0.5 * np.vdot(r, r).real / data.gamma**2)


class ScatteringPosterior:
    """Potential ``Phi(xi) = |G(F(phi(xi))) - y|^2_Sigma / 2`` as a callable.

    ``mode="levelset"`` thresholds the field; ``mode="direct"`` feeds the
    (clipped) field straight to the forward solver.
    """

    def __init__(
        self,
        forward: ForwardModel,
        basis: KLBasis,
        prior: PriorSpec,
        levelset: LevelSetSpec,
        data: ObservationData,
        mode: str = "levelset",
    ):
        if mode not in ("levelset", "direct"):
            raise ValueError(f"unknown mode {mode!r}")
        if basis.n_nodes != forward.mesh.n_nodes:
            raise ValueError("KL basis and forward mesh do not match")
        if len(data.y) != forward.cfg.n_data:
            raise ValueError(
                f"data has {len(data.y)} entries, configuration expects {forward.cfg.n_data}"
            )
        self.forward = forward
        self.basis = basis
        self.prior = prior
        self.levelset = levelset
        self.data = data
        self.mode = mode
        self.n_evaluations = 0

    @property
    def mesh(self):
        return self.forward.mesh

    @property
    def n_coeffs(self) -> int:
        return self.basis.size

    def field(self, coeffs) -> np.ndarray:
        return synthesize(self.basis, self.prior, coeffs)

    def scatterer(self, coeffs) -> ScattererField:
        phi = self.field(coeffs)
        if self.mode == "direct":
            return apply_direct(phi, self.mesh)
        return apply_level_set(phi, self.levelset, self.mesh)

    def predict(self, coeffs) -> np.ndarray:
        return self.forward(self.scatterer(coeffs))

    def __call__(self, coeffs) -> float:
        self.n_evaluations += 1
        return misfit(self.predict(coeffs), self.data)


@dataclass(frozen=True)
class ChainConfig:
    beta: float = 0.01
    n_steps: int = 2000
    cm_window: int = 500
    seed: int = 0
    thinning: int = 1

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if not 0 <= self.cm_window <= self.n_steps:
            raise ValueError(f"cm_window must lie in [0, n_steps], got {self.cm_window}")
        if self.thinning < 1:
            raise ValueError("thinning must be at least 1")


@dataclass
class ChainState:
    coeffs: np.ndarray
    potential: float
    step: int = 0
    accepted: int = 0


@dataclass(eq=False)
class ChainResult:
    initial: ChainState
    final: ChainState
    samples: np.ndarray
    sample_steps: np.ndarray
    potentials: np.ndarray
    accepted: np.ndarray
    cm_coeffs: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return len(self.potentials)

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean()) if len(self.accepted) else 0.0


def step_rng(seed: int, step: int) -> np.random.Generator:
    return np.random.default_rng([seed, step + 1])


def initial_state(potential: Potential, n_coeffs: int, seed: int) -> ChainState:
    xi = np.random.default_rng([seed, 0]).standard_normal(n_coeffs)
    return ChainState(xi, float(potential(xi)))


def pcn_step(
    state: ChainState,
    rng: np.random.Generator,
    cfg: ChainConfig,
    potential: Potential,
    uniform: float | None = None,
) -> tuple[ChainState, bool]:
    """One pCN move; ``uniform`` overrides the acceptance draw."""
    beta = cfg.beta
    eta = rng.standard_normal(state.coeffs.shape)
    proposal = math.sqrt(1.0 - beta * beta) * state.coeffs + beta * eta
    u = rng.uniform() if uniform is None else uniform
    phi_new = float(potential(proposal))
    if not math.isfinite(phi_new):
        raise FloatingPointError(f"potential is not finite at step {state.step}")
    log_a = state.potential - phi_new
    accept = log_a >= 0 or u <= math.exp(log_a)
    if accept:
        return ChainState(proposal, phi_new, state.step + 1, state.accepted + 1), True
    return ChainState(state.coeffs, state.potential, state.step + 1, state.accepted), False


def write_checkpoint(path, seed: int, state: ChainState) -> None:
    payload = {
        "seed": seed,
        "step": state.step,
        "accepted": state.accepted,
        "potential": state.potential,
        "coeffs": state.coeffs.tolist(),
    }
    Path(path).write_text(json.dumps(payload))


def read_checkpoint(path) -> tuple[int, ChainState]:
    d = json.loads(Path(path).read_text())
    return d["seed"], ChainState(np.asarray(d["coeffs"]), d["potential"], d["step"], d["accepted"])


def run_chain(
    cfg: ChainConfig,
    potential: Potential,
    n_coeffs: int | None = None,
    init: ChainState | None = None,
    checkpoint=None,
    checkpoint_every: int = 0,
    progress: Callable[[ChainState], None] | None = None,
) -> ChainResult:
    """Run ``cfg.n_steps`` pCN steps starting from ``init`` or a prior draw.

    If ``checkpoint`` is a path, the state is written there on interruption
    (and every ``checkpoint_every`` steps when positive).  Passing a state
    read back with :func:`read_checkpoint` as ``init`` continues the run
    exactly; ``cfg.n_steps`` is the total length including earlier steps.
    """
    if init is None:
        if n_coeffs is None:
            raise ValueError("need n_coeffs or an initial state")
        init = initial_state(potential, n_coeffs, cfg.seed)
    state = init
    start = init.step
    total = cfg.n_steps
    n_new = max(total - start, 0)
    potentials = np.empty(n_new)
    accepted = np.zeros(n_new, dtype=bool)
    samples, sample_steps = [], []
    cm_sum = np.zeros_like(init.coeffs, dtype=float)
    cm_count = 0
    cm_from = total - cfg.cm_window
    try:
        for i in range(n_new):
            s = start + i
            state, acc = pcn_step(state, step_rng(cfg.seed, s), cfg, potential)
            potentials[i] = state.potential
            accepted[i] = acc
            if (s + 1) % cfg.thinning == 0:
                samples.append(state.coeffs)
                sample_steps.append(s + 1)
            if s >= cm_from:
                cm_sum += state.coeffs
                cm_count += 1
            if checkpoint is not None and checkpoint_every and (s + 1) % checkpoint_every == 0:
                write_checkpoint(checkpoint, cfg.seed, state)
            if progress is not None:
                progress(state)
    except KeyboardInterrupt:
        if checkpoint is not None:
            write_checkpoint(checkpoint, cfg.seed, state)
            log.warning("interrupted at step %d, checkpoint written to %s", state.step, checkpoint)
        raise
    if samples:
        sample_arr = np.asarray(samples)
    else:
        sample_arr = init.coeffs[None, :].copy()
        sample_steps = [start]
    cm = cm_sum / cm_count if cm_count else None
    return ChainResult(
        initial=init,
        final=state,
        samples=sample_arr,
        sample_steps=np.asarray(sample_steps),
        potentials=potentials,
        accepted=accepted,
        cm_coeffs=cm,
    )


def conditional_mean(result: ChainResult, window: int, posterior: ScatteringPosterior | None = None):
    """Mean of the last ``window`` stored coefficient vectors.

    With a posterior, also returns the nodal field and the thresholded scatterer.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if window > len(result.samples):
        raise ValueError(f"window {window} exceeds the {len(result.samples)} stored samples")
    cm = result.samples[-window:].mean(axis=0)
    if posterior is None:
        return cm
    phi = posterior.field(cm)
    return cm, phi, posterior.scatterer(cm)


def write_trace(result: ChainResult, path) -> None:
    start = result.initial.step
    with open(path, "w") as fh:
        for i, (p, a) in enumerate(zip(result.potentials.tolist(), result.accepted.tolist())):
            fh.write(f"{start + i + 1} {p!r} {int(a)}\n")


def save_samples(result: ChainResult, path) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array("samples v1"), samples=result.samples,
                 steps=result.sample_steps)
