"""Run configuration: nested dataclasses with an INI-style text format."""
from __future__ import annotations

import configparser
import hashlib
import io
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .forward import direction_vectors, observation_angles, wavenumber_grid


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MeshSection:
    radius: float = 1.0
    h: float = 2.45e-2
    h_inv: float | None = None  # defaults to 2 * h

    @property
    def inversion_h(self) -> float:
        return 2.0 * self.h if self.h_inv is None else self.h_inv


@dataclass(frozen=True)
class ScatterSection:
    k_min: float = 0.5 * math.pi
    k_max: float = 2.5 * math.pi
    n_wavenumbers: int = 6
    n_directions: int = 5
    n_obs: int = 32
    n_trunc: int = 0  # 0 selects the default per wavenumber

    def wavenumbers(self) -> np.ndarray:
        return wavenumber_grid(self.k_min, self.k_max, self.n_wavenumbers)

    def directions(self) -> np.ndarray:
        return direction_vectors(self.n_directions)

    def angles(self) -> np.ndarray:
        return observation_angles(self.n_obs)


@dataclass(frozen=True)
class PriorSection:
    alpha: float = 3.0
    tau: float = 10.0
    sigma2: float = 1.0
    n_kl: int = 300


@dataclass(frozen=True)
class ChainSection:
    beta: float = 0.007
    n_steps: int = 10_000
    cm_window: int = 2000
    seed: int = 0
    thinning: int = 5


@dataclass(frozen=True)
class ProblemSection:
    scatterer: str = "love"
    contrast: float = 1.0
    scatterer_file: str = ""
    gamma: float = 0.005
    noise_seed: int = 1
    mode: str = "levelset"


@dataclass(frozen=True)
class RunConfig:
    mesh: MeshSection = field(default_factory=MeshSection)
    scatter: ScatterSection = field(default_factory=ScatterSection)
    prior: PriorSection = field(default_factory=PriorSection)
    chain: ChainSection = field(default_factory=ChainSection)
    problem: ProblemSection = field(default_factory=ProblemSection)

    def validate(self) -> "RunConfig":
        m, s, p, c, q = self.mesh, self.scatter, self.prior, self.chain, self.problem
        checks = [
            (m.radius > 0, "mesh.radius must be positive"),
            (0 < m.h < m.radius, "mesh.h must lie in (0, radius)"),
            (0 < m.inversion_h < m.radius, "mesh.h_inv must lie in (0, radius)"),
            (0 < s.k_min <= s.k_max, "scatter.k_min must be positive and <= k_max"),
            (s.n_wavenumbers >= 1 and s.n_directions >= 1 and s.n_obs >= 1,
             "scatter counts must be at least 1"),
            (s.n_trunc >= 0, "scatter.n_trunc must be non-negative"),
            (p.alpha > 1, "prior.alpha must exceed 1"),
            (p.tau > 0 and p.sigma2 > 0, "prior.tau and prior.sigma2 must be positive"),
            (p.n_kl >= 1, "prior.n_kl must be at least 1"),
            (0 < c.beta <= 1, "chain.beta must lie in (0, 1]"),
            (c.n_steps >= 0 and 0 <= c.cm_window <= c.n_steps,
             "chain.cm_window must lie in [0, n_steps]"),
            (c.thinning >= 1, "chain.thinning must be at least 1"),
            (q.gamma >= 0, "problem.gamma must be non-negative"),
            (q.contrast > 0, "problem.contrast must be positive"),
            (q.mode in ("levelset", "direct"), "problem.mode must be levelset or direct"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def emit(self) -> str:
        cp = configparser.ConfigParser()
        for f in fields(self):
            section = getattr(self, f.name)
            cp[f.name] = {k: _fmt(v) for k, v in asdict(section).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.emit().encode()).hexdigest()

    def with_overrides(self, overrides: dict[str, str]) -> "RunConfig":
        """Apply ``{"section.key": "text"}`` overrides."""
        out = self
        for dotted, text in overrides.items():
            try:
                sec_name, key = dotted.split(".", 1)
                section = getattr(out, sec_name)
            except (ValueError, AttributeError):
                raise ConfigError(f"unknown setting {dotted!r}") from None
            types = {f.name: f.type for f in fields(section)}
            if key not in types:
                raise ConfigError(f"unknown setting {dotted!r}")
            section = replace(section, **{key: _parse(text, types[key], dotted)})
            out = replace(out, **{sec_name: section})
        return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(text: str, typ, name: str):
    text = text.strip()
    t = str(typ)
    try:
        if t.startswith("float"):
            if text == "" and "None" in t:
                return None
            return parse_float(text)
        if t == "int":
            return int(text)
        return text
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r} as {t}") from None


def parse_float(text: str) -> float:
    """Float or fraction literal, optionally a multiple of pi (``0.5pi``, ``20/3``, ``pi``)."""
    s = text.strip().lower().replace(" ", "")
    if s.endswith("pi"):
        head = s[:-2].rstrip("*")
        return (_number(head) if head else 1.0) * math.pi
    return _number(s)


def _number(s: str) -> float:
    return float(Fraction(s)) if "/" in s else float(s)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    overrides = {}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")
        for key, val in cp[sec].items():
            overrides[f"{sec}.{key}"] = val
    return cfg.with_overrides(overrides)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
