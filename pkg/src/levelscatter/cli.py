"""Command-line entry point: ``levelscatter {mesh,simulate,invert,export,prior-sample}``."""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, load_config, parse_float
from .fem import SolverError, write_triplets
from .forward import (
    ForwardModel,
    ObservationFile,
    ScatterConfig,
    read_observations,
    write_observations,
)
from .inference import (
    ChainConfig,
    ObservationData,
    ScatteringPosterior,
    add_noise,
    read_checkpoint,
    run_chain,
    save_samples,
    write_trace,
)
from .levelset import LevelSetSpec, jaccard_index, read_scatterer, write_scatterer
from .mesh import MeshError, generate_disk_mesh, read_mesh, write_mesh
from .prior import EigenSolverError, PriorSpec, cached_kl_basis, synthesize
from .scatterers import SHAPES, named_scatterer

log = logging.getLogger("levelscatter")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class ValidationError(ValueError):
    pass


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI run configuration")
    g = p.add_argument_group("configuration overrides")
    for section in fields(RunConfig):
        for f in fields(section.default_factory()):
            g.add_argument(
                f"--{f.name.replace('_', '-')}",
                dest=f"override:{section.name}.{f.name}",
                metavar="VALUE",
                help=f"{section.name}.{f.name}",
            )


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {
        k.split(":", 1)[1]: v
        for k, v in vars(args).items()
        if k.startswith("override:") and v is not None
    }
    return cfg.with_overrides(overrides).validate()


def _check_inverse_crime(cfg: RunConfig, allow: bool) -> None:
    if not allow and abs(cfg.mesh.inversion_h - cfg.mesh.h) <= 1e-12 * cfg.mesh.h:
        raise ValidationError(
            "data mesh and inversion mesh coincide; pass --allow-inverse-crime to proceed"
        )


def _scatter_config(cfg: RunConfig, mesh) -> ScatterConfig:
    s = cfg.scatter
    return ScatterConfig(
        mesh, s.wavenumbers(), s.directions(), s.angles(), s.n_trunc or None
    )


def _manifest(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "config_sha256": cfg.digest(),
        "seed": cfg.chain.seed,
        "noise_seed": cfg.problem.noise_seed,
        "versions": {
            "levelscatter": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _true_scatterer(cfg: RunConfig, mesh):
    name = cfg.problem.scatterer
    if name == "file":
        if not cfg.problem.scatterer_file:
            raise ValidationError("problem.scatterer = file needs problem.scatterer_file")
        q = read_scatterer(cfg.problem.scatterer_file, cfg.problem.contrast)
        if q.values.shape != (mesh.n_elements,):
            raise ValidationError("scatterer file does not match the data mesh")
        return q
    if name not in SHAPES:
        raise ValidationError(f"unknown scatterer {name!r}; choose from {sorted(SHAPES)} or file")
    return named_scatterer(name, mesh, cfg.problem.contrast)


def cmd_mesh(args) -> int:
    mesh = generate_disk_mesh(args.radius, args.h, fitted_radii=args.fitted or ())
    write_mesh(mesh, args.output)
    print(f"{mesh.n_nodes} nodes, {mesh.n_elements} elements -> {args.output}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    _check_inverse_crime(cfg, args.allow_inverse_crime)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mesh = generate_disk_mesh(cfg.mesh.radius, cfg.mesh.h)
    q = _true_scatterer(cfg, mesh)
    scfg = _scatter_config(cfg, mesh)
    model = ForwardModel(scfg)
    if args.dump_system:
        write_triplets(model.space.system_matrix(scfg.wavenumbers[0], 1.0 + q.values), args.dump_system)
    t0 = time.perf_counter()
    clean = model(q)
    log.info("forward map on %d nodes took %.2fs", mesh.n_nodes, time.perf_counter() - t0)
    y = add_noise(clean, cfg.problem.gamma, np.random.default_rng(cfg.problem.noise_seed))
    write_observations(
        out / "obs.txt",
        ObservationFile(scfg.wavenumbers, scfg.directions, scfg.angles, y,
                        cfg.problem.gamma, cfg.problem.noise_seed),
    )
    write_mesh(mesh, out / "mesh_data.txt")
    write_scatterer(q, out / "true_scatterer.txt")
    (out / "config.ini").write_text(cfg.emit())
    _write_json(out / "manifest.json", _manifest(cfg, "simulate"))
    print(f"wrote {scfg.n_data} observations to {out / 'obs.txt'}")
    return EXIT_OK


def _validate_data(obs: ObservationFile, scfg: ScatterConfig) -> None:
    if obs.shape != scfg.shape:
        raise ValidationError(f"data file has (M, J, N) = {obs.shape}, configuration {scfg.shape}")
    for name, a, b in [
        ("wavenumbers", obs.wavenumbers, scfg.wavenumbers),
        ("directions", obs.directions, scfg.directions),
        ("angles", obs.angles, scfg.angles),
    ]:
        if not np.allclose(a, b, rtol=1e-12, atol=1e-12):
            raise ValidationError(f"data file {name} differ from the configuration")


def cmd_invert(args) -> int:
    cfg = _config_from_args(args)
    _check_inverse_crime(cfg, args.allow_inverse_crime)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    obs = read_observations(args.data)
    mesh = generate_disk_mesh(cfg.mesh.radius, cfg.mesh.inversion_h)
    scfg = _scatter_config(cfg, mesh)
    _validate_data(obs, scfg)
    gamma = cfg.problem.gamma if cfg.problem.gamma > 0 else obs.gamma
    if not gamma > 0:
        raise ValidationError("likelihood needs a positive noise level (--gamma)")
    p = cfg.prior
    if p.n_kl > mesh.n_nodes:
        raise ValidationError(f"n_kl={p.n_kl} exceeds the {mesh.n_nodes} inversion-mesh nodes")

    t0 = time.perf_counter()
    cache = args.cache_dir if args.cache_dir is not None else out
    basis = cached_kl_basis(mesh, p.n_kl, cache)
    log.info("KL basis ready after %.2fs", time.perf_counter() - t0)
    prior = PriorSpec(p.alpha, p.tau, p.sigma2, p.n_kl)
    posterior = ScatteringPosterior(
        ForwardModel(scfg), basis, prior, LevelSetSpec.two_phase(cfg.problem.contrast),
        ObservationData(obs.values, gamma), mode=cfg.problem.mode,
    )
    c = cfg.chain
    chain_cfg = ChainConfig(c.beta, c.n_steps, c.cm_window, c.seed, c.thinning)
    init = None
    ckpt = out / "checkpoint.json"
    if args.resume:
        seed, init = read_checkpoint(ckpt)
        if seed != c.seed:
            raise ValidationError(f"checkpoint seed {seed} differs from configuration seed {c.seed}")

    def progress(state):
        if state.step % 500 == 0:
            log.info("step %d  potential %.6g  accepted %d", state.step, state.potential, state.accepted)

    t0 = time.perf_counter()
    result = run_chain(chain_cfg, posterior, basis.size, init=init, checkpoint=ckpt,
                       checkpoint_every=args.checkpoint_every, progress=progress)
    log.info("chain finished in %.1fs", time.perf_counter() - t0)

    write_mesh(mesh, out / "mesh_inv.txt")
    write_trace(result, out / "trace.txt")
    save_samples(result, out / "samples.npz")
    cm = result.cm_coeffs if result.cm_coeffs is not None else result.final.coeffs
    phi = posterior.field(cm)
    q_cm = posterior.scatterer(cm)
    with open(out / "cm_levelset.txt", "w") as fh:
        for i, v in enumerate(phi.tolist()):
            fh.write(f"{i} {v!r}\n")
    write_scatterer(q_cm, out / "cm_scatterer.txt")

    pots = result.potentials
    n10 = max(len(pots) // 10, 1)
    metrics = {
        "n_steps": int(result.final.step),
        "acceptance_rate": result.acceptance_rate,
        "initial_potential": result.initial.potential,
        "final_potential": result.final.potential,
        "median_potential_first_10pct": float(np.median(pots[:n10])) if len(pots) else None,
        "median_potential_last_10pct": float(np.median(pots[-n10:])) if len(pots) else None,
        "cm_window": c.cm_window,
        "cm_potential": posterior(cm),
    }
    if cfg.problem.scatterer in SHAPES:
        truth = named_scatterer(cfg.problem.scatterer, mesh, cfg.problem.contrast)
        metrics["jaccard_cm_vs_truth"] = jaccard_index(q_cm, truth, mesh)
    _write_json(out / "metrics.json", metrics)
    (out / "config.ini").write_text(cfg.emit())
    _write_json(out / "manifest.json", _manifest(cfg, "invert"))
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return EXIT_OK


def _with_ext(path: Path, ext: str) -> Path:
    # names such as "tau6.667" contain dots, so append rather than replace
    return path.parent / f"{path.name}.{ext}"


def _write_node_table(path: Path, mesh, values, fmt: str) -> None:
    if fmt == "csv":
        rows = ["x,y,value"] + [f"{x!r},{y!r},{v!r}" for (x, y), v in zip(mesh.nodes.tolist(), values)]
        _with_ext(path, "csv").write_text("\n".join(rows) + "\n")
    else:
        _write_vtk(_with_ext(path, "vtk"), mesh, point_data={"value": values})


def _write_cell_table(path: Path, mesh, values, fmt: str) -> None:
    if fmt == "csv":
        rows = ["x_c,y_c,q"] + [
            f"{x!r},{y!r},{v!r}" for (x, y), v in zip(mesh.centroids.tolist(), values)
        ]
        _with_ext(path, "csv").write_text("\n".join(rows) + "\n")
    else:
        _write_vtk(_with_ext(path, "vtk"), mesh, cell_data={"q": values})


def _write_vtk(path: Path, mesh, point_data=None, cell_data=None) -> None:
    lines = ["# vtk DataFile Version 3.0", "levelscatter export", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_nodes} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.nodes.tolist()]
    lines.append(f"CELLS {mesh.n_elements} {4 * mesh.n_elements}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.elements.tolist()]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += ["5"] * mesh.n_elements
    for kind, data, n in [("POINT_DATA", point_data, mesh.n_nodes), ("CELL_DATA", cell_data, mesh.n_elements)]:
        if data:
            lines.append(f"{kind} {n}")
            for name, vals in data.items():
                lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                lines += [repr(float(v)) for v in vals]
    path.write_text("\n".join(lines) + "\n")


def _read_indexed(path: Path, n: int) -> list[float]:
    data = np.loadtxt(path, ndmin=2)
    if len(data) != n:
        raise ValidationError(f"{path} has {len(data)} rows, expected {n}")
    return data[np.argsort(data[:, 0]), 1].tolist()


def cmd_export(args) -> int:
    run = Path(args.run)
    out = Path(args.out) if args.out else run / "export"
    out.mkdir(parents=True, exist_ok=True)
    mesh = read_mesh(run / "mesh_inv.txt")
    phi = _read_indexed(run / "cm_levelset.txt", mesh.n_nodes)
    q = _read_indexed(run / "cm_scatterer.txt", mesh.n_elements)
    _write_node_table(out / "cm_levelset", mesh, phi, args.format)
    _write_cell_table(out / "cm_scatterer", mesh, q, args.format)
    print(f"exported CM fields to {out}")
    return EXIT_OK


def _parse_list(text: str) -> list[float]:
    vals = []
    for item in text.split(","):
        item = item.strip()
        vals.append(parse_float(item))
    return vals


def cmd_prior_sample(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mesh = generate_disk_mesh(cfg.mesh.radius, cfg.mesh.inversion_h)
    basis = cached_kl_basis(mesh, cfg.prior.n_kl, args.cache_dir)
    alphas = _parse_list(args.alphas) if args.alphas else [cfg.prior.alpha]
    taus = _parse_list(args.taus) if args.taus else [cfg.prior.tau]
    # one coefficient draw shared by every (alpha, tau) for side-by-side plots
    xi = np.random.default_rng(cfg.chain.seed).standard_normal(basis.size)
    for a in alphas:
        for t in taus:
            spec = PriorSpec(a, t, cfg.prior.sigma2, cfg.prior.n_kl)
            phi = synthesize(basis, spec, xi)
            name = f"prior_alpha{a:g}_tau{t:.4g}"
            _write_node_table(out / name, mesh, phi.tolist(), args.format)
            print(f"{name}: min {phi.min():.3f} max {phi.max():.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levelscatter", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate a disk mesh file")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--fitted", type=float, action="append", help="radius to resolve exactly")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("simulate", help="synthetic data on the fine mesh")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-system", type=Path, help="write the first system matrix as triplets")
    p.add_argument("--allow-inverse-crime", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("invert", help="pCN sampling on the inversion mesh")
    _add_config_flags(p)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", required=True)
    p.add_argument("--cache-dir", type=Path)
    p.add_argument("--resume", action="store_true", help="continue from OUT/checkpoint.json")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--allow-inverse-crime", action="store_true")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("export", help="tables of CM fields for plotting")
    p.add_argument("--run", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "vtk"], default="csv")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("prior-sample", help="prior draws on the inversion mesh")
    _add_config_flags(p)
    p.add_argument("--alphas", help="comma-separated, e.g. 2,3,4")
    p.add_argument("--taus", help="comma-separated, e.g. 10,20/3,5")
    p.add_argument("--out", required=True)
    p.add_argument("--cache-dir", type=Path)
    p.add_argument("--format", choices=["csv", "vtk"], default="csv")
    p.set_defaults(func=cmd_prior_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
    )
    try:
        return args.func(args)
    except (SolverError, EigenSolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValidationError, MeshError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
