"""Forward-solver convergence against the concentric-disk series, plus a DtN truncation sweep.

    python3 scripts/convergence_study.py [--levels 4] [--k 3.14159]
"""
import argparse
import math

import numpy as np

from levelscatter.forward import (
    IncidentWave,
    analytic_disk_scattering,
    observation_angles,
    observe_boundary,
    solve_scattered,
)
from levelscatter.mesh import boundary_trace, generate_disk_mesh
from levelscatter.scatterers import disk_region, rasterize


def observations(h, k, n_trunc=None, fitted=(0.5,)):
    mesh = generate_disk_mesh(1.0, h, fitted_radii=fitted)
    u = solve_scattered(mesh, rasterize(mesh, disk_region, 1.0), IncidentWave(k), n_trunc=n_trunc)
    return mesh, observe_boundary(u, boundary_trace(mesh), observation_angles(32))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h0", type=float, default=0.098)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--k", type=float, default=math.pi)
    args = ap.parse_args()

    ref = analytic_disk_scattering(0.5, 1.0, args.k, observation_angles(32))
    print(f"{'h':>10} {'nodes':>8} {'fitted err':>12} {'order':>6} {'plain err':>12} {'order':>6}")
    prev = None
    for i in range(args.levels):
        h = args.h0 / 2**i
        mesh, fit = observations(h, args.k)
        _, plain = observations(h, args.k, fitted=())
        errs = [np.linalg.norm(o - ref) / np.linalg.norm(ref) for o in (fit, plain)]
        orders = ["" if prev is None else f"{math.log2(p / e):6.2f}" for p, e in zip(prev or errs, errs)]
        print(f"{h:10.5f} {mesh.n_nodes:8d} {errs[0]:12.3e} {orders[0]:>6} {errs[1]:12.3e} {orders[1]:>6}")
        prev = errs

    k = 2.5 * math.pi
    print("\nDtN truncation sweep at k = 2.5 pi (relative change against N = ceil(kR) + 20)")
    for h in (0.049, 0.0245, 0.01225):
        runs = {n: observations(h, k, n_trunc=math.ceil(k) + n)[1] for n in (5, 10, 20)}
        ch = [np.linalg.norm(runs[n] - runs[20]) / np.linalg.norm(runs[20]) for n in (5, 10)]
        print(f"h={h:<8} +5: {ch[0]:.2e}   +10: {ch[1]:.2e}")


if __name__ == "__main__":
    main()
