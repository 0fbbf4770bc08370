"""Compare a duct split by a Nitsche interface with the unsplit duct.

    python scripts/nitsche_split.py --factor 50 --right-ny 3
"""
import argparse

import numpy as np

from aeropipe.solver import solve_transient
from aeropipe.synthetic import AIR, DuctSpec, duct_mesh, duct_plan, gaussian_pulse, unit_source

PROBES = {"near": [0.25, 0.025, 0.025], "far": [0.75, 0.025, 0.025]}


def run(spec, factor=None, steps=360, dt=1e-5):
    mesh = duct_mesh(spec)
    plan = duct_plan(mesh, steps, dt, gaussian_pulse(8e-4, 2e-4), probes=PROBES, nitsche_factor=factor)
    return solve_transient(plan, mesh, unit_source(mesh), {"air": AIR})


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--factor", type=float, default=50.0)
    ap.add_argument("--split", type=float, default=0.5)
    ap.add_argument("--right-ny", type=int, default=None, help="transverse cells of the right block")
    args = ap.parse_args()

    ref = run(DuctSpec())
    res = run(DuctSpec(split_at=args.split, right_ny=args.right_ny), args.factor)
    K = res.matrices.K
    print(f"constant-field residual |K 1|/|K| = {np.abs(K @ np.ones(K.shape[0])).max() / abs(K).max():.2e}")
    for name in PROBES:
        a, b = res.traces[name].values, ref.traces[name].values
        print(f"{name:5s} relative L2 difference {np.linalg.norm(a - b) / np.linalg.norm(b):.3e}")


if __name__ == "__main__":
    main()
