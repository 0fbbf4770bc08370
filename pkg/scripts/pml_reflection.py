"""Reflection coefficient of the absorbing layer at the end of a duct.

Sweeps the damping factor and prints the reflected/incident amplitude ratio
seen by a probe ahead of the layer.

    python scripts/pml_reflection.py --factors 0 0.5 1 2 --layer-cells 8
"""
import argparse

import numpy as np

from aeropipe.mesh import AxisBox
from aeropipe.solver import solve_transient
from aeropipe.synthetic import AIR, DuctSpec, duct_mesh, duct_plan, gaussian_pulse, unit_source


def reflection(damp_factor, layer_cells, tau, t0=8e-4, dt=1e-5, steps=540):
    mesh = duct_mesh(DuctSpec(layer_cells=layer_cells))
    box = AxisBox([0, 0, 0], [1.0, 0.05, 0.05])
    plan = duct_plan(mesh, steps, dt, gaussian_pulse(t0, tau), layer_box=box, damp_factor=damp_factor,
                     probes={"p": [0.75, 0.025, 0.025]})
    res = solve_transient(plan, mesh, unit_source(mesh), {"air": AIR})
    v = res.traces["p"].values
    split = t0 + 1.0 / AIR.speed_of_sound
    return np.abs(v[res.times >= split]).max() / np.abs(v[res.times < split]).max()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--factors", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    ap.add_argument("--layer-cells", type=int, default=8)
    ap.add_argument("--tau", type=float, default=2e-4)
    args = ap.parse_args()
    print("dampFactor  R")
    for f in args.factors:
        print(f"{f:10g}  {reflection(f, args.layer_cells, args.tau):.4%}")


if __name__ == "__main__":
    main()
