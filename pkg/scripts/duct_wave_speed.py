"""Measure the plane-wave speed in a hex duct from two probe arrival times.

    python scripts/duct_wave_speed.py --nx 200 --alpha -0.3
"""
import argparse

import numpy as np

from aeropipe.solver import solve_transient
from aeropipe.synthetic import AIR, DuctSpec, duct_mesh, duct_plan, gaussian_pulse, unit_source


def peak_time(times, values):
    k = int(np.argmax(values))
    y0, y1, y2 = values[k - 1 : k + 2]
    return times[k] + 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2) * (times[1] - times[0])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=200)
    ap.add_argument("--dt", type=float, default=1e-5)
    ap.add_argument("--steps", type=int, default=360)
    ap.add_argument("--alpha", type=float, default=-0.3)
    ap.add_argument("--tau", type=float, default=2e-4)
    ap.add_argument("--t0", type=float, default=8e-4)
    args = ap.parse_args()

    mesh = duct_mesh(DuctSpec(nx=args.nx))
    probes = {"a": [0.25, 0.025, 0.025], "b": [0.75, 0.025, 0.025]}
    plan = duct_plan(mesh, args.steps, args.dt, gaussian_pulse(args.t0, args.tau), alpha=args.alpha, probes=probes)
    res = solve_transient(plan, mesh, unit_source(mesh), {"air": AIR})
    ta = peak_time(res.times, res.traces["a"].values)
    tb = peak_time(res.times, res.traces["b"].values)
    c = 0.5 / (tb - ta)
    print(f"arrivals {ta * 1e3:.4f} ms, {tb * 1e3:.4f} ms")
    print(f"c = {c:.3f} m/s  (nominal {AIR.speed_of_sound}, error {100 * (c / AIR.speed_of_sound - 1):+.3f} %)")


if __name__ == "__main__":
    main()
