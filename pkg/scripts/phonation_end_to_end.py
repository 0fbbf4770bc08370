"""Build a synthetic phonation case and run the full chain through the CLI.

Writes the CFD export, acoustic mesh, material file and the three plans into
``--out``, runs interpolation, time derivative, propagation and spectrum, and
reports the spectral peak at the microphone.

    python scripts/phonation_end_to_end.py --out /tmp/phonation --frequency 1562.5
"""
import argparse
import os
import time
from pathlib import Path

import numpy as np

from aeropipe.cli import main as cli
from aeropipe.synthetic import write_phonation_case

TRACE = "history/propagation-acouPotentialD1-mic.txt"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("phonation_case"))
    ap.add_argument("--frequency", type=float, default=1562.5)
    ap.add_argument("--steps", type=int, default=675)
    ap.add_argument("--segment", type=int, default=None)
    args = ap.parse_args()

    write_phonation_case(args.out, args.frequency, args.steps)
    os.chdir(args.out)
    steps = [
        ["pipeline", "interpolatePressure.xml"],
        ["pipeline", "calc_dpdt.xml"],
        ["solve", "propagation.xml"],
        ["spectrum", TRACE, "-o", "spectrum.txt"] + (["--segment", str(args.segment)] if args.segment else []),
    ]
    for argv in steps:
        t = time.perf_counter()
        code = cli(argv)
        print(f"aeropipe {' '.join(argv)} -> exit {code} ({time.perf_counter() - t:.1f} s)")
        if code:
            raise SystemExit(code)
    rows = np.loadtxt("spectrum.txt", comments="#")
    k = 1 + int(np.argmax(rows[1:, 1]))
    print(f"peak {rows[k, 0]:.1f} Hz, {rows[k, 2]:.1f} dB (source {args.frequency} Hz, bin {rows[1, 0]:.1f} Hz)")


if __name__ == "__main__":
    main()
