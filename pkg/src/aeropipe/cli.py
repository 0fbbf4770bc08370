"""Command-line front end: ``aeropipe {pipeline,solve,spectrum,info}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import AeropipeError

EXIT_USAGE = 64
COMMANDS = ("pipeline", "solve", "spectrum", "info")
USAGE = """usage: aeropipe <command> [options]

commands:
  pipeline <plan.xml>                         run a data-processing pipeline
  solve <simulation.xml>                      run a transient acoustic simulation
  spectrum <mic.txt> [--rho0 R] [--segment N] pressure ASD/SPL of a probe history
  info <container>                            print a container manifest summary
"""


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    p = argparse.ArgumentParser(prog="aeropipe", description="hybrid aeroacoustics toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("pipeline", parents=[common], help="run a pipeline plan")
    a.add_argument("plan", type=Path)
    a.add_argument("--lenient", action="store_true", help="warn on unknown XML instead of failing")
    a = sub.add_parser("solve", parents=[common], help="run a simulation plan")
    a.add_argument("plan", type=Path)
    a.add_argument("--lenient", action="store_true", help="warn on unknown XML instead of failing")
    a = sub.add_parser("spectrum", parents=[common], help="spectrum of a probe history")
    a.add_argument("trace", type=Path)
    a.add_argument("--rho0", type=float, default=1.204, help="density for p = rho0 dpsi/dt (default 1.204)")
    a.add_argument("--segment", type=int, default=None, help="Welch segment length (power of two)")
    a.add_argument("--overlap", type=float, default=0.5)
    a.add_argument("--window", default="hann", choices=("hann", "boxcar"))
    a.add_argument("-o", "--output", type=Path, default=None, help="write to a file instead of stdout")
    a = sub.add_parser("info", parents=[common], help="summarize a container")
    a.add_argument("container", type=Path)
    return p


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(2, "no such file", str(path))
    return path


def _pipeline(args) -> int:
    from .config.pipeline import load_pipeline
    from .filters.pipeline import run_pipeline

    plan = load_pipeline(_require(args.plan), strict=not args.lenient)
    for art in run_pipeline(plan):
        if art.kind == "meshOutput":
            print(f"wrote {art.path}")
    return 0


def _solve(args) -> int:
    from .config.simulation import load_simulation
    from .solver.transient import run_simulation

    plan = load_simulation(_require(args.plan), strict=not args.lenient)
    result = run_simulation(plan)
    for path in result.outputs:
        print(f"wrote {path}")
    return 0


def format_spectrum(spec, source: str, rho0: float) -> str:
    lines = [
        f"# source: {source}",
        f"# quantity: acoustic pressure (rho0 = {rho0!r} kg/m^3), ASD in Pa/sqrt(Hz)",
        f"# window: {spec.window}, segment: {spec.segment}, overlap: {spec.overlap!r}, segments: {spec.segments}",
        "# SPL: dB re 2e-05 Pa of the per-bin RMS pressure",
        "# freq_Hz\tASD\tSPL_dB",
    ]
    levels = spec.spl()
    for f, a, s in zip(spec.frequency, spec.values, levels):
        lines.append(f"{f:.6f}\t{a:.10e}\t{s:.6f}")
    return "\n".join(lines) + "\n"


def _spectrum(args) -> int:
    from .io.trace import read_mic_trace
    from .postproc import acoustic_pressure, amplitude_spectral_density

    trace = read_mic_trace(_require(args.trace))
    p = acoustic_pressure(trace, args.rho0)
    spec = amplitude_spectral_density(p.values, trace.dt, args.window, args.segment, args.overlap)
    text = format_spectrum(spec, args.trace.name, args.rho0)
    if args.output:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def container_summary(manifest: dict) -> dict:
    mesh = manifest.get("mesh")
    out = {k: manifest[k] for k in ("format", "version", "dtype", "byte_order", "time_grid", "attributes")}
    if mesh is not None:
        out["mesh"] = {
            "num_nodes": mesh["num_nodes"],
            "num_elements": len(mesh["kinds"]),
            "regions": {k: len(v) for k, v in mesh["regions"].items()},
            "node_sets": {k: len(v) for k, v in mesh["node_sets"].items()},
        }
    else:
        out["mesh"] = None
    out["results"] = manifest["results"]
    return out


def _info(args) -> int:
    from .io.container import read_manifest

    manifest, _ = read_manifest(_require(args.container))
    print(json.dumps(container_summary(manifest), indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        sys.stdout.write(USAGE) if argv else sys.stderr.write(USAGE)
        return 0 if argv else EXIT_USAGE
    if argv[0] not in COMMANDS:
        sys.stderr.write(f"aeropipe: unknown command {argv[0]!r}\n\n" + USAGE)
        return EXIT_USAGE
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"pipeline": _pipeline, "solve": _solve, "spectrum": _spectrum, "info": _info}[args.command]
    try:
        return handler(args)
    except AeropipeError as exc:
        sys.stderr.write(f"aeropipe: error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        where = exc.filename or ""
        sys.stderr.write(f"aeropipe: cannot read {where}: {exc.strerror or exc}\n")
        return 2
