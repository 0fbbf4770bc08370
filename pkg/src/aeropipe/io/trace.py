"""Microphone history text files.

Header lines start with ``#`` (quantity, node name, time step), followed by
``time<TAB>value`` rows printed with 17 significant digits.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CorruptTrace


@dataclass
class MicrophoneTrace:
    node: str
    times: np.ndarray
    values: np.ndarray
    quantity: str = "acouPotentialD1"
    dt: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.dt is None and len(self.times) > 1:
            self.dt = float(self.times[1] - self.times[0])

    def __len__(self):
        return len(self.values)


def _num(x: float) -> str:
    return f"{x:.16e}"


def write_mic_trace(trace: MicrophoneTrace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# quantity: {trace.quantity}",
        f"# node: {trace.node}",
        f"# dt: {_num(trace.dt) if trace.dt is not None else 'none'}",
        "# time\tvalue",
    ]
    lines += [f"{_num(t)}\t{_num(v)}" for t, v in zip(trace.times, trace.values)]
    path.write_text("\n".join(lines) + "\n")


def read_mic_trace(path) -> MicrophoneTrace:
    meta = {}
    times, values = [], []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].partition(":")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise CorruptTrace(f"{path}:{n}: expected 2 tab-separated columns")
        try:
            t, v = float(cols[0]), float(cols[1])
        except ValueError:
            raise CorruptTrace(f"{path}:{n}: non-numeric row") from None
        if times and not t > times[-1]:
            raise CorruptTrace(f"{path}:{n}: time column is not increasing")
        times.append(t)
        values.append(v)
    dt = meta.get("dt")
    return MicrophoneTrace(
        node=meta.get("node", ""),
        times=np.array(times),
        values=np.array(values),
        quantity=meta.get("quantity", "acouPotentialD1"),
        dt=None if dt in (None, "none") else float(dt),
    )
