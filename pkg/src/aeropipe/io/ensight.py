"""ASCII Ensight-Gold case, geometry and per-element scalar files.

Only what a static CFD export needs is supported: one geometry file, parts
made of ``tetra4``/``hexa8`` blocks, and transient ``scalar per element``
variables.  Writers are provided for fixtures and synthetic datasets.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (
    CorruptVariableFile,
    MalformedCase,
    UnsupportedElement,
    UnsupportedIdMode,
    UnsupportedVariable,
    ValidationError,
)
from ..mesh import HEX8, TET4, Mesh

ELEMENT_KEYWORDS = {"tetra4": TET4, "hexa8": HEX8}
_KNOWN_UNSUPPORTED = {
    "point", "bar2", "bar3", "tria3", "tria6", "quad4", "quad8", "tetra10",
    "pyramid5", "pyramid13", "penta6", "penta15", "hexa20", "nsided", "nfaced",
}
_VARIABLE_KINDS = (
    "constant per case", "scalar per node", "vector per node", "tensor symm per node",
    "scalar per element", "vector per element", "tensor symm per element",
    "complex scalar per node", "complex scalar per element",
)


@dataclass
class TimeSet:
    filename_numbers: list[int]
    time_values: list[float]


@dataclass
class VariableEntry:
    name: str
    kind: str
    pattern: Path
    time_set: int | None = None


@dataclass
class CaseDescriptor:
    path: Path
    geometry: Path
    variables: dict[str, VariableEntry]
    time_sets: dict[int, TimeSet]
    _layout: list | None = field(default=None, repr=False)

    def time_set_for(self, name: str) -> TimeSet:
        var = self.variables[name]
        if var.time_set is not None:
            return self.time_sets[var.time_set]
        if len(self.time_sets) == 1:
            return next(iter(self.time_sets.values()))
        raise MalformedCase(f"variable {name!r} has no resolvable time set")

    @property
    def step_numbers(self) -> list[int]:
        return next(iter(self.time_sets.values())).filename_numbers if self.time_sets else []

    @property
    def time_values(self) -> list[float]:
        return next(iter(self.time_sets.values())).time_values if self.time_sets else []

    def variable_file(self, name: str, step: int) -> Path:
        var = self.variables[name]
        if "*" not in var.pattern.name:
            return var.pattern
        ts = self.time_set_for(name)
        if not 0 <= step < len(ts.filename_numbers):
            raise ValidationError(f"step {step} outside time set of {len(ts.filename_numbers)} steps")
        return expand_wildcard(var.pattern, ts.filename_numbers[step])


def expand_wildcard(pattern: Path, number: int) -> Path:
    def sub(m):
        return str(number).zfill(len(m.group(0)))

    return pattern.with_name(re.sub(r"\*+", sub, pattern.name, count=1))


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_case(path) -> CaseDescriptor:
    path = Path(path)
    base = path.parent
    lines = path.read_text().splitlines()
    section = None
    geometry = None
    variables: dict[str, VariableEntry] = {}
    time_sets: dict[int, TimeSet] = {}
    ts_id = None
    collecting = None
    pending: dict[int, dict] = {}

    for raw in lines:
        line = _strip(raw)
        if not line:
            continue
        upper = line.upper()
        if upper in ("FORMAT", "GEOMETRY", "VARIABLE", "TIME", "FILE"):
            section = upper
            collecting = None
            continue
        if section == "GEOMETRY":
            key, _, rest = line.partition(":")
            if key.strip() == "model":
                toks = rest.split()
                toks = [t for t in toks if t != "change_coords_only"]
                while len(toks) > 1 and toks[0].isdigit():
                    toks = toks[1:]
                if not toks:
                    raise MalformedCase("empty model line")
                geometry = base / toks[0]
        elif section == "VARIABLE":
            key, _, rest = line.partition(":")
            kind = " ".join(key.split())
            if kind not in _VARIABLE_KINDS:
                raise MalformedCase(f"unrecognised variable line {raw!r}")
            if kind != "scalar per element":
                raise UnsupportedVariable(f"variable kind {kind!r} is not supported")
            toks = rest.split()
            ts = None
            if len(toks) >= 3 and toks[0].isdigit():
                ts = int(toks[0])
                toks = toks[1:]
                if len(toks) >= 3 and toks[0].isdigit():
                    toks = toks[1:]  # file set
            if len(toks) < 2:
                raise MalformedCase(f"variable line needs a description and a file: {raw!r}")
            name, fname = toks[0], toks[1]
            variables[name] = VariableEntry(name, kind, base / fname, ts)
        elif section == "TIME":
            key, sep, rest = line.partition(":")
            key = " ".join(key.split()).lower()
            if sep and key == "time set":
                ts_id = int(rest.split()[0])
                pending[ts_id] = {"numbers": [], "values": []}
                collecting = None
            elif sep and key == "number of steps":
                pending.setdefault(ts_id, {"numbers": [], "values": []})["n"] = int(rest.split()[0])
                collecting = None
            elif sep and key == "filename start number":
                pending[ts_id]["start"] = int(rest.split()[0])
                collecting = None
            elif sep and key == "filename increment":
                pending[ts_id]["inc"] = int(rest.split()[0])
                collecting = None
            elif sep and key == "filename numbers":
                collecting = "numbers"
                pending[ts_id]["numbers"] += [int(t) for t in rest.split()]
            elif sep and key == "time values":
                collecting = "values"
                pending[ts_id]["values"] += [float(t) for t in rest.split()]
            elif collecting is not None:
                conv = int if collecting == "numbers" else float
                pending[ts_id][collecting] += [conv(t) for t in line.split()]
            else:
                raise MalformedCase(f"unrecognised TIME line {raw!r}")

    if geometry is None:
        raise MalformedCase(f"{path}: missing GEOMETRY section")
    for tid, p in pending.items():
        n = p.get("n", len(p["values"]))
        numbers = p["numbers"]
        if not numbers:
            start, inc = p.get("start", 0), p.get("inc", 1)
            numbers = [start + i * inc for i in range(n)]
        if len(p["values"]) != n or len(numbers) != n:
            raise MalformedCase(f"time set {tid}: expected {n} steps")
        time_sets[tid] = TimeSet(numbers, p["values"])
    for var in variables.values():
        if "*" in var.pattern.name:
            if not time_sets:
                raise MalformedCase(f"transient variable {var.name!r} but no TIME section")
            if var.time_set is not None and var.time_set not in time_sets:
                raise MalformedCase(f"variable {var.name!r} references missing time set {var.time_set}")
    return CaseDescriptor(path, geometry, variables, time_sets)


class _Lines:
    def __init__(self, path):
        self.path = path
        self.lines = Path(path).read_text().splitlines()
        self.i = 0

    def next(self) -> str:
        while self.i < len(self.lines):
            line = self.lines[self.i]
            self.i += 1
            if line.strip():
                return line
        raise EOFError

    def peek(self) -> str | None:
        j = self.i
        while j < len(self.lines):
            if self.lines[j].strip():
                return self.lines[j]
            j += 1
        return None

    def floats(self, n: int) -> np.ndarray:
        out = []
        while len(out) < n:
            out.extend(float(t) for t in self.next().split())
        if len(out) != n:
            raise ValueError("value count does not match block size")
        return np.array(out)

    def ints(self, n: int) -> np.ndarray:
        out = []
        while len(out) < n:
            out.extend(int(t) for t in self.next().split())
        if len(out) != n:
            raise ValueError("integer count does not match block size")
        return np.array(out, dtype=np.int64)


def _id_mode(line: str, what: str) -> str:
    toks = line.split()
    if len(toks) < 3 or toks[0] != what or toks[1] != "id":
        raise MalformedCase(f"expected '{what} id <mode>', got {line!r}")
    mode = toks[2].lower()
    if mode not in ("assign", "given"):
        raise UnsupportedIdMode(f"{what} id mode {mode!r} is not supported")
    return mode


def _read_geometry_layout(path):
    """Parse the geometry file into parts: (number, description, coords, blocks)."""
    f = _Lines(path)
    try:
        f.next()
        f.next()
        node_mode = _id_mode(f.next(), "node")
        elem_mode = _id_mode(f.next(), "element")
        parts = []
        line = f.next()
        if line.strip().lower() == "extents":
            f.floats(6)
            line = f.next()
        while True:
            if line.strip().lower() != "part":
                raise MalformedCase(f"{path}: expected 'part', got {line!r}")
            number = int(f.next().split()[0])
            desc = f.next().strip()
            if f.next().strip().lower() != "coordinates":
                raise MalformedCase(f"{path}: part {number} lacks coordinates")
            nn = int(f.next().split()[0])
            if node_mode == "given":
                f.ints(nn)
            coords = np.column_stack([f.floats(nn), f.floats(nn), f.floats(nn)])
            blocks = []
            while True:
                nxt = f.peek()
                if nxt is None or nxt.strip().lower() == "part":
                    break
                kw = f.next().strip().lower()
                if kw not in ELEMENT_KEYWORDS:
                    raise UnsupportedElement(f"element block {kw!r} is not supported")
                ne = int(f.next().split()[0])
                if elem_mode == "given":
                    f.ints(ne)
                width = 4 if kw == "tetra4" else 8
                conn = f.ints(ne * width).reshape(ne, width) - 1
                if conn.size and (conn.min() < 0 or conn.max() >= nn):
                    raise MalformedCase(f"{path}: part {number} connectivity out of range")
                blocks.append((kw, conn))
            parts.append((number, desc, coords, blocks))
            if f.peek() is None:
                break
            line = f.next()
    except EOFError:
        raise MalformedCase(f"{path}: unexpected end of file") from None
    except ValueError as exc:
        raise MalformedCase(f"{path}: {exc}") from None
    return parts


def read_geometry(path) -> Mesh:
    """One Mesh; every part becomes a region named by its description line."""
    parts = _read_geometry_layout(path)
    nodes, elements, regions = [], [], {}
    offset = 0
    for number, desc, coords, blocks in parts:
        name = desc if desc not in regions else f"{desc}_{number}"
        ids = []
        for kw, conn in blocks:
            for row in conn:
                ids.append(len(elements))
                elements.append((ELEMENT_KEYWORDS[kw], tuple((row + offset).tolist())))
        regions[name] = ids
        nodes.append(coords)
        offset += len(coords)
    return Mesh(np.vstack(nodes) if nodes else np.zeros((0, 3)), elements, regions)


def _layout(desc: CaseDescriptor):
    if desc._layout is None:
        parts = _read_geometry_layout(desc.geometry)
        layout, offset = [], 0
        for number, _, _, blocks in parts:
            sizes = [(kw, len(conn)) for kw, conn in blocks]
            layout.append((number, offset, sizes))
            offset += sum(n for _, n in sizes)
        desc._layout = (layout, offset)
    return desc._layout


def read_scalar_variable(desc: CaseDescriptor, quantity: str, step: int) -> np.ndarray:
    """Per-element values for time-set index ``step``, in read_geometry order."""
    if quantity not in desc.variables:
        raise ValidationError(f"case has no variable {quantity!r}")
    path = desc.variable_file(quantity, step)
    layout, total = _layout(desc)
    by_number = {number: (offset, sizes) for number, offset, sizes in layout}
    out = np.full(total, np.nan)
    seen = set()
    f = _Lines(path)
    try:
        f.next()
        while f.peek() is not None:
            if f.next().strip().lower() != "part":
                raise CorruptVariableFile(f"{path}: expected 'part'")
            number = int(f.next().split()[0])
            if number not in by_number:
                raise CorruptVariableFile(f"{path}: part {number} is not in the geometry")
            offset, sizes = by_number[number]
            seen.add(number)
            blocks = {}
            while f.peek() is not None and f.peek().strip().lower() != "part":
                kw = f.next().strip().lower()
                expected = dict(sizes).get(kw)
                if expected is None:
                    raise CorruptVariableFile(f"{path}: part {number} has no {kw!r} block")
                vals = []
                while f.peek() is not None and f.peek().strip().lower() not in ("part", *ELEMENT_KEYWORDS):
                    vals.extend(float(t) for t in f.next().split())
                    if len(vals) > expected:
                        break
                if len(vals) != expected:
                    raise CorruptVariableFile(
                        f"{path}: part {number} {kw}: {len(vals)} values, mesh has {expected}"
                    )
                blocks[kw] = vals
            pos = offset
            for kw, n in sizes:
                if kw not in blocks:
                    raise CorruptVariableFile(f"{path}: part {number} lacks block {kw!r}")
                out[pos : pos + n] = blocks[kw]
                pos += n
    except (EOFError, ValueError) as exc:
        raise CorruptVariableFile(f"{path}: {exc}") from None
    missing = set(by_number) - seen
    if missing:
        raise CorruptVariableFile(f"{path}: parts {sorted(missing)} missing")
    return out


def _fmt(x: float) -> str:
    return f"{x: .17e}"


def write_geometry(path, mesh: Mesh, description: str = "aeropipe geometry") -> None:
    """Write each region as a part; elements are grouped tetra4 before hexa8."""
    out = [description, "generated", "node id assign", "element id assign"]
    for p, (name, elems) in enumerate(mesh.regions.items(), start=1):
        nodes = np.unique(mesh.conn[elems][mesh.conn[elems] >= 0])
        local = {int(g): i + 1 for i, g in enumerate(nodes)}
        out += ["part", f"{p:10d}", name, "coordinates", f"{len(nodes):10d}"]
        for c in range(3):
            out += [_fmt(v) for v in mesh.nodes[nodes, c]]
        for k, kw in ((0, "tetra4"), (1, "hexa8")):
            sel = [e for e in elems if mesh.kinds[e] == k]
            if not sel:
                continue
            out += [kw, f"{len(sel):10d}"]
            for e in sel:
                out.append("".join(f"{local[int(i)]:10d}" for i in mesh.element_nodes(e)))
    Path(path).write_text("\n".join(out) + "\n")


def write_scalar_variable(path, mesh: Mesh, values, description: str = "scalar") -> None:
    """Per-element values indexed by mesh element number."""
    values = np.asarray(values, dtype=float)
    out = [description]
    for p, (_, elems) in enumerate(mesh.regions.items(), start=1):
        out += ["part", f"{p:10d}"]
        for k, kw in ((0, "tetra4"), (1, "hexa8")):
            sel = [e for e in elems if mesh.kinds[e] == k]
            if sel:
                out.append(kw)
                out += [_fmt(values[e]) for e in sel]
    Path(path).write_text("\n".join(out) + "\n")


def write_case(path, geometry: str, variables: dict[str, str], time_values, start_number: int = 0) -> None:
    """``variables`` maps description to a file pattern with ``*`` wildcards."""
    out = ["FORMAT", "type: ensight gold", "", "GEOMETRY", f"model: {geometry}", ""]
    if variables:
        out.append("VARIABLE")
        out += [f"scalar per element: 1 {name} {pattern}" for name, pattern in variables.items()]
        out.append("")
    if time_values is not None and len(time_values):
        out += [
            "TIME",
            "time set: 1",
            f"number of steps: {len(time_values)}",
            f"filename start number: {start_number}",
            "filename increment: 1",
            "time values:",
        ]
        out += [repr(float(t)) for t in time_values]
    Path(path).write_text("\n".join(out) + "\n")


def ensight_element_order(mesh: Mesh) -> np.ndarray:
    """Mesh element indices in the order :func:`write_geometry` emits them."""
    order = []
    for elems in mesh.regions.values():
        order += [e for e in elems if mesh.kinds[e] == 0]
        order += [e for e in elems if mesh.kinds[e] == 1]
    return np.array(order, dtype=np.int64)
