"""Versioned field container: one JSON manifest line plus raw float64 blocks.

Layout::

    AEROPIPE-CONTAINER\\n
    <manifest as a single JSON line>\\n
    [mesh node block: num_nodes x 3 float64]
    [result blocks: for each result, for each step, count float64]

All binary data is little-endian IEEE float64.  The manifest records the
mesh topology (connectivity, regions, node sets), the time grid and, per
result, its name, location ("element" or "node"), covered regions and
entity count.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CorruptContainer, UnsupportedVersion
from ..mesh import Mesh, TimeGrid

MAGIC = b"AEROPIPE-CONTAINER\n"
VERSION = 1
_DTYPE = np.dtype("<f8")


@dataclass
class ContainerResult:
    name: str
    location: str
    regions: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("result values must be (steps, entities)")
        if self.location not in ("element", "node"):
            raise ValueError(f"unknown location {self.location!r}")


@dataclass
class ContainerDataset:
    mesh: Mesh | None = None
    time_grid: TimeGrid | None = None
    results: list[ContainerResult] = field(default_factory=list)
    attributes: dict = field(default_factory=dict)

    @property
    def num_steps(self) -> int:
        return 0 if self.time_grid is None else self.time_grid.num_steps

    def result(self, name: str) -> ContainerResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def quantity_names(self) -> list[str]:
        return [r.name for r in self.results]

    def validate(self) -> None:
        names = self.quantity_names
        if len(set(names)) != len(names):
            raise CorruptContainer(f"duplicate quantity names in {names}")
        for r in self.results:
            if r.values.shape[0] != self.num_steps:
                raise CorruptContainer(
                    f"result {r.name!r} has {r.values.shape[0]} steps, manifest says {self.num_steps}"
                )

    def __eq__(self, other):
        if not isinstance(other, ContainerDataset):
            return NotImplemented
        if (self.mesh is None) != (other.mesh is None) or self.time_grid != other.time_grid:
            return False
        if self.mesh is not None and self.mesh != other.mesh:
            return False
        if self.attributes != other.attributes or len(self.results) != len(other.results):
            return False
        for a, b in zip(self.results, other.results):
            if (a.name, a.location, a.regions) != (b.name, b.location, b.regions):
                return False
            if a.values.shape != b.values.shape or a.values.tobytes() != b.values.tobytes():
                return False
        return True


def _mesh_manifest(mesh: Mesh) -> dict:
    return {
        "num_nodes": mesh.num_nodes,
        "kinds": mesh.kinds.tolist(),
        "connectivity": [mesh.element_nodes(e).tolist() for e in range(mesh.num_elements)],
        "regions": {k: v.tolist() for k, v in mesh.regions.items()},
        "node_sets": {k: v.tolist() for k, v in mesh.node_sets.items()},
    }


def _timegrid_manifest(tg: TimeGrid | None):
    if tg is None:
        return None
    return {
        "start_step": tg.start_step,
        "num_steps": tg.num_steps,
        "start_time": tg.start_time,
        "delta": tg.delta,
        "delete_offset": tg.delete_offset,
    }


def manifest_of(ds: ContainerDataset) -> dict:
    return {
        "format": "aeropipe-container",
        "version": VERSION,
        "dtype": "float64",
        "byte_order": "little",
        "mesh": None if ds.mesh is None else _mesh_manifest(ds.mesh),
        "time_grid": _timegrid_manifest(ds.time_grid),
        "results": [
            {"name": r.name, "location": r.location, "regions": list(r.regions), "count": int(r.values.shape[1])}
            for r in ds.results
        ],
        "attributes": ds.attributes,
    }


def write_container(ds: ContainerDataset, path) -> None:
    ds.validate()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps(manifest_of(ds), separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(header + b"\n")
        if ds.mesh is not None:
            f.write(np.ascontiguousarray(ds.mesh.nodes, dtype=_DTYPE).tobytes())
        for r in ds.results:
            f.write(np.ascontiguousarray(r.values, dtype=_DTYPE).tobytes())


def read_manifest(path) -> tuple[dict, int]:
    """Manifest and byte offset of the first binary block."""
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise CorruptContainer(f"{path}: not an aeropipe container")
        line = f.readline()
        offset = f.tell()
    if not line.endswith(b"\n"):
        raise CorruptContainer(f"{path}: truncated manifest")
    try:
        manifest = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptContainer(f"{path}: unreadable manifest ({exc})") from None
    if manifest.get("version") != VERSION:
        raise UnsupportedVersion(f"{path}: container version {manifest.get('version')!r}")
    return manifest, offset


def read_container(path) -> ContainerDataset:
    manifest, offset = read_manifest(path)
    raw = Path(path).read_bytes()[offset:]
    tgm = manifest["time_grid"]
    tg = None if tgm is None else TimeGrid(**tgm)
    steps = 0 if tg is None else tg.num_steps
    mm = manifest["mesh"]
    expected = (0 if mm is None else mm["num_nodes"] * 3) + sum(steps * r["count"] for r in manifest["results"])
    if len(raw) != expected * _DTYPE.itemsize:
        raise CorruptContainer(
            f"{path}: {len(raw)} data bytes, manifest describes {expected * _DTYPE.itemsize}"
        )
    data = np.frombuffer(raw, dtype=_DTYPE)
    pos = 0
    mesh = None
    if mm is not None:
        n = mm["num_nodes"]
        nodes = data[: 3 * n].reshape(n, 3).astype(float)
        pos = 3 * n
        conn = np.full((len(mm["kinds"]), 8), -1, dtype=np.int64)
        for e, c in enumerate(mm["connectivity"]):
            conn[e, : len(c)] = c
        mesh = Mesh.from_arrays(nodes, mm["kinds"], conn, mm["regions"], mm["node_sets"], check_volumes=False)
    results = []
    for r in manifest["results"]:
        size = steps * r["count"]
        vals = data[pos : pos + size].reshape(steps, r["count"]).astype(float)
        pos += size
        results.append(ContainerResult(r["name"], r["location"], list(r["regions"]), vals))
    return ContainerDataset(mesh, tg, results, manifest.get("attributes", {}))


def mesh_container(mesh: Mesh) -> ContainerDataset:
    return ContainerDataset(mesh=mesh)


class StreamingResultWriter:
    """Write a single-result container one step at a time.

    The manifest is written up front, so the step count must be known; a
    short write is reported on :meth:`close`.
    """

    def __init__(self, path, mesh: Mesh, time_grid: TimeGrid, name: str, location: str, regions, count: int, attributes=None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.count = int(count)
        self.expected = time_grid.num_steps
        self.written = 0
        probe = ContainerDataset(mesh, time_grid, [], attributes or {})
        manifest = manifest_of(probe)
        manifest["results"] = [{"name": name, "location": location, "regions": list(regions), "count": self.count}]
        self._f = open(self.path, "wb")
        self._f.write(MAGIC)
        self._f.write(json.dumps(manifest, separators=(",", ":")).encode() + b"\n")
        self._f.write(np.ascontiguousarray(mesh.nodes, dtype=_DTYPE).tobytes())

    def append(self, row) -> None:
        row = np.ascontiguousarray(row, dtype=_DTYPE)
        if row.shape != (self.count,):
            raise ValueError(f"expected {self.count} values, got {row.shape}")
        if self.written >= self.expected:
            raise ValueError("more steps than the manifest declares")
        self._f.write(row.tobytes())
        self.written += 1

    def close(self) -> None:
        if self._f.closed:
            return
        self._f.close()
        if self.written != self.expected:
            raise CorruptContainer(f"{self.path}: wrote {self.written} of {self.expected} steps")

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if exc[0] is None:
            self.close()
        else:
            self._f.close()
