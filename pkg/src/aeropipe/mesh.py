"""Unstructured 3D meshes: nodes, tet4/hex8 elements, named regions.

Node ordering follows the Ensight/VTK convention.  For ``hex8`` the bottom
face is 0-1-2-3 (counter-clockwise seen from above) and the top face 4-5-6-7.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateElement, InvalidMesh, ValidationError

TET4 = "tet4"
HEX8 = "hex8"
KINDS = (TET4, HEX8)
NODES_PER_KIND = {TET4: 4, HEX8: 8}

# Fixed 6-tet split of a hex around the 0-6 diagonal; every tet is positively
# oriented for a positively oriented hex.
HEX_TETS = np.array(
    [
        [0, 1, 2, 6],
        [0, 2, 3, 6],
        [0, 3, 7, 6],
        [0, 7, 4, 6],
        [0, 4, 5, 6],
        [0, 5, 1, 6],
    ]
)

# Faces with outward-pointing right-hand ordering.
HEX_FACES = np.array(
    [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ]
)
TET_FACES = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])
FACES = {TET4: TET_FACES, HEX8: HEX_FACES}

DEGENERACY_TOL = 1e-14


@dataclass(frozen=True)
class AxisBox:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float).reshape(3)
        hi = np.asarray(self.max, dtype=float).reshape(3)
        if np.any(lo > hi):
            raise ValidationError(f"box min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def intersects(self, other: "AxisBox") -> bool:
        return bool(np.all(self.min <= other.max) and np.all(other.min <= self.max))

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.min) and np.all(p <= self.max))

    @property
    def volume(self) -> float:
        return float(np.prod(self.max - self.min))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform step grid shared by the pipeline and the solver."""

    start_step: int = 0
    num_steps: int = 1
    start_time: float = 0.0
    delta: float = 1.0
    delete_offset: bool = False

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValidationError(f"num_steps must be >= 1, got {self.num_steps}")
        if not self.delta > 0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")

    def time(self, k: int) -> float:
        # deleteOffset=yes restarts the output clock at delta
        if self.delete_offset:
            return (k + 1) * self.delta
        return self.start_time + k * self.delta

    @property
    def times(self) -> np.ndarray:
        k = np.arange(self.num_steps)
        if self.delete_offset:
            return (k + 1) * self.delta
        return self.start_time + k * self.delta


class Mesh:
    """Nodes, elements, element regions and node sets.

    ``elements`` is a sequence of ``(kind, node_indices)``.  Regions map a
    name to element indices and must partition the element list.
    """

    def __init__(
        self,
        nodes,
        elements: Sequence[tuple[str, Sequence[int]]],
        regions: Mapping[str, Iterable[int]],
        node_sets: Mapping[str, Iterable[int]] | None = None,
        check_volumes: bool = True,
    ):
        nodes = np.array(nodes, dtype=float).reshape(-1, 3)
        kinds = np.empty(len(elements), dtype=np.int8)
        conn = np.full((len(elements), 8), -1, dtype=np.int64)
        for i, (kind, idx) in enumerate(elements):
            if kind not in NODES_PER_KIND:
                raise InvalidMesh(f"element {i}: unknown kind {kind!r}")
            if len(idx) != NODES_PER_KIND[kind]:
                raise InvalidMesh(f"element {i}: {kind} needs {NODES_PER_KIND[kind]} nodes")
            kinds[i] = KINDS.index(kind)
            conn[i, : len(idx)] = idx
        self._init_arrays(nodes, kinds, conn, regions, node_sets or {}, check_volumes)

    @classmethod
    def from_arrays(cls, nodes, kinds, conn, regions, node_sets=None, check_volumes=True):
        mesh = cls.__new__(cls)
        mesh._init_arrays(
            np.array(nodes, dtype=float).reshape(-1, 3),
            np.array(kinds, dtype=np.int8),
            np.array(conn, dtype=np.int64).reshape(-1, 8),
            regions,
            node_sets or {},
            check_volumes,
        )
        return mesh

    def _init_arrays(self, nodes, kinds, conn, regions, node_sets, check_volumes):
        n_el = len(kinds)
        n_nodes = len(nodes)
        used = conn[conn >= 0]
        if used.size and used.max() >= n_nodes:
            raise InvalidMesh(f"connectivity index {used.max()} >= node count {n_nodes}")
        for k in range(len(KINDS)):
            width = NODES_PER_KIND[KINDS[k]]
            sel = kinds == k
            if np.any(conn[sel, :width] < 0):
                raise InvalidMesh("negative connectivity index")
        owner = np.full(n_el, -1, dtype=np.int64)
        reg = {}
        for r, (name, idx) in enumerate(regions.items()):
            idx = np.unique(np.asarray(list(idx), dtype=np.int64))
            if idx.size and (idx.min() < 0 or idx.max() >= n_el):
                raise InvalidMesh(f"region {name!r} references a missing element")
            if np.any(owner[idx] >= 0):
                raise InvalidMesh(f"region {name!r} overlaps another region")
            owner[idx] = r
            reg[name] = idx
        if np.any(owner < 0):
            raise InvalidMesh(f"{int(np.sum(owner < 0))} elements belong to no region")
        sets = {}
        for name, idx in node_sets.items():
            idx = np.unique(np.asarray(list(idx), dtype=np.int64))
            if idx.size and (idx.min() < 0 or idx.max() >= n_nodes):
                raise InvalidMesh(f"node set {name!r} references a missing node")
            sets[name] = idx
        for a in (nodes, kinds, conn, owner):
            a.setflags(write=False)
        for a in list(reg.values()) + list(sets.values()):
            a.setflags(write=False)
        self.nodes = nodes
        self.kinds = kinds
        self.conn = conn
        self.regions = reg
        self.node_sets = sets
        self.element_region = owner
        self._region_names = list(reg)
        if check_volumes and n_el:
            vols = element_volumes(self)
            lo = self.nodes[np.where(self.conn >= 0, self.conn, self.conn[:, :1])].min(axis=1)
            hi = self.nodes[np.where(self.conn >= 0, self.conn, self.conn[:, :1])].max(axis=1)
            box = np.prod(hi - lo, axis=1)
            bad = np.nonzero(vols <= DEGENERACY_TOL * box)[0]
            if bad.size:
                raise DegenerateElement(
                    f"{bad.size} degenerate or inverted elements, first is {bad[0]} "
                    f"(volume {vols[bad[0]]:.3e})"
                )

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_elements(self) -> int:
        return len(self.kinds)

    def kind(self, e: int) -> str:
        return KINDS[self.kinds[e]]

    def element_nodes(self, e: int) -> np.ndarray:
        return self.conn[e, : NODES_PER_KIND[self.kind(e)]]

    @property
    def elements(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(self.kind(e), tuple(int(i) for i in self.element_nodes(e))) for e in range(self.num_elements)]

    def region_elements(self, names: Sequence[str]) -> np.ndarray:
        """Element indices covered by ``names``, concatenated in the given order."""
        out = []
        for name in names:
            if name not in self.regions:
                raise ValidationError(f"mesh has no region {name!r}")
            out.append(self.regions[name])
        if not out:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(out)

    def region_of(self, e: int) -> str:
        return self._region_names[self.element_region[e]]

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.kinds, other.kinds)
            and np.array_equal(self.conn, other.conn)
            and list(self.regions) == list(other.regions)
            and all(np.array_equal(self.regions[k], other.regions[k]) for k in self.regions)
            and list(self.node_sets) == list(other.node_sets)
            and all(np.array_equal(self.node_sets[k], other.node_sets[k]) for k in self.node_sets)
        )

    def __repr__(self):
        return (
            f"Mesh({self.num_nodes} nodes, {self.num_elements} elements, "
            f"regions={list(self.regions)}, node_sets={list(self.node_sets)})"
        )


@dataclass
class CellFieldSeries:
    """Per-element scalar field over a time grid.

    ``values[k]`` holds one value per element covered by ``regions``, in the
    order given by :meth:`Mesh.region_elements`.
    """

    quantity: str
    regions: list[str]
    values: np.ndarray
    time_grid: TimeGrid
    location: str = "element"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValidationError("values must be a (steps, entities) array")
        if self.values.shape[0] != self.time_grid.num_steps:
            raise ValidationError(
                f"{self.values.shape[0]} steps stored but time grid has {self.time_grid.num_steps}"
            )

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]


def _tet_signed_volumes(p0, p1, p2, p3):
    return np.einsum("...i,...i->...", np.cross(p1 - p0, p2 - p0), p3 - p0) / 6.0


def element_tets(mesh: Mesh, e: int) -> np.ndarray:
    """Tetrahedra (as (n, 4, 3) coordinates) tiling element ``e``."""
    idx = mesh.element_nodes(e)
    pts = mesh.nodes[idx]
    if mesh.kinds[e] == 0:
        return pts[None]
    return pts[HEX_TETS]


def element_volumes(mesh: Mesh) -> np.ndarray:
    vols = np.zeros(mesh.num_elements)
    tet = mesh.kinds == 0
    if np.any(tet):
        p = mesh.nodes[mesh.conn[tet, :4]]
        vols[tet] = _tet_signed_volumes(p[:, 0], p[:, 1], p[:, 2], p[:, 3])
    hexa = ~tet
    if np.any(hexa):
        p = mesh.nodes[mesh.conn[hexa]][:, HEX_TETS]
        vols[hexa] = _tet_signed_volumes(p[..., 0, :], p[..., 1, :], p[..., 2, :], p[..., 3, :]).sum(axis=1)
    return vols


def element_volume(mesh: Mesh, element_index: int) -> float:
    """Volume of one element; raises :class:`DegenerateElement` if not positive."""
    tets = element_tets(mesh, element_index)
    vol = float(_tet_signed_volumes(tets[:, 0], tets[:, 1], tets[:, 2], tets[:, 3]).sum())
    box = element_bounding_box(mesh, element_index)
    if vol <= DEGENERACY_TOL * box.volume or box.volume == 0.0:
        raise DegenerateElement(f"element {element_index} has volume {vol:.3e}")
    return vol


def element_bounding_box(mesh: Mesh, element_index: int) -> AxisBox:
    pts = mesh.nodes[mesh.element_nodes(element_index)]
    return AxisBox(pts.min(axis=0), pts.max(axis=0))


def element_bounding_boxes(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    conn = np.where(mesh.conn >= 0, mesh.conn, mesh.conn[:, :1])
    pts = mesh.nodes[conn]
    return pts.min(axis=1), pts.max(axis=1)


class SpatialIndex:
    """Uniform-grid bucketing of element bounding boxes.

    ``query`` returns exactly the elements whose closed bounding boxes
    intersect the query box, sorted ascending.
    """

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = lo
        self.hi = hi
        n = len(lo)
        self.origin = lo.min(axis=0)
        span = hi.max(axis=0) - self.origin
        span = np.where(span > 0, span, 1.0)  # flat sets, e.g. planar facets
        ext = np.median(hi - lo, axis=0)
        ext = np.where(ext > 0, ext, span)
        dims = np.clip(np.ceil(span / ext).astype(np.int64), 1, max(1, int(round(n ** (1 / 3))) * 4))
        self.dims = dims
        self.cell = span / dims
        buckets: dict[tuple[int, int, int], list[int]] = {}
        c0 = self._cell_of(lo)
        c1 = self._cell_of(hi)
        for e in range(n):
            for i in range(c0[e, 0], c1[e, 0] + 1):
                for j in range(c0[e, 1], c1[e, 1] + 1):
                    for k in range(c0[e, 2], c1[e, 2] + 1):
                        buckets.setdefault((i, j, k), []).append(e)
        self.buckets = {key: np.array(v, dtype=np.int64) for key, v in buckets.items()}

    def _cell_of(self, pts):
        c = np.floor((np.atleast_2d(pts) - self.origin) / self.cell).astype(np.int64)
        return np.clip(c, 0, self.dims - 1)

    def query(self, box: AxisBox) -> np.ndarray:
        if np.any(box.max < self.origin) or np.any(box.min > self.origin + self.cell * self.dims):
            return np.zeros(0, dtype=np.int64)
        c0 = self._cell_of(box.min)[0]
        c1 = self._cell_of(box.max)[0]
        found = []
        for i in range(c0[0], c1[0] + 1):
            for j in range(c0[1], c1[1] + 1):
                for k in range(c0[2], c1[2] + 1):
                    b = self.buckets.get((i, j, k))
                    if b is not None:
                        found.append(b)
        if not found:
            return np.zeros(0, dtype=np.int64)
        cand = np.unique(np.concatenate(found))
        hit = np.all(self.lo[cand] <= box.max, axis=1) & np.all(box.min <= self.hi[cand], axis=1)
        return cand[hit]


def build_spatial_index(mesh: Mesh, elements: np.ndarray | None = None) -> SpatialIndex:
    """Index over all elements (or the subset ``elements``, returned as positions)."""
    if mesh.num_elements == 0:
        raise InvalidMesh("cannot index an empty mesh")
    lo, hi = element_bounding_boxes(mesh)
    if elements is not None:
        lo, hi = lo[elements], hi[elements]
    return SpatialIndex(lo, hi)


def boundary_facets(mesh: Mesh, elements: np.ndarray | None = None):
    """Facets of ``elements`` not shared with another element of the same set.

    Returns a list of ``(element, local_face, node_indices)``.
    """
    if elements is None:
        elements = np.arange(mesh.num_elements)
    seen: dict[tuple, list] = {}
    for e in elements:
        kind = mesh.kind(e)
        nodes = mesh.element_nodes(e)
        for f, face in enumerate(FACES[kind]):
            fn = nodes[face]
            seen.setdefault(tuple(sorted(fn.tolist())), []).append((int(e), f, fn))
    return [v[0] for v in seen.values() if len(v) == 1]


def structured_hex_box(
    xs: Sequence[float],
    ys: Sequence[float],
    zs: Sequence[float],
    region_of=None,
    node_offset: int = 0,
):
    """Nodes and hex8 elements for a tensor-product grid.

    ``region_of(i, j, k, centroid)`` names the region of each cell (default
    ``"Background"``).  Returns ``(nodes, elements, regions, node_index)``
    where ``node_index(i, j, k)`` maps grid indices to node numbers.
    """
    xs, ys, zs = (np.asarray(a, dtype=float) for a in (xs, ys, zs))
    nx, ny, nz = len(xs), len(ys), len(zs)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def nid(i, j, k):
        return node_offset + (i * ny + j) * nz + k

    elements = []
    regions: dict[str, list[int]] = {}
    for i in range(nx - 1):
        for j in range(ny - 1):
            for k in range(nz - 1):
                conn = (
                    nid(i, j, k), nid(i + 1, j, k), nid(i + 1, j + 1, k), nid(i, j + 1, k),
                    nid(i, j, k + 1), nid(i + 1, j, k + 1), nid(i + 1, j + 1, k + 1), nid(i, j + 1, k + 1),
                )
                c = np.array([(xs[i] + xs[i + 1]) / 2, (ys[j] + ys[j + 1]) / 2, (zs[k] + zs[k + 1]) / 2])
                name = "Background" if region_of is None else region_of(i, j, k, c)
                if name is None:
                    continue
                regions.setdefault(name, []).append(len(elements))
                elements.append((HEX8, conn))
    return nodes, elements, regions, nid


def voxel_mesh(xs, ys, zs, region_of=None, node_sets=None) -> Mesh:
    nodes, elements, regions, _ = structured_hex_box(xs, ys, zs, region_of)
    used = np.unique(np.concatenate([np.asarray(c) for _, c in elements])) if elements else np.zeros(0, int)
    if len(used) < len(nodes):
        remap = -np.ones(len(nodes), dtype=np.int64)
        remap[used] = np.arange(len(used))
        nodes = nodes[used]
        elements = [(k, tuple(int(remap[i]) for i in c)) for k, c in elements]
        if node_sets:
            node_sets = {k: remap[np.asarray(v)][remap[np.asarray(v)] >= 0] for k, v in node_sets.items()}
    return Mesh(nodes, elements, regions, node_sets)
