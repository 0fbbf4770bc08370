"""Conservative cut-cell transfer of cell data between two meshes."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeError
from ..mesh import HEX_TETS, Mesh, build_spatial_index, element_bounding_boxes, element_volumes, AxisBox
from ..parallel import map_chunks
from .clipping import pair_volumes

log = logging.getLogger(__name__)


@dataclass
class OverlapTable:
    """Intersection volumes between covered target and source elements.

    Indices are positions within the target/source coverage (the element
    order of :meth:`Mesh.region_elements`), so the table applies directly to
    :class:`~aeropipe.mesh.CellFieldSeries` value arrays.  Pairs are sorted by
    (target, source).
    """

    target_ptr: np.ndarray
    source_index: np.ndarray
    volume: np.ndarray
    covered: np.ndarray
    target_volume: np.ndarray
    source_volume: np.ndarray

    @property
    def num_targets(self) -> int:
        return len(self.target_ptr) - 1

    @property
    def num_sources(self) -> int:
        return len(self.source_volume)

    def pairs(self, t: int) -> list[tuple[int, float]]:
        lo, hi = self.target_ptr[t], self.target_ptr[t + 1]
        return list(zip(self.source_index[lo:hi].tolist(), self.volume[lo:hi].tolist()))

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.volume, self.source_index, self.target_ptr), shape=(self.num_targets, self.num_sources)
        )

    @property
    def source_intersected(self) -> np.ndarray:
        """Per-source volume inside the target coverage."""
        return np.bincount(self.source_index, weights=self.volume, minlength=self.num_sources)


def _tet_stack(mesh: Mesh, elements: np.ndarray):
    tets = np.zeros((len(elements), 6, 4, 3))
    count = np.zeros(len(elements), dtype=np.int64)
    kinds = mesh.kinds[elements]
    conn = mesh.conn[elements]
    is_tet = kinds == 0
    tets[is_tet, 0] = mesh.nodes[conn[is_tet, :4]]
    count[is_tet] = 1
    tets[~is_tet] = mesh.nodes[conn[~is_tet]][:, HEX_TETS]
    count[~is_tet] = 6
    return tets, count


def build_overlap_table(source: Mesh, source_regions, target: Mesh, target_regions) -> OverlapTable:
    src_el = source.region_elements(list(source_regions))
    tgt_el = target.region_elements(list(target_regions))
    src_tets, src_count = _tet_stack(source, src_el)
    tgt_tets, tgt_count = _tet_stack(target, tgt_el)
    index = build_spatial_index(source, src_el)
    tlo, thi = element_bounding_boxes(target)
    ti, si = [], []
    for pos, e in enumerate(tgt_el):
        cand = index.query(AxisBox(tlo[e], thi[e]))
        ti.append(np.full(len(cand), pos, dtype=np.int64))
        si.append(cand)
    ti = np.concatenate(ti) if ti else np.zeros(0, dtype=np.int64)
    si = np.concatenate(si) if si else np.zeros(0, dtype=np.int64)
    order = np.lexsort((si, ti))
    ti, si = ti[order], si[order]

    chunks = map_chunks(
        lambda lo, hi: pair_volumes(tgt_tets, tgt_count, src_tets, src_count, ti[lo:hi], si[lo:hi]),
        len(ti),
    )
    vol = np.concatenate(chunks) if chunks else np.zeros(0)
    keep = vol > 0.0
    ti, si, vol = ti[keep], si[keep], vol[keep]
    ptr = np.zeros(len(tgt_el) + 1, dtype=np.int64)
    np.cumsum(np.bincount(ti, minlength=len(tgt_el)), out=ptr[1:])
    covered = np.bincount(ti, weights=vol, minlength=len(tgt_el))
    return OverlapTable(
        target_ptr=ptr,
        source_index=si,
        volume=vol,
        covered=covered,
        target_volume=element_volumes(target)[tgt_el],
        source_volume=element_volumes(source)[src_el],
    )


def conservative_interpolate(table: OverlapTable, source_values, warn: bool = True):
    """Volume-weighted mean of overlapping source cells, per target.

    Accepts a 1D value array or a (steps, sources) stack.  Targets without
    any overlap get 0.
    """
    vals = np.asarray(source_values, dtype=float)
    if vals.shape[-1] != table.num_sources:
        raise ShapeError(f"expected {table.num_sources} source values, got {vals.shape[-1]}")
    W = table.matrix()
    integral = (W @ vals.T).T if vals.ndim == 2 else W @ vals
    empty = table.covered == 0.0
    if warn and np.any(empty):
        log.warning("%d target cells have no source overlap; set to 0", int(empty.sum()))
    denom = np.where(empty, 1.0, table.covered)
    return np.where(empty, 0.0, integral / denom)
