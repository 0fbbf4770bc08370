"""Execution of parsed pipeline plans."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config.pipeline import PipelinePlan, FilterSpec
from ..errors import AeropipeError, FilterError, IncompletePlan, ValidationError
from ..io.container import ContainerDataset, ContainerResult, read_container, write_container
from ..io.ensight import parse_case, read_geometry, read_scalar_variable
from ..mesh import CellFieldSeries, Mesh, TimeGrid
from .overlap import OverlapTable, build_overlap_table, conservative_interpolate
from .timederiv import time_derivative

log = logging.getLogger(__name__)


@dataclass
class FilterArtifact:
    """What a filter hands to its consumers."""

    id: str
    kind: str
    mesh: Mesh | None
    series: dict[str, CellFieldSeries] = field(default_factory=dict)
    path: Path | None = None
    table: OverlapTable | None = None

    def quantity(self, name: str) -> CellFieldSeries:
        if name not in self.series:
            raise ValidationError(f"filter {self.id!r} provides no quantity {name!r} (has {sorted(self.series)})")
        return self.series[name]


def _subset(mesh: Mesh, series: CellFieldSeries, regions: list[str]) -> np.ndarray:
    """Columns of ``series.values`` covering ``regions``, in region order."""
    if list(regions) == list(series.regions):
        return series.values
    pos = np.full(mesh.num_elements, -1, dtype=np.int64)
    pos[mesh.region_elements(series.regions)] = np.arange(series.values.shape[1])
    cols = pos[mesh.region_elements(regions)]
    if np.any(cols < 0):
        raise ValidationError(f"quantity {series.quantity!r} does not cover regions {regions}")
    return series.values[:, cols]


def _mesh_input(spec: FilterSpec, grid: TimeGrid, base: Path) -> FilterArtifact:
    path = base / spec.params["file"]
    if spec.params["format"] == "ensight":
        desc = parse_case(path)
        mesh = read_geometry(desc.geometry)
        regions = list(mesh.regions)
        series = {}
        for cfs_name, ens_name in spec.params["variables"]:
            ts = desc.time_set_for(ens_name)
            last = grid.start_step + grid.num_steps
            if last > len(ts.filename_numbers):
                raise IncompletePlan(
                    f"plan needs steps {grid.start_step}..{last - 1} but {ens_name!r} has {len(ts.filename_numbers)}"
                )
            if not grid.delete_offset and ts.time_values:
                lag = ts.time_values[grid.start_step] - grid.start_time
                if abs(lag) > 1e-6 * grid.delta:
                    log.warning("Ensight time %.9g differs from plan start time %.9g", ts.time_values[grid.start_step], grid.start_time)
            order = mesh.region_elements(regions)
            vals = np.empty((grid.num_steps, len(order)))
            for k in range(grid.num_steps):
                vals[k] = read_scalar_variable(desc, ens_name, grid.start_step + k)[order]
            series[cfs_name] = CellFieldSeries(cfs_name, regions, vals, grid)
        return FilterArtifact(spec.id, spec.kind, mesh, series, path)
    ds = read_container(path)
    if ds.mesh is None:
        raise ValidationError(f"{path}: container has no mesh")
    series = {}
    for r in ds.results:
        offset = grid.start_step - (ds.time_grid.start_step if ds.time_grid else 0)
        if offset < 0 or offset + grid.num_steps > r.values.shape[0]:
            raise IncompletePlan(f"{path}: result {r.name!r} has {r.values.shape[0]} steps, plan needs {grid.num_steps}")
        vals = r.values[offset : offset + grid.num_steps]
        series[r.name] = CellFieldSeries(r.name, list(r.regions), vals, grid, r.location)
    return FilterArtifact(spec.id, spec.kind, ds.mesh, series, path)


def _interpolation(spec: FilterSpec, src: FilterArtifact, base: Path) -> FilterArtifact:
    p = spec.params
    s = src.quantity(p["input_quantity"])
    if s.location != "element":
        raise ValidationError("cut-cell interpolation needs element data")
    target = read_container(base / p["target_mesh"]).mesh
    if target is None:
        raise ValidationError(f"{p['target_mesh']}: container has no mesh")
    src_regions = p["source_regions"] or list(s.regions)
    tgt_regions = p["target_regions"] or list(target.regions)
    table = build_overlap_table(src.mesh, src_regions, target, tgt_regions)
    vals = conservative_interpolate(table, _subset(src.mesh, s, src_regions))
    out = CellFieldSeries(p["output_quantity"], tgt_regions, vals, s.time_grid)
    return FilterArtifact(spec.id, spec.kind, target, {out.quantity: out}, table=table)


def _time_deriv(spec: FilterSpec, src: FilterArtifact) -> FilterArtifact:
    p = spec.params
    out = time_derivative(src.quantity(p["input_quantity"]), p["output_quantity"])
    return FilterArtifact(spec.id, spec.kind, src.mesh, {out.quantity: out})


def _mesh_output(spec: FilterSpec, srcs: list[FilterArtifact], grid: TimeGrid, base: Path) -> FilterArtifact:
    p = spec.params
    if p["compression_level"] != 1:
        log.info("compressionLevel=%d ignored; container blocks are stored uncompressed", p["compression_level"])
    if p["external_files"]:
        log.warning("externalFiles=yes is not supported; writing a single container")
    meshes = {id(a.mesh) for a in srcs}
    if len(meshes) != 1:
        raise ValidationError("meshOutput inputs live on different meshes")
    mesh = srcs[0].mesh
    available = {}
    for a in srcs:
        for name, s in a.series.items():
            if name in available:
                raise ValidationError(f"quantity {name!r} provided by more than one input")
            available[name] = s
    wanted = p["results"] or [{"name": n, "all_regions": True, "regions": []} for n in available]
    results, kept = [], {}
    for w in wanted:
        if w["name"] not in available:
            raise ValidationError(f"meshOutput {spec.id!r}: no input provides {w['name']!r}")
        s = available[w["name"]]
        regions = list(s.regions) if w["all_regions"] else w["regions"]
        results.append(ContainerResult(s.quantity, s.location, regions, _subset(mesh, s, regions)))
        kept[s.quantity] = s
    path = base / (p["file"] or f"results_hdf5/{spec.id}.{p['extension']}")
    write_container(ContainerDataset(mesh, grid, results, {"producer": spec.id}), path)
    return FilterArtifact(spec.id, spec.kind, mesh, kept, path)


def run_pipeline(plan: PipelinePlan) -> list[FilterArtifact]:
    """Execute every filter in topological order; one artifact per filter."""
    done: dict[str, FilterArtifact] = {}
    base = Path(plan.base_dir)
    for spec in plan.filters:
        try:
            srcs = [done[i] for i in spec.inputs]
            if spec.kind == "meshInput":
                art = _mesh_input(spec, plan.time_grid, base)
            elif spec.kind == "interpolation":
                art = _interpolation(spec, _single(spec, srcs), base)
            elif spec.kind == "timeDeriv1":
                art = _time_deriv(spec, _single(spec, srcs))
            else:
                art = _mesh_output(spec, srcs, plan.time_grid, base)
        except (AeropipeError, OSError) as exc:
            if isinstance(exc, FilterError):
                raise
            raise FilterError(spec.id, exc) from exc
        log.info("filter %s (%s) done", spec.id, spec.kind)
        done[spec.id] = art
    return list(done.values())


def _single(spec: FilterSpec, srcs: list[FilterArtifact]) -> FilterArtifact:
    if len(srcs) != 1:
        raise ValidationError(f"{spec.kind} {spec.id!r} needs exactly one input, got {len(srcs)}")
    return srcs[0]
