"""Data-processing pipeline files (``<cfsdat><pipeline>...``)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CyclicPipeline, IncompletePlan, UnknownFilter, ValidationError
from ..mesh import TimeGrid
from .xmlschema import check, find, findall, local, node, parse_xml

log = logging.getLogger(__name__)

_single = node(inputQuantity=node("resultName"), outputQuantity=node("resultName"))
_region_list = node(region=node("name"))

SCHEMA = node(
    pipeline=node(
        stepValueDefinition=node(
            startStop=node(
                startStep=node("value"),
                numSteps=node("value"),
                startTime=node("value"),
                delta=node("value"),
                deleteOffset=node("value"),
            )
        ),
        meshInput=node(
            "id",
            "gridType",
            inputFile=node(
                ensight=node("fileName", variableList=node(variable=node("CFSVarName", "EnsightVarName"))),
                hdf5=node("fileName"),
            ),
        ),
        interpolation=node(
            "type",
            "id",
            "inputFilterIds",
            targetMesh=node(hdf5=node("fileName")),
            singleResult=_single,
            regions=node(sourceRegions=_region_list, targetRegions=_region_list),
        ),
        timeDeriv1=node("id", "inputFilterIds", singleResult=_single),
        meshOutput=node(
            "id",
            "inputFilterIds",
            outputFile=node(hdf5=node("extension", "compressionLevel", "externalFiles", "fileName")),
            saveResults=node(result=node("resultName", allRegions=node(), regionList=_region_list)),
        ),
    )
)

FILTER_KINDS = ("meshInput", "interpolation", "timeDeriv1", "meshOutput")
INTERPOLATION_TYPES = ("FieldInterpolation_Conservative_CutCell",)


@dataclass
class FilterSpec:
    kind: str
    id: str
    inputs: list[str]
    params: dict = field(default_factory=dict)


@dataclass
class PipelinePlan:
    time_grid: TimeGrid
    filters: list[FilterSpec]
    base_dir: Path = Path(".")

    def filter(self, fid: str) -> FilterSpec:
        for f in self.filters:
            if f.id == fid:
                return f
        raise UnknownFilter(fid)

    @property
    def order(self) -> list[str]:
        return [f.id for f in self.filters]

    def summary(self) -> dict:
        tg = self.time_grid
        return {
            "time_grid": [tg.start_step, tg.num_steps, tg.start_time, tg.delta, tg.delete_offset],
            "filters": [{"kind": f.kind, "id": f.id, "inputs": f.inputs, **f.params} for f in self.filters],
        }


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("yes", "true", "1"):
        return True
    if v in ("no", "false", "0"):
        return False
    raise ValidationError(f"expected yes/no, got {value!r}")


def _value(elem, *path, conv=str, default=None):
    e = find(elem, *path)
    if e is None or e.get("value") is None:
        if default is not None:
            return default
        raise IncompletePlan(f"missing <{'/'.join(path)} value=...>")
    try:
        return conv(e.get("value"))
    except ValueError:
        raise IncompletePlan(f"bad value {e.get('value')!r} for {'/'.join(path)}") from None


def _single_result(elem):
    sr = find(elem, "singleResult")
    if sr is None:
        raise IncompletePlan(f"<{local(elem.tag)}> needs a <singleResult>")
    iq, oq = find(sr, "inputQuantity"), find(sr, "outputQuantity")
    if iq is None or oq is None:
        raise IncompletePlan("singleResult needs inputQuantity and outputQuantity")
    return {"input_quantity": iq.get("resultName"), "output_quantity": oq.get("resultName")}


def _parse_filter(elem) -> FilterSpec:
    kind = local(elem.tag)
    fid = elem.get("id")
    if not fid:
        raise IncompletePlan(f"<{kind}> without id")
    inputs = (elem.get("inputFilterIds") or "").split()
    params: dict = {}
    if kind == "meshInput":
        params["grid_type"] = elem.get("gridType", "fullGrid")
        ens = find(elem, "inputFile", "ensight")
        h5 = find(elem, "inputFile", "hdf5")
        if ens is not None:
            params["format"] = "ensight"
            params["file"] = ens.get("fileName")
            vl = find(ens, "variableList")
            params["variables"] = [
                [v.get("CFSVarName"), v.get("EnsightVarName")] for v in (findall(vl, "variable") if vl is not None else [])
            ]
        elif h5 is not None:
            params["format"] = "hdf5"
            params["file"] = h5.get("fileName")
        else:
            raise IncompletePlan(f"meshInput {fid!r} has no input file")
        if not params["file"]:
            raise IncompletePlan(f"meshInput {fid!r} has no fileName")
    elif kind == "interpolation":
        itype = elem.get("type")
        if itype not in INTERPOLATION_TYPES:
            raise ValidationError(f"interpolation type {itype!r} is not supported")
        params["type"] = itype
        tm = find(elem, "targetMesh", "hdf5")
        if tm is None or not tm.get("fileName"):
            raise IncompletePlan(f"interpolation {fid!r} needs <targetMesh><hdf5 fileName=...>")
        params["target_mesh"] = tm.get("fileName")
        params.update(_single_result(elem))
        regs = find(elem, "regions")
        src = find(regs, "sourceRegions") if regs is not None else None
        tgt = find(regs, "targetRegions") if regs is not None else None
        params["source_regions"] = [r.get("name") for r in findall(src, "region")] if src is not None else []
        params["target_regions"] = [r.get("name") for r in findall(tgt, "region")] if tgt is not None else []
    elif kind == "timeDeriv1":
        params.update(_single_result(elem))
    elif kind == "meshOutput":
        h5 = find(elem, "outputFile", "hdf5")
        if h5 is None:
            raise IncompletePlan(f"meshOutput {fid!r} needs <outputFile><hdf5 .../>")
        params["format"] = "hdf5"
        params["extension"] = h5.get("extension", "cfs")
        params["file"] = h5.get("fileName")
        params["compression_level"] = int(h5.get("compressionLevel", "1"))
        params["external_files"] = _bool(h5.get("externalFiles", "no"))
        results = []
        sr = find(elem, "saveResults")
        for r in findall(sr, "result") if sr is not None else []:
            regs = find(r, "regionList")
            results.append(
                {
                    "name": r.get("resultName"),
                    "all_regions": find(r, "allRegions") is not None or regs is None,
                    "regions": [x.get("name") for x in findall(regs, "region")] if regs is not None else [],
                }
            )
        params["results"] = results
    return FilterSpec(kind, fid, inputs, params)


def _toposort(filters: list[FilterSpec]) -> list[FilterSpec]:
    ids = [f.id for f in filters]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ValidationError(f"duplicate filter ids {dup}")
    by_id = {f.id: f for f in filters}
    for f in filters:
        for ref in f.inputs:
            if ref not in by_id:
                raise UnknownFilter(f"filter {f.id!r} references unknown input {ref!r}")
    indeg = {f.id: len(set(f.inputs)) for f in filters}
    consumers: dict[str, list[str]] = {f.id: [] for f in filters}
    for f in filters:
        for ref in set(f.inputs):
            consumers[ref].append(f.id)
    ready = [f.id for f in filters if indeg[f.id] == 0]
    out = []
    while ready:
        fid = ready.pop(0)
        out.append(by_id[fid])
        for c in consumers[fid]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(out) != len(filters):
        stuck = sorted(fid for fid, d in indeg.items() if d > 0)
        raise CyclicPipeline(f"filter graph has a cycle through {stuck}")
    sinks = [f.id for f in filters if not consumers[f.id]]
    if filters and len(sinks) != 1:
        raise ValidationError(f"pipeline must have exactly one sink, found {sinks}")
    return out


def parse_pipeline(xml_text: str, strict: bool = True, base_dir=None) -> PipelinePlan:
    root = parse_xml(xml_text)
    if local(root.tag) != "cfsdat":
        raise ValidationError(f"expected <cfsdat> root, got <{local(root.tag)}>")
    check(root, SCHEMA, strict)
    pipe = find(root, "pipeline")
    if pipe is None:
        raise IncompletePlan("missing <pipeline>")
    ss = find(pipe, "stepValueDefinition", "startStop")
    if ss is None:
        raise IncompletePlan("missing <stepValueDefinition><startStop>")
    tg = TimeGrid(
        start_step=_value(ss, "startStep", conv=int),
        num_steps=_value(ss, "numSteps", conv=int),
        start_time=_value(ss, "startTime", conv=float),
        delta=_value(ss, "delta", conv=float),
        delete_offset=_value(ss, "deleteOffset", conv=_bool, default=False),
    )
    filters = [_parse_filter(c) for c in pipe if isinstance(c.tag, str) and local(c.tag) in FILTER_KINDS]
    return PipelinePlan(tg, _toposort(filters), Path(base_dir) if base_dir else Path("."))


def load_pipeline(path, strict: bool = True) -> PipelinePlan:
    path = Path(path)
    return parse_pipeline(path.read_text(), strict=strict, base_dir=path.parent)
