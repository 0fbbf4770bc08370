"""Acoustic simulation files (``<cfsSimulation>``)."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import IncompletePlan, UnknownDamping, UnknownRegion, ValidationError
from ..mesh import AxisBox
from .expression import Expression, parse_expression
from .xmlschema import Node, check, find, findall, local, node, parse_xml, text_of

_regions = node(region=node("name", "material", "dampingId"))

SCHEMA = node(
    fileFormats=node(
        input=node(hdf5=node("fileName")),
        output=Node(children={"hdf5": node("id"), "text": node("id")}),  # "text" clashes with the flag
        materialData=node("file", "format"),
    ),
    domain=node(
        "geometryType",
        regionList=_regions,
        ncInterfaceList=node(ncInterface=node("name", "masterSide", "slaveSide")),
        nodeList=node(nodes=node("name", coord=node("x", "y", "z"))),
    ),
    sequenceStep=node(
        "index",
        analysis=node(transient=node(numSteps=node(text=True), deltaT=node(text=True))),
        pdeList=node(
            acoustic=node(
                "formulation",
                "timeStepAlpha",
                regionList=_regions,
                ncInterfaceList=node(ncInterface=node("name", "formulation", "nitscheFactor")),
                dampingList=node(
                    pml=node(
                        "id",
                        propRegion=node(direction=node("comp", "min", "max")),
                        type=node(text=True),
                        dampFactor=node(text=True),
                    )
                ),
                bcsAndLoads=node(
                    absorbingBCs=node("volumeRegion", "name"),
                    rhsValues=node(
                        "name",
                        grid=node(defaultGrid=node("quantity", "dependtype", globalFactor=node(text=True))),
                    ),
                ),
                storeResults=node(
                    nodeResult=node("type", allRegions=node(), nodeList=node(nodes=node("name", "outputIds")))
                ),
            )
        ),
        linearSystems=node(system=node(solverList=node(pardiso=node("id"), directLU=node("id")))),
    ),
)


@dataclass
class NcInterface:
    name: str
    master: str
    slave: str
    formulation: str = "Nitsche"
    nitsche_factor: float = 50.0


@dataclass
class PmlSpec:
    id: str
    box: AxisBox
    type: str = "inverseDist"
    damp_factor: float = 1.0


@dataclass
class AbsorbingBC:
    name: str
    volume_region: str


@dataclass
class RhsLoad:
    region: str
    quantity: str
    expression: Expression
    dependtype: str = "GENERAL"


@dataclass
class StoredResult:
    type: str
    all_regions: bool
    nodes: list[tuple[str, list[str]]] = field(default_factory=list)


@dataclass
class SimulationPlan:
    input_files: list[str]
    outputs: dict[str, str]
    material_file: str | None
    regions: dict[str, str]
    nc_interfaces: list[NcInterface]
    nodes: dict[str, tuple[float, float, float]]
    num_steps: int
    delta_t: float
    formulation: str = "acouPotential"
    time_step_alpha: float = 0.0
    pde_regions: list[tuple[str, str | None]] = field(default_factory=list)
    pml: dict[str, PmlSpec] = field(default_factory=dict)
    absorbing_bcs: list[AbsorbingBC] = field(default_factory=list)
    rhs: list[RhsLoad] = field(default_factory=list)
    store_results: list[StoredResult] = field(default_factory=list)
    solver: str = "pardiso"
    geometry_type: str = "3d"
    base_dir: Path = Path(".")
    name: str = "simulation"

    def validate(self) -> None:
        if self.num_steps < 1:
            raise IncompletePlan(f"numSteps must be >= 1, got {self.num_steps}")
        if not self.delta_t > 0:
            raise IncompletePlan(f"deltaT must be > 0, got {self.delta_t}")
        if not -1.0 / 3.0 - 1e-12 <= self.time_step_alpha <= 0.0:
            raise ValidationError(f"timeStepAlpha {self.time_step_alpha} outside [-1/3, 0]")
        for name, damping in self.pde_regions:
            if name not in self.regions:
                raise UnknownRegion(f"PDE region {name!r} is not in the domain regionList")
            if damping is not None and damping not in self.pml:
                raise UnknownDamping(f"region {name!r} references undefined damping {damping!r}")
        pde = {n for n, _ in self.pde_regions}
        for bc in self.absorbing_bcs:
            if bc.volume_region not in pde:
                raise UnknownRegion(f"absorbing BC volume region {bc.volume_region!r} is not a PDE region")
        for load in self.rhs:
            if load.region not in pde:
                raise UnknownRegion(f"rhsValues region {load.region!r} is not a PDE region")
        for nc in self.nc_interfaces:
            if nc.nitsche_factor <= 0:
                raise ValidationError(f"ncInterface {nc.name!r}: nitscheFactor must be positive")
        for res in self.store_results:
            for nname, outs in res.nodes:
                if nname not in self.nodes:
                    raise ValidationError(f"stored node list {nname!r} is not defined in the domain")
                for out in outs:
                    if out not in self.outputs:
                        raise ValidationError(f"output id {out!r} is not defined in fileFormats")

    def summary(self) -> dict:
        return {
            "input_files": self.input_files,
            "outputs": self.outputs,
            "material_file": self.material_file,
            "geometry_type": self.geometry_type,
            "regions": self.regions,
            "nc_interfaces": [
                [n.name, n.master, n.slave, n.formulation, n.nitsche_factor] for n in self.nc_interfaces
            ],
            "nodes": {k: list(v) for k, v in self.nodes.items()},
            "analysis": {"num_steps": self.num_steps, "delta_t": self.delta_t},
            "formulation": self.formulation,
            "time_step_alpha": self.time_step_alpha,
            "pde_regions": [list(r) for r in self.pde_regions],
            "pml": {
                k: {"min": p.box.min.tolist(), "max": p.box.max.tolist(), "type": p.type, "damp_factor": p.damp_factor}
                for k, p in self.pml.items()
            },
            "absorbing_bcs": [[b.name, b.volume_region] for b in self.absorbing_bcs],
            "rhs": [[r.region, r.quantity, r.dependtype, str(r.expression)] for r in self.rhs],
            "store_results": [[s.type, s.all_regions, [[n, o] for n, o in s.nodes]] for s in self.store_results],
            "solver": self.solver,
        }


def _float(text, what):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise IncompletePlan(f"{what}: expected a number, got {text!r}") from None


def parse_simulation(xml_text: str, strict: bool = True, base_dir=None, name: str = "simulation") -> SimulationPlan:
    root = parse_xml(xml_text)
    if local(root.tag) != "cfsSimulation":
        raise ValidationError(f"expected <cfsSimulation> root, got <{local(root.tag)}>")
    check(root, SCHEMA, strict)

    ff = find(root, "fileFormats")
    inputs = [h.get("fileName") for h in findall(find(ff, "input"), "hdf5")] if ff is not None and find(ff, "input") is not None else []
    outputs = {}
    out = find(ff, "output") if ff is not None else None
    for child in out if out is not None else []:
        if isinstance(child.tag, str):
            outputs[child.get("id") or local(child.tag)] = local(child.tag)
    md = find(ff, "materialData") if ff is not None else None
    material_file = md.get("file") if md is not None else None

    dom = find(root, "domain")
    if dom is None:
        raise IncompletePlan("missing <domain>")
    regions = {}
    for r in findall(find(dom, "regionList"), "region") if find(dom, "regionList") is not None else []:
        regions[r.get("name")] = r.get("material")
    nc_domain = {}
    for nc in findall(find(dom, "ncInterfaceList"), "ncInterface") if find(dom, "ncInterfaceList") is not None else []:
        nc_domain[nc.get("name")] = (nc.get("masterSide"), nc.get("slaveSide"))
    nodes = {}
    for n in findall(find(dom, "nodeList"), "nodes") if find(dom, "nodeList") is not None else []:
        c = find(n, "coord")
        if c is None:
            raise IncompletePlan(f"node list {n.get('name')!r} has no <coord>")
        nodes[n.get("name")] = tuple(_float(c.get(k), f"coord {k}") for k in ("x", "y", "z"))

    seq = find(root, "sequenceStep")
    tr = find(seq, "analysis", "transient") if seq is not None else None
    if tr is None:
        raise IncompletePlan("missing <analysis><transient>")
    ns, dt = text_of(find(tr, "numSteps")), text_of(find(tr, "deltaT"))
    if ns is None or dt is None:
        raise IncompletePlan("transient analysis needs numSteps and deltaT")
    try:
        num_steps = int(ns)
    except ValueError:
        raise IncompletePlan(f"numSteps: expected an integer, got {ns!r}") from None
    delta_t = _float(dt, "deltaT")

    ac = find(seq, "pdeList", "acoustic")
    if ac is None:
        raise IncompletePlan("missing <pdeList><acoustic>")
    pde_regions = [(r.get("name"), r.get("dampingId")) for r in findall(find(ac, "regionList"), "region")] if find(ac, "regionList") is not None else []

    ncs = []
    for nc in findall(find(ac, "ncInterfaceList"), "ncInterface") if find(ac, "ncInterfaceList") is not None else []:
        nname = nc.get("name")
        if nname not in nc_domain:
            raise ValidationError(f"ncInterface {nname!r} is not declared in the domain")
        master, slave = nc_domain[nname]
        ncs.append(NcInterface(nname, master, slave, nc.get("formulation", "Nitsche"), _float(nc.get("nitscheFactor", "50"), "nitscheFactor")))

    pml = {}
    for p in findall(find(ac, "dampingList"), "pml") if find(ac, "dampingList") is not None else []:
        lo, hi = [0.0] * 3, [0.0] * 3
        seen = set()
        for d in findall(find(p, "propRegion"), "direction") if find(p, "propRegion") is not None else []:
            k = "xyz".index(d.get("comp"))
            lo[k], hi[k] = _float(d.get("min"), "direction min"), _float(d.get("max"), "direction max")
            seen.add(k)
        if len(seen) != 3:
            raise IncompletePlan(f"pml {p.get('id')!r} needs x, y and z directions")
        ptype = text_of(find(p, "type")) or "inverseDist"
        if ptype != "inverseDist":
            raise ValidationError(f"pml type {ptype!r} is not supported")
        pml[p.get("id")] = PmlSpec(p.get("id"), AxisBox(lo, hi), ptype, _float(text_of(find(p, "dampFactor")) or "1.0", "dampFactor"))

    abcs, rhs = [], []
    bl = find(ac, "bcsAndLoads")
    for child in bl if bl is not None else []:
        if not isinstance(child.tag, str):
            continue
        tag = local(child.tag)
        if tag == "absorbingBCs":
            abcs.append(AbsorbingBC(child.get("name"), child.get("volumeRegion")))
        elif tag == "rhsValues":
            dg = find(child, "grid", "defaultGrid")
            if dg is None:
                raise IncompletePlan(f"rhsValues {child.get('name')!r} needs <grid><defaultGrid>")
            gf = text_of(find(dg, "globalFactor")) or "1"
            rhs.append(RhsLoad(child.get("name"), dg.get("quantity"), parse_expression(gf), dg.get("dependtype", "GENERAL")))

    stored = []
    sr = find(ac, "storeResults")
    for nr in findall(sr, "nodeResult") if sr is not None else []:
        nl = find(nr, "nodeList")
        nlist = [(n.get("name"), (n.get("outputIds") or "").split()) for n in findall(nl, "nodes")] if nl is not None else []
        stored.append(StoredResult(nr.get("type"), find(nr, "allRegions") is not None, nlist))

    solver = "pardiso"
    sl = find(seq, "linearSystems", "system", "solverList")
    if sl is not None:
        for child in sl:
            if isinstance(child.tag, str):
                solver = local(child.tag)

    plan = SimulationPlan(
        input_files=inputs,
        outputs=outputs,
        material_file=material_file,
        regions=regions,
        nc_interfaces=ncs,
        nodes=nodes,
        num_steps=num_steps,
        delta_t=delta_t,
        formulation=ac.get("formulation", "acouPotential"),
        time_step_alpha=_float(ac.get("timeStepAlpha", "0"), "timeStepAlpha"),
        pde_regions=pde_regions,
        pml=pml,
        absorbing_bcs=abcs,
        rhs=rhs,
        store_results=stored,
        solver=solver,
        geometry_type=dom.get("geometryType", "3d"),
        base_dir=Path(base_dir) if base_dir else Path("."),
        name=name,
    )
    if plan.formulation != "acouPotential":
        raise ValidationError(f"formulation {plan.formulation!r} is not supported")
    plan.validate()
    return plan


def load_simulation(path, strict: bool = True) -> SimulationPlan:
    path = Path(path)
    return parse_simulation(path.read_text(), strict=strict, base_dir=path.parent, name=path.stem)
