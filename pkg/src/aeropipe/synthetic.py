"""Synthetic meshes, plans and datasets for experiments and tests.

Two families are provided:

* straight ducts of hex elements (optionally with an absorbing layer or a
  duplicated-node split) driven by a volume source in the first layer;
* a complete phonation-style case directory (CFD export, acoustic mesh,
  material file and the three XML plans) for the end-to-end workflow.
"""
from __future__ import annotations

import shutil
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .config.expression import parse_expression
from .config.simulation import NcInterface, PmlSpec, RhsLoad, SimulationPlan, StoredResult
from .io.container import ContainerDataset, ContainerResult, mesh_container, write_container
from .io.ensight import write_case, write_geometry, write_scalar_variable
from .io.material import Material, write_material
from .mesh import AxisBox, Mesh, TimeGrid, structured_hex_box, voxel_mesh

AIR = Material("air", 1.204, 343.4)
PLAN_FILES = ("interpolatePressure.xml", "calc_dpdt.xml", "propagation.xml")


def plan_template(name: str) -> str:
    """Text of one of the bundled phonation XML plans."""
    return resources.files("aeropipe").joinpath("data", name).read_text()


# ---------------------------------------------------------------- ducts


@dataclass
class DuctSpec:
    length: float = 1.0
    width: float = 0.05
    nx: int = 200
    ny: int = 4
    nz: int = 4
    source_cells: int = 1
    layer_cells: int = 0
    split_at: float | None = None
    right_ny: int | None = None


def duct_mesh(spec: DuctSpec = DuctSpec()) -> Mesh:
    """Hex duct along +x with regions SOURCE, DUCT (and LAYER / RIGHT).

    With ``split_at`` the part beyond the split is a separate block with its
    own nodes (region RIGHT); node sets IF_LEFT and IF_RIGHT hold the two
    copies of the interface.  ``right_ny`` makes the right block's
    transverse grid non-matching.
    """
    h = spec.length / spec.nx
    xs = np.linspace(0.0, spec.length + spec.layer_cells * h, spec.nx + spec.layer_cells + 1)
    ys = np.linspace(0.0, spec.width, spec.ny + 1)
    zs = np.linspace(0.0, spec.width, spec.nz + 1)
    src_end = spec.source_cells * h

    def region(i, j, k, c):
        if c[0] < src_end:
            return "SOURCE"
        if c[0] > spec.length:
            return "LAYER"
        return "DUCT"

    if spec.split_at is None:
        nodes, elements, regions, _ = structured_hex_box(xs, ys, zs, region)
        return Mesh(nodes, elements, regions)

    cut = int(round(spec.split_at / h))
    left_x, right_x = xs[: cut + 1], xs[cut:]
    n1, e1, r1, _ = structured_hex_box(left_x, ys, zs, region)
    rn = spec.right_ny or spec.ny
    ys2, zs2 = np.linspace(0.0, spec.width, rn + 1), np.linspace(0.0, spec.width, rn + 1)

    def right(i, j, k, c):
        return "LAYER" if c[0] > spec.length else "RIGHT"

    n2, e2, r2, _ = structured_hex_box(right_x, ys2, zs2, right, node_offset=len(n1))
    nodes = np.vstack([n1, n2])
    off = len(e1)
    regions = {**r1, **{k: [i + off for i in v] for k, v in r2.items()}}
    x_if = left_x[-1]
    on_left = np.nonzero(np.isclose(n1[:, 0], x_if))[0]
    on_right = len(n1) + np.nonzero(np.isclose(n2[:, 0], x_if))[0]
    return Mesh(nodes, e1 + e2, regions, {"IF_LEFT": on_left, "IF_RIGHT": on_right})


def duct_plan(
    mesh: Mesh,
    num_steps: int,
    delta_t: float,
    expression: str,
    alpha: float = -0.3,
    layer_box: AxisBox | None = None,
    damp_factor: float = 1.0,
    nitsche_factor: float | None = None,
    probes: dict | None = None,
    stored: str = "acouPotentialD1",
) -> SimulationPlan:
    """Plan driving region SOURCE with ``expression`` times a unit source."""
    regions = {r: "air" for r in mesh.regions}
    pde = [(r, "layer" if r == "LAYER" and layer_box is not None else None) for r in mesh.regions]
    pml = {"layer": PmlSpec("layer", layer_box, "inverseDist", damp_factor)} if layer_box is not None else {}
    ncs = []
    if nitsche_factor is not None:
        ncs.append(NcInterface("IF", "IF_LEFT", "IF_RIGHT", "Nitsche", nitsche_factor))
    plan = SimulationPlan(
        input_files=[],
        outputs={},
        material_file=None,
        regions=regions,
        nc_interfaces=ncs,
        nodes=dict(probes or {}),
        num_steps=num_steps,
        delta_t=delta_t,
        time_step_alpha=alpha,
        pde_regions=pde,
        pml=pml,
        rhs=[RhsLoad("SOURCE", "acouRhsLoad", parse_expression(expression))],
        store_results=[StoredResult(stored, True)],
        name="duct",
    )
    plan.validate()
    return plan


def unit_source(mesh: Mesh, region: str = "SOURCE", value: float = 1.0) -> ContainerDataset:
    """Time-independent element source ``value`` on ``region``."""
    n = len(mesh.regions[region])
    return ContainerDataset(
        mesh, TimeGrid(num_steps=1), [ContainerResult("acouRhsLoad", "element", [region], np.full((1, n), value))]
    )


def gaussian_pulse(t0: float, tau: float) -> str:
    # unary minus binds tighter than ^, hence the explicit -1*
    return f"exp(-1*((t-{t0!r})/{tau!r})^2)"


# ---------------------------------------------------------------- phonation case

DUCT_Y = (-0.011, 0.029)
DUCT_Z = (-0.0125, 0.0275)
DUCT_END = 0.19
LARYNX_END = 0.02
PROP_BOX = AxisBox([0.19, -0.051, -0.0525], [0.275, 0.069, 0.0675])


@dataclass
class PhonationCase:
    root: Path
    frequency: float
    num_steps: int
    delta_t: float
    files: dict = field(default_factory=dict)


def acoustic_mesh(axial: float = 0.005, transverse: int = 5, far: float = 0.01, layer_cells: int = 4) -> Mesh:
    """Vocal-tract duct (LARYNX, VT) radiating into PR with a PML shell.

    The duct and the radiation block are meshed independently; node sets
    IF_VT / IF_PR mark the two sides of the non-conforming interface and
    IF_ABC the glottal end at x = 0.
    """
    nx = int(round(DUCT_END / axial))
    dx = np.linspace(0.0, DUCT_END, nx + 1)
    dy = np.linspace(*DUCT_Y, transverse + 1)
    dz = np.linspace(*DUCT_Z, transverse + 1)
    n1, e1, r1, _ = structured_hex_box(dx, dy, dz, lambda i, j, k, c: "LARYNX" if c[0] < LARYNX_END else "VT")

    b = PROP_BOX
    nbx = int(np.ceil((b.max[0] - b.min[0]) / far - 1e-9))
    px = np.linspace(b.min[0], b.max[0], nbx + 1)
    py = b.min[1] + far * np.arange(int(round((b.max[1] - b.min[1]) / far)) + 1)
    pz = b.min[2] + far * np.arange(int(round((b.max[2] - b.min[2]) / far)) + 1)
    step = far * np.arange(1, layer_cells + 1)
    px = np.concatenate([px, b.max[0] + step])
    py = np.concatenate([b.min[1] - step[::-1], py, b.max[1] + step])
    pz = np.concatenate([b.min[2] - step[::-1], pz, b.max[2] + step])

    def outer(i, j, k, c):
        inside = np.all(c >= b.min) and np.all(c <= b.max)
        return "PR" if inside else "PML"

    n2, e2, r2, _ = structured_hex_box(px, py, pz, outer, node_offset=len(n1))
    nodes = np.vstack([n1, n2])
    off = len(e1)
    regions = {**r1, **{k: [i + off for i in v] for k, v in r2.items()}}
    tol = 1e-9
    vt_if = np.nonzero(np.abs(n1[:, 0] - DUCT_END) < tol)[0]
    abc = np.nonzero(np.abs(n1[:, 0]) < tol)[0]
    in_mouth = (
        (np.abs(n2[:, 0] - DUCT_END) < tol)
        & (n2[:, 1] > DUCT_Y[0] - tol) & (n2[:, 1] < DUCT_Y[1] + tol)
        & (n2[:, 2] > DUCT_Z[0] - tol) & (n2[:, 2] < DUCT_Z[1] + tol)
    )
    pr_if = len(n1) + np.nonzero(in_mouth)[0]
    return Mesh(nodes, e1 + e2, regions, {"IF_ABC": abc, "IF_VT": vt_if, "IF_PR": pr_if})


def cfd_mesh(cells=(25, 7, 7), margin: float = 0.004) -> Mesh:
    """Voxel "Background" grid covering the duct, deliberately non-matching."""
    xs = np.linspace(-margin, DUCT_END + margin, cells[0] + 1)
    ys = np.linspace(DUCT_Y[0] - margin, DUCT_Y[1] + margin, cells[1] + 1)
    zs = np.linspace(DUCT_Z[0] - margin, DUCT_Z[1] + margin, cells[2] + 1)
    return voxel_mesh(xs, ys, zs)


def pulsating_sphere(points, t, frequency: float, amplitude: float = 100.0,
                     center=(0.01, 0.009, 0.0075), radius: float = 0.005):
    """Incompressible near-field pressure of a pulsating sphere, ``(len(t), len(points))``."""
    r = np.linalg.norm(np.asarray(points) - np.asarray(center), axis=-1)
    shape = amplitude * radius / np.maximum(r, radius)
    return np.sin(2.0 * np.pi * frequency * np.asarray(t))[:, None] * shape[None, :]


def write_phonation_case(
    root,
    frequency: float = 1562.5,
    num_steps: int = 675,
    delta_t: float = 1e-5,
    first_file_number: int = 7501,
    mesh_kwargs: dict | None = None,
) -> PhonationCase:
    """Create a case directory that the three bundled plans run on unchanged."""
    root = Path(root)
    cfd_dir = root / "cfd_data_path"
    cfd_dir.mkdir(parents=True, exist_ok=True)
    cfd = cfd_mesh()
    write_geometry(cfd_dir / "CFD_results.geo", cfd, "synthetic pulsating sphere")
    centroids = np.array([cfd.nodes[cfd.element_nodes(e)].mean(axis=0) for e in range(cfd.num_elements)])
    times = delta_t * (np.arange(num_steps) + 1)
    p = pulsating_sphere(centroids, times, frequency)
    width = len(str(first_file_number + num_steps))
    for k in range(num_steps):
        name = f"CFD_results.Pressure{first_file_number + k:0{width}d}"
        write_scalar_variable(cfd_dir / name, cfd, p[k], "Pressure")
    write_case(
        cfd_dir / "CFD_results.case",
        "CFD_results.geo",
        {"Pressure": "CFD_results.Pressure" + "*" * width},
        times,
        start_number=first_file_number,
    )
    write_container(mesh_container(acoustic_mesh(**(mesh_kwargs or {}))), root / "CAA_mesh.h5")
    write_material(root / "mat.xml", [AIR])
    files = {}
    for name in PLAN_FILES:
        text = plan_template(name)
        if num_steps != 675 or delta_t != 1e-5:
            text = text.replace('<numSteps value="675"/>', f'<numSteps value="{num_steps}"/>')
            text = text.replace("<numSteps>675</numSteps>", f"<numSteps>{num_steps}</numSteps>")
            text = text.replace('value="1e-05"', f'value="{delta_t!r}"').replace("<deltaT>1e-5</deltaT>", f"<deltaT>{delta_t!r}</deltaT>")
        (root / name).write_text(text)
        files[name] = root / name
    return PhonationCase(root, frequency, num_steps, delta_t, files)


def copy_plans(dest) -> list[Path]:
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    out = []
    for name in PLAN_FILES:
        with resources.as_file(resources.files("aeropipe").joinpath("data", name)) as src:
            shutil.copy(src, dest / name)
        out.append(dest / name)
    return out
