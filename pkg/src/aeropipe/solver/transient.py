"""Transient solve: blended source loads, time loop, probes and outputs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config.expression import evaluate
from ..config.simulation import SimulationPlan
from ..errors import MissingSource, UnknownMaterial, UnknownNode, ValidationError
from ..io.container import ContainerDataset, StreamingResultWriter, read_container
from ..io.material import Material, parse_material
from ..io.trace import MicrophoneTrace, write_mic_trace
from ..mesh import AxisBox, KINDS, NODES_PER_KIND, Mesh, TimeGrid, build_spatial_index
from .assembly import SystemMatrices, assemble
from .hht import HHTIntegrator, TransientState
from .shape import inverse_map, shape

log = logging.getLogger(__name__)

SNAP_TOL = 1e-9
FIELD_QUANTITIES = {"acouPotential": "u", "acouPotentialD1": "v", "acouPotentialD2": "a"}


class RhsAssembler:
    """``F(t) = sum_r g_r(t) B_r s_r(t)`` with ``s_r`` linearly interpolated in time.

    Source samples outside the stored time range are clamped to the first or
    last stored step.
    """

    def __init__(self, plan: SimulationPlan, mesh: Mesh, matrices: SystemMatrices, sources: ContainerDataset | None):
        self.n = matrices.size
        self.terms = []
        for load in plan.rhs:
            if sources is None:
                raise MissingSource(f"rhsValues on {load.region!r} need a source container")
            try:
                res = sources.result(load.quantity)
            except KeyError:
                raise MissingSource(
                    f"source container lacks {load.quantity!r} (has {sources.quantity_names})"
                ) from None
            if res.location != "element":
                raise MissingSource(f"{load.quantity!r} must be an element result")
            pos = np.full(mesh.num_elements, -1, dtype=np.int64)
            covered = mesh.region_elements([r for r in res.regions if r in mesh.regions])
            if len(covered) != res.values.shape[1]:
                raise MissingSource(f"{load.quantity!r} regions do not match the mesh")
            pos[covered] = np.arange(len(covered))
            cols = pos[matrices.loads[load.region].elements]
            if np.any(cols < 0):
                raise MissingSource(f"{load.quantity!r} does not cover region {load.region!r}")
            values = res.values[:, cols]
            times = sources.time_grid.times if sources.time_grid is not None else np.zeros(len(values))
            self.terms.append((load.expression, matrices.loads[load.region].B, times, values))

    def source(self, times, values, t):
        if len(times) == 1 or t <= times[0]:
            return values[0]
        if t >= times[-1]:
            return values[-1]
        k = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[k]) / (times[k + 1] - times[k])
        if w == 0.0:
            return values[k]
        return (1.0 - w) * values[k] + w * values[k + 1]

    def __call__(self, t: float) -> np.ndarray:
        F = np.zeros(self.n)
        for expr, B, times, values in self.terms:
            g = evaluate(expr, t)
            if g != 0.0:
                F += g * (B @ self.source(times, values, t))
        return F


@dataclass
class Probe:
    name: str
    nodes: np.ndarray
    weights: np.ndarray


def locate_point(mesh: Mesh, x, index=None, tol: float = SNAP_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and interpolation weights that sample a field at ``x``.

    Snaps to a node within ``tol``; otherwise uses the shape functions of an
    element containing the point.
    """
    x = np.asarray(x, dtype=float)
    d = np.linalg.norm(mesh.nodes - x, axis=1)
    k = int(np.argmin(d))
    if d[k] <= tol:
        return np.array([k]), np.array([1.0])
    index = index or build_spatial_index(mesh)
    for e in index.query(AxisBox(x, x)):
        kind = int(mesh.kinds[e])
        nodes = mesh.conn[e, : NODES_PER_KIND[KINDS[kind]]]
        p, inside = inverse_map(kind, mesh.nodes[nodes], x)
        if inside:
            N, _ = shape(kind, p)
            return nodes.copy(), N
    raise UnknownNode(f"point {x.tolist()} is neither a mesh node nor inside an element")


@dataclass
class TransientResult:
    times: np.ndarray
    traces: dict[str, MicrophoneTrace]
    matrices: SystemMatrices
    state: TransientState
    field_values: np.ndarray | None = None
    field_path: Path | None = None
    energy: np.ndarray | None = None
    outputs: list[Path] = field(default_factory=list)


def _field_kind(plan: SimulationPlan) -> str:
    types = {r.type for r in plan.store_results} or {"acouPotentialD1"}
    for t in types:
        if t not in FIELD_QUANTITIES:
            raise ValidationError(f"stored result type {t!r} is not supported")
    if len(types) > 1:
        raise ValidationError(f"only one stored result type per run is supported, got {sorted(types)}")
    return types.pop()


def solve_transient(
    plan: SimulationPlan,
    mesh: Mesh,
    sources: ContainerDataset | None,
    materials: dict[str, Material],
    field_path=None,
    keep_field: bool = False,
    probes: dict | None = None,
    matrices: SystemMatrices | None = None,
    initial: TransientState | None = None,
    track_energy: bool = False,
) -> TransientResult:
    """March ``plan.num_steps`` HHT steps from rest.

    Probes are the plan's named nodes plus ``probes`` (name -> coordinates);
    each records the stored quantity at every step.  The full nodal field is
    streamed to ``field_path`` and/or kept in memory.
    """
    matrices = matrices or assemble(mesh, plan, materials)
    kind = _field_kind(plan)
    dt, N = plan.delta_t, plan.num_steps
    rhs = RhsAssembler(plan, mesh, matrices, sources)
    integ = HHTIntegrator(matrices.M, matrices.C, matrices.K, plan.time_step_alpha, dt)
    dofs = matrices.dofs

    points = {**plan.nodes, **(probes or {})}
    index = build_spatial_index(mesh) if points else None
    located = []
    for name, xyz in points.items():
        nodes, w = locate_point(mesh, xyz, index)
        d = dofs.node_dof[nodes]
        if np.any(d < 0):
            raise UnknownNode(f"probe {name!r} touches nodes outside the PDE regions")
        located.append(Probe(name, d, w))
    samples = np.zeros((len(located), N))

    grid = TimeGrid(start_step=1, num_steps=N, start_time=dt, delta=dt)
    writer = None
    if field_path is not None:
        writer = StreamingResultWriter(
            field_path, mesh, grid, kind, "node", [r for r, _ in plan.pde_regions], mesh.num_nodes,
            {"producer": plan.name},
        )
    kept = np.zeros((N, mesh.num_nodes)) if keep_field else None
    energy = np.zeros(N + 1) if track_energy else None

    state = initial or TransientState.zeros(matrices.size)
    if energy is not None:
        energy[0] = integ.energy(state)
    aux = matrices.pml
    phi = phi_old = np.zeros(aux.size) if aux is not None else None
    F_now = rhs(0.0)
    if aux is not None:
        F_now = F_now + aux.load(phi)
    row = np.zeros(mesh.num_nodes)
    try:
        for n in range(N):
            t_next = (n + 1) * dt
            Fs_next = rhs(t_next)
            F_next = Fs_next if aux is None else Fs_next + aux.load(2.0 * phi - phi_old)
            new = integ.step(state, F_next, F_now)
            if aux is None:
                F_now = F_next
            else:
                phi, phi_old = aux.advance(phi, state.u, new.u, dt), phi
                F_now = Fs_next + aux.load(phi)
            state = new
            q = getattr(state, FIELD_QUANTITIES[kind])
            for i, p in enumerate(located):
                samples[i, n] = p.weights @ q[p.nodes]
            if writer is not None or kept is not None:
                row[dofs.nodes] = q
                if writer is not None:
                    writer.append(row)
                if kept is not None:
                    kept[n] = row
            if energy is not None:
                energy[n + 1] = integ.energy(state)
    finally:
        if writer is not None:
            writer.close()
    times = grid.times
    traces = {p.name: MicrophoneTrace(p.name, times, samples[i], kind, dt) for i, p in enumerate(located)}
    return TransientResult(times, traces, matrices, state, kept, Path(field_path) if field_path else None, energy)


def _resolve(base: Path, name: str) -> Path:
    p = base / name
    if p.exists():
        return p
    alt = base / "results_hdf5" / name
    return alt if alt.exists() else p


def run_simulation(plan: SimulationPlan, out_dir=None) -> TransientResult:
    """Load inputs named by ``plan``, solve, and write the requested outputs.

    The source container is looked up next to the plan and then under
    ``results_hdf5/``.  Fields go to ``results_hdf5/<plan>.cfs`` and probe
    histories to ``history/<plan>-<quantity>-<node>.txt``.
    """
    base = Path(plan.base_dir)
    out = Path(out_dir) if out_dir is not None else base
    if not plan.input_files:
        raise ValidationError("simulation names no input container")
    sources = read_container(_resolve(base, plan.input_files[0]))
    mesh = sources.mesh
    if mesh is None:
        raise ValidationError("input container has no mesh")
    if plan.material_file is None:
        raise UnknownMaterial("simulation names no material file")
    materials = parse_material(base / plan.material_file)

    kinds = set(plan.outputs.values())
    want_field = "hdf5" in kinds and any(r.all_regions for r in plan.store_results)
    field_path = out / "results_hdf5" / f"{plan.name}.cfs" if want_field else None
    result = solve_transient(plan, mesh, sources, materials, field_path=field_path)
    if field_path is not None:
        result.outputs.append(field_path)

    text_ids = {i for i, k in plan.outputs.items() if k == "text"}
    for stored in plan.store_results:
        for node_name, ids in stored.nodes:
            if set(ids) & text_ids:
                path = out / "history" / f"{plan.name}-{stored.type}-{node_name}.txt"
                write_mic_trace(result.traces[node_name], path)
                result.outputs.append(path)
    return result
