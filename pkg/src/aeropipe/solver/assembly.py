"""Finite element matrices for the acoustic potential wave equation.

    M psi'' + C psi' + K psi = F

with M = int N N / c^2, K = int grad N . grad N (plus interface coupling),
C = boundary impedance and layer damping terms, F the blended source load.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..config.simulation import AbsorbingBC, PmlSpec, SimulationPlan
from ..errors import InvertedElement, UnassignedElement, UnknownMaterial, UnknownRegion, ValidationError
from ..io.material import Material
from ..mesh import AxisBox, Mesh, NODES_PER_KIND, KINDS, boundary_facets
from .shape import facet_geometry, facet_rule, facet_shape, jacobians, shape, volume_rule

log = logging.getLogger(__name__)

PML_REGULARIZATION = 1e-3


@dataclass
class DofMap:
    """Active nodes (those touched by a PDE element) and their equation numbers."""

    nodes: np.ndarray
    node_dof: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_elements(cls, mesh: Mesh, elements) -> "DofMap":
        conn = mesh.conn[np.asarray(elements, dtype=np.int64)]
        nodes = np.unique(conn[conn >= 0])
        node_dof = np.full(mesh.num_nodes, -1, dtype=np.int64)
        node_dof[nodes] = np.arange(len(nodes))
        return cls(nodes, node_dof)


def _groups(mesh: Mesh, elements):
    """Yield ``(kind, element_ids, positions)`` per element kind."""
    elements = np.asarray(elements, dtype=np.int64)
    for k in range(len(KINDS)):
        pos = np.nonzero(mesh.kinds[elements] == k)[0]
        if pos.size:
            yield k, elements[pos], pos


def _scatter(dofs, blocks, n) -> sp.csr_matrix:
    nn = dofs.shape[1]
    rows = np.repeat(dofs, nn, axis=1).ravel()
    cols = np.tile(dofs, (1, nn)).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _geometry(mesh: Mesh, kind: int, els, mass: bool):
    nn = NODES_PER_KIND[KINDS[kind]]
    X = mesh.nodes[mesh.conn[els, :nn]]
    pts, w = volume_rule(kind, mass)
    N, dN = shape(kind, pts)
    _, det, grad = jacobians(X, dN)
    bad = np.nonzero(det <= 0.0)[0]
    if bad.size:
        raise InvertedElement(f"element {els[bad[0]]} has a non-positive Jacobian ({det[bad].min():.3e})")
    return X, N, grad, det * w


def volume_matrices(mesh: Mesh, elements, dofs: DofMap, mass_coef) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Mass with per-element coefficient ``mass_coef`` and Laplace stiffness."""
    n = dofs.size
    M = sp.csr_matrix((n, n))
    K = sp.csr_matrix((n, n))
    mass_coef = np.broadcast_to(np.asarray(mass_coef, dtype=float), (len(elements),))
    for kind, els, pos in _groups(mesh, elements):
        nn = NODES_PER_KIND[KINDS[kind]]
        d = dofs.node_dof[mesh.conn[els, :nn]]
        _, _, grad, wdet = _geometry(mesh, kind, els, mass=False)
        K = K + _scatter(d, np.einsum("eq,eqak,eqbk->eab", wdet, grad, grad), n)
        _, N, _, wdet = _geometry(mesh, kind, els, mass=True)
        M = M + _scatter(d, np.einsum("eq,qa,qb->eab", wdet * mass_coef[pos, None], N, N), n)
    return M, K


def load_matrix(mesh: Mesh, elements, dofs: DofMap) -> sp.csr_matrix:
    """``B[i, j] = int N_i dV`` over the j-th of ``elements``."""
    rows, cols, vals = [], [], []
    for kind, els, pos in _groups(mesh, elements):
        nn = NODES_PER_KIND[KINDS[kind]]
        _, N, _, wdet = _geometry(mesh, kind, els, mass=True)
        rows.append(dofs.node_dof[mesh.conn[els, :nn]].ravel())
        cols.append(np.repeat(pos, nn))
        vals.append((wdet @ N).ravel())
    if not rows:
        return sp.csr_matrix((dofs.size, len(elements)))
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dofs.size, len(elements))
    ).tocsr()


def facet_quadrature(mesh: Mesh, facet_nodes: np.ndarray):
    """Points, shape values and surface weights on facets with equal node count."""
    nn = facet_nodes.shape[1]
    pts, w = facet_rule(nn)
    N, dN = facet_shape(nn, pts)
    Xf = mesh.nodes[facet_nodes]
    area, normal = facet_geometry(Xf, dN)
    return np.einsum("qa,fai->fqi", N, Xf), N, area * w, normal


def facet_mass(mesh: Mesh, facets, dofs: DofMap, coef) -> sp.csr_matrix:
    """``int coef N N dGamma`` over ``facets`` (list of (element, face, nodes))."""
    n = dofs.size
    out = sp.csr_matrix((n, n))
    coef = np.broadcast_to(np.asarray(coef, dtype=float), (len(facets),))
    for nn in (3, 4):
        idx = [i for i, f in enumerate(facets) if len(f[2]) == nn]
        if not idx:
            continue
        fn = np.array([facets[i][2] for i in idx], dtype=np.int64)
        _, N, wdet, _ = facet_quadrature(mesh, fn)
        blocks = np.einsum("fq,qa,qb->fab", wdet * coef[idx, None], N, N)
        out = out + _scatter(dofs.node_dof[fn], blocks, n)
    return out


def pml_sigma(points, box: AxisBox, thick_lo, thick_hi, damp_factor: float, c):
    """Inverse-distance damping per direction, shape ``points.shape``.

    ``sigma_d = damp * c / (L_d - xi_d + eps * L_d)`` where ``xi_d`` is the
    penetration depth past the propagation box and ``L_d`` the layer
    thickness on that side.
    """
    x = np.asarray(points, dtype=float)
    c = np.asarray(c, dtype=float)[..., None] if np.ndim(c) else c
    below = np.maximum(box.min - x, 0.0)
    above = np.maximum(x - box.max, 0.0)
    L = np.where(above > 0, thick_hi, thick_lo)
    xi = np.maximum(below, above)
    L_safe = np.where(L > 0, L, 1.0)
    sigma = damp_factor * c / (L_safe - np.minimum(xi, L_safe) + PML_REGULARIZATION * L_safe)
    return np.where((xi > 0) & (L > 0), sigma, 0.0)


@dataclass
class PmlAuxiliary:
    """Stretched normal-flux memory of the absorbing layer.

    One scalar ``phi`` per (quadrature point, direction) with nonzero
    damping obeys ``phi' + sigma phi = sigma d psi / dx_d``; its load on the
    system is ``int (d N / dx_d) phi``.
    """

    D: sp.csr_matrix
    weight: np.ndarray
    sigma: np.ndarray

    @property
    def size(self) -> int:
        return len(self.sigma)

    def load(self, phi) -> np.ndarray:
        return self.D.T @ (self.weight * phi)

    def advance(self, phi, u_old, u_new, dt: float) -> np.ndarray:
        decay = np.exp(-self.sigma * dt)
        return decay * phi + (1.0 - decay) * (self.D @ (0.5 * (u_old + u_new)))


def layer_thickness(mesh: Mesh, elements, box: AxisBox):
    pts = mesh.nodes[np.unique(mesh.conn[elements][mesh.conn[elements] >= 0])]
    return np.maximum(box.min - pts.min(axis=0), 0.0), np.maximum(pts.max(axis=0) - box.max, 0.0)


def pml_matrices(mesh: Mesh, elements, dofs: DofMap, spec: PmlSpec, c_elem):
    """Damping matrix ``int (sum_d sigma_d) / c^2 N N`` and the flux auxiliary."""
    elements = np.asarray(elements, dtype=np.int64)
    _check_outside(mesh, elements, spec.box)
    lo, hi = layer_thickness(mesh, elements, spec.box)
    n = dofs.size
    C = sp.csr_matrix((n, n))
    rows, cols, vals, weight, sigma = [], [], [], [], []
    entry = 0
    c_elem = np.broadcast_to(np.asarray(c_elem, dtype=float), (len(elements),))
    for kind, els, pos in _groups(mesh, elements):
        nn = NODES_PER_KIND[KINDS[kind]]
        d = dofs.node_dof[mesh.conn[els, :nn]]
        c = c_elem[pos]
        X, N, _, wdet = _geometry(mesh, kind, els, mass=True)
        sig = pml_sigma(np.einsum("qa,eai->eqi", N, X), spec.box, lo, hi, spec.damp_factor, c[:, None])
        C = C + _scatter(d, np.einsum("eq,qa,qb->eab", wdet * sig.sum(-1) / c[:, None] ** 2, N, N), n)
        # flux memory lives on the stiffness rule points
        X, _, grad, wdet = _geometry(mesh, kind, els, mass=False)
        pts, _ = volume_rule(kind)
        Nk, _ = shape(kind, pts)
        sig = pml_sigma(np.einsum("qa,eai->eqi", Nk, X), spec.box, lo, hi, spec.damp_factor, c[:, None])
        e_i, q_i, dir_i = np.nonzero(sig > 0)
        m = len(e_i)
        rows.append(np.repeat(np.arange(entry, entry + m), nn))
        cols.append(d[e_i].ravel())
        vals.append(grad[e_i, q_i, :, dir_i].ravel())
        weight.append(wdet[e_i, q_i])
        sigma.append(sig[e_i, q_i, dir_i])
        entry += m
    D = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(entry, n)
    ).tocsr()
    return C, PmlAuxiliary(D, np.concatenate(weight), np.concatenate(sigma))


def _check_outside(mesh: Mesh, elements, box: AxisBox, tol: float = 1e-9):
    pts = mesh.nodes[mesh.conn[elements]]  # padded entries repeat node 0 harmlessly
    pts = np.where((mesh.conn[elements] >= 0)[..., None], pts, pts[:, :1])
    span = tol * max(1.0, float(np.max(box.max - box.min)))
    out = np.all(pts >= box.max - span, axis=1) | np.all(pts <= box.min + span, axis=1)
    bad = np.nonzero(~np.any(out, axis=1))[0]
    if bad.size:
        raise ValidationError(f"layer element {elements[bad[0]]} lies inside the propagation box")


def interface_facets(mesh: Mesh, boundary, node_set: str):
    """Boundary facets whose nodes all belong to ``node_set``."""
    if node_set not in mesh.node_sets:
        raise UnknownRegion(f"mesh has no node set {node_set!r} for the interface")
    members = np.zeros(mesh.num_nodes, dtype=bool)
    members[mesh.node_sets[node_set]] = True
    return [f for f in boundary if members[f[2]].all()]


def absorbing_facets(mesh: Mesh, boundary, bc: AbsorbingBC, exclude_sets=()):
    """Facets that carry the impedance condition.

    Uses the node set named after the condition when the mesh has one;
    otherwise every outer facet of the volume region that is not part of a
    non-conforming interface.
    """
    if bc.volume_region not in mesh.regions:
        raise UnknownRegion(f"mesh has no region {bc.volume_region!r}")
    in_region = np.zeros(mesh.num_elements, dtype=bool)
    in_region[mesh.regions[bc.volume_region]] = True
    cand = [f for f in boundary if in_region[f[0]]]
    if bc.name in mesh.node_sets:
        return interface_facets(mesh, cand, bc.name)
    skip = np.zeros(mesh.num_nodes, dtype=bool)
    for s in exclude_sets:
        if s in mesh.node_sets:
            skip[mesh.node_sets[s]] = True
    return [f for f in cand if not skip[f[2]].all()]


@dataclass
class RegionLoad:
    region: str
    elements: np.ndarray
    B: sp.csr_matrix


@dataclass
class SystemMatrices:
    M: sp.csr_matrix
    K: sp.csr_matrix
    C: sp.csr_matrix
    dofs: DofMap
    speed: np.ndarray
    loads: dict[str, RegionLoad] = field(default_factory=dict)
    pml: PmlAuxiliary | None = None

    @property
    def size(self) -> int:
        return self.dofs.size


def assemble(mesh: Mesh, plan: SimulationPlan, materials: dict[str, Material]) -> SystemMatrices:
    from .nitsche import assemble_nitsche

    names = [r for r, _ in plan.pde_regions]
    for r in names:
        if r not in mesh.regions:
            raise UnknownRegion(f"PDE region {r!r} is not in the mesh (has {list(mesh.regions)})")
    elements = mesh.region_elements(names)
    if len(elements) != mesh.num_elements:
        assigned = np.zeros(mesh.num_elements, dtype=bool)
        assigned[elements] = True
        e = int(np.nonzero(~assigned)[0][0])
        raise UnassignedElement(f"element {e} (region {mesh.region_of(e)!r}) is not in any PDE region")
    speed = np.empty(mesh.num_elements)
    for r in names:
        mat = plan.regions.get(r)
        if mat not in materials:
            raise UnknownMaterial(f"region {r!r} uses material {mat!r}, not in the material file")
        speed[mesh.regions[r]] = materials[mat].speed_of_sound

    dofs = DofMap.from_elements(mesh, elements)
    M, K = volume_matrices(mesh, elements, dofs, 1.0 / speed[elements] ** 2)
    C = sp.csr_matrix(M.shape)

    pml = None
    for r, damping in plan.pde_regions:
        if damping is None:
            continue
        els = mesh.regions[r]
        Cp, aux = pml_matrices(mesh, els, dofs, plan.pml[damping], speed[els])
        C = C + Cp
        pml = aux if pml is None else _merge_aux(pml, aux)

    boundary = boundary_facets(mesh, elements)
    nc_sets = [s for nc in plan.nc_interfaces for s in (nc.master, nc.slave)]
    for bc in plan.absorbing_bcs:
        facets = absorbing_facets(mesh, boundary, bc, nc_sets)
        if not facets:
            log.warning("absorbing condition %r selects no facets", bc.name)
            continue
        C = C + facet_mass(mesh, facets, dofs, 1.0 / speed[[f[0] for f in facets]])

    for nc in plan.nc_interfaces:
        master = interface_facets(mesh, boundary, nc.master)
        slave = interface_facets(mesh, boundary, nc.slave)
        K = K + assemble_nitsche(mesh, master, slave, nc.nitsche_factor, dofs)

    loads = {}
    for load in plan.rhs:
        els = mesh.regions[load.region]
        loads[load.region] = RegionLoad(load.region, els, load_matrix(mesh, els, dofs))
    return SystemMatrices(M.tocsr(), K.tocsr(), C.tocsr(), dofs, speed, loads, pml)


def _merge_aux(a: PmlAuxiliary, b: PmlAuxiliary) -> PmlAuxiliary:
    return PmlAuxiliary(
        sp.vstack([a.D, b.D]).tocsr(), np.concatenate([a.weight, b.weight]), np.concatenate([a.sigma, b.sigma])
    )
