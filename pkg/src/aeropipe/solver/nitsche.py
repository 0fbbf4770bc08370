"""Symmetric Nitsche coupling across a non-conforming interface.

With ``[v] = v_slave - v_master``, ``{q} = (q_slave + q_master) / 2`` and
``n`` the outward normal of the slave side, the bilinear form added to the
stiffness is::

    - int [v] {dpsi/dn} - int [psi] {dv/dn} + (beta / h_f) int [v] [psi]

integrated on slave facets.  Master traces come from projecting each slave
quadrature point along ``n`` onto the master facets.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import InterfaceMismatch, ValidationError
from ..mesh import AxisBox, KINDS, NODES_PER_KIND, Mesh, SpatialIndex
from .assembly import DofMap, facet_quadrature
from .shape import inverse_map, shape

MISS_LIMIT = 0.01


def _facet_triangles(mesh: Mesh, facets):
    tris, owner = [], []
    for i, (_, _, fn) in enumerate(facets):
        p = mesh.nodes[fn]
        tris.append(p[[0, 1, 2]])
        owner.append(i)
        if len(fn) == 4:
            tris.append(p[[0, 2, 3]])
            owner.append(i)
    return np.array(tris).reshape(-1, 3, 3), np.array(owner, dtype=np.int64)


def _ray_hits(origin, direction, tris, eps=1e-9):
    """Signed distances of ray/triangle intersections (nan when missed)."""
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    pv = np.cross(direction, e2)
    det = np.einsum("ti,ti->t", e1, pv)
    ok = np.abs(det) > 1e-30
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = origin - tris[:, 0]
    u = np.einsum("ti,ti->t", tv, pv) * inv
    qv = np.cross(tv, e1)
    v = np.einsum("i,ti->t", direction, qv) * inv
    t = np.einsum("ti,ti->t", e2, qv) * inv
    hit = ok & (u >= -eps) & (v >= -eps) & (u + v <= 1.0 + eps)
    return np.where(hit, t, np.nan)


def _trace(mesh: Mesh, e: int, x):
    """Shape values and physical gradients of element ``e`` at point ``x``."""
    kind = int(mesh.kinds[e])
    nn = NODES_PER_KIND[KINDS[kind]]
    nodes = mesh.conn[e, :nn]
    X = mesh.nodes[nodes]
    p, _ = inverse_map(kind, X, x)
    N, dN = shape(kind, p)
    J = X.T @ dN
    grad = dN @ np.linalg.inv(J)
    return nodes, N, grad


def assemble_nitsche(mesh: Mesh, master_facets, slave_facets, factor: float, dofs: DofMap) -> sp.csr_matrix:
    """Coupling matrix (dofs.size square, symmetric)."""
    if not factor > 0:
        raise ValidationError(f"Nitsche factor must be positive, got {factor}")
    n = dofs.size
    if not slave_facets or not master_facets:
        raise InterfaceMismatch("interface has an empty side")
    tris, owner = _facet_triangles(mesh, master_facets)
    index = SpatialIndex(tris.min(axis=1), tris.max(axis=1))
    rows, cols, vals = [], [], []
    total = missed = 0
    for nn in (3, 4):
        sel = [f for f in slave_facets if len(f[2]) == nn]
        if not sel:
            continue
        fn = np.array([f[2] for f in sel], dtype=np.int64)
        pts, _, wdet, normal = facet_quadrature(mesh, fn)
        for i, (e_s, _, _) in enumerate(sel):
            corners = mesh.nodes[fn[i]]
            h = max(np.linalg.norm(a - b) for a in corners for b in corners)
            for q in range(pts.shape[1]):
                total += 1
                x, nrm = pts[i, q], normal[i, q]
                reach = AxisBox(x - h, x + h)
                cand = index.query(reach)
                if cand.size == 0:
                    missed += 1
                    continue
                t = _ray_hits(x, nrm, tris[cand])
                if np.all(np.isnan(t)):
                    missed += 1
                    continue
                k = int(np.nanargmin(np.abs(t)))
                if abs(t[k]) > h:
                    missed += 1
                    continue
                e_m = master_facets[owner[cand[k]]][0]
                ns, Ns, Gs = _trace(mesh, e_s, x)
                nm, Nm, Gm = _trace(mesh, e_m, x + t[k] * nrm)
                loc = dofs.node_dof[np.concatenate([ns, nm])]
                jump = np.concatenate([Ns, -Nm])
                flux = 0.5 * np.concatenate([Gs @ nrm, Gm @ nrm])
                w = wdet[i, q]
                block = w * (-np.outer(jump, flux) - np.outer(flux, jump) + (factor / h) * np.outer(jump, jump))
                rows.append(np.repeat(loc, len(loc)))
                cols.append(np.tile(loc, len(loc)))
                vals.append(block.ravel())
    if total and missed > MISS_LIMIT * total:
        raise InterfaceMismatch(f"{missed} of {total} interface points do not project onto the master side")
    if not vals:
        return sp.csr_matrix((n, n))
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
