"""Linear Lagrange shape functions, Gauss rules and inverse mapping.

Reference cells: tet4 on the unit simplex with vertices 0,(1,0,0),(0,1,0),
(0,0,1); hex8 on [-1, 1]^3 with the Ensight node order.  Facets are tri3
on the unit triangle and quad4 on [-1, 1]^2.
"""
from __future__ import annotations

import numpy as np

HEX_NATURAL = np.array(
    [[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1], [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]],
    dtype=float,
)
QUAD_NATURAL = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
_G = 1.0 / np.sqrt(3.0)


def tet_shape(p):
    """Values (..., 4) and reference gradients (..., 4, 3)."""
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    N = np.stack([1.0 - x - y - z, x, y, z], axis=-1)
    dN = np.broadcast_to(
        np.array([[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]), p.shape[:-1] + (4, 3)
    )
    return N, dN


def hex_shape(p):
    """Trilinear values (..., 8) and reference gradients (..., 8, 3)."""
    p = np.asarray(p, dtype=float)[..., None, :]
    s = HEX_NATURAL
    f = 1.0 + s * p  # (..., 8, 3)
    N = 0.125 * f[..., 0] * f[..., 1] * f[..., 2]
    dN = np.stack(
        [
            0.125 * s[:, 0] * f[..., 1] * f[..., 2],
            0.125 * s[:, 1] * f[..., 0] * f[..., 2],
            0.125 * s[:, 2] * f[..., 0] * f[..., 1],
        ],
        axis=-1,
    )
    return N, dN


def shape(kind: int, p):
    """``kind`` 0 for tet4, 1 for hex8."""
    return tet_shape(p) if kind == 0 else hex_shape(p)


def tri_shape(p):
    p = np.asarray(p, dtype=float)
    u, v = p[..., 0], p[..., 1]
    N = np.stack([1.0 - u - v, u, v], axis=-1)
    dN = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), p.shape[:-1] + (3, 2))
    return N, dN


def quad_shape(p):
    p = np.asarray(p, dtype=float)[..., None, :]
    s = QUAD_NATURAL
    f = 1.0 + s * p
    N = 0.25 * f[..., 0] * f[..., 1]
    dN = np.stack([0.25 * s[:, 0] * f[..., 1], 0.25 * s[:, 1] * f[..., 0]], axis=-1)
    return N, dN


def facet_shape(n_nodes: int, p):
    return tri_shape(p) if n_nodes == 3 else quad_shape(p)


# Quadrature rules: (points, weights).  Weights sum to the reference measure.
def hex_rule():
    g = np.array([-_G, _G])
    pts = np.array([[a, b, c] for c in g for b in g for a in g])
    return pts, np.ones(8)


def tet_rule(points: int = 1):
    if points == 1:
        return np.array([[0.25, 0.25, 0.25]]), np.array([1.0 / 6.0])
    a, b = 0.5854101966249685, 0.1381966011250105
    pts = np.array([[b, b, b], [a, b, b], [b, a, b], [b, b, a]])
    return pts, np.full(4, 1.0 / 24.0)


def quad_rule():
    g = np.array([-_G, _G])
    return np.array([[a, b] for b in g for a in g]), np.ones(4)


def tri_rule():
    return np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]]), np.full(3, 1.0 / 6.0)


def volume_rule(kind: int, mass: bool = False):
    """Hex: 2x2x2 Gauss.  Tet: centroid rule for gradients, 4 points for products."""
    if kind == 1:
        return hex_rule()
    return tet_rule(4 if mass else 1)


def facet_rule(n_nodes: int):
    return tri_rule() if n_nodes == 3 else quad_rule()


def jacobians(X, dN):
    """Jacobians for element coordinates ``X`` (ne, nn, 3) at reference gradients ``dN`` (nq, nn, 3).

    Returns ``(J, detJ, grad)`` with ``grad`` the physical shape gradients
    (ne, nq, nn, 3).
    """
    J = np.einsum("eai,qaj->eqij", X, dN)
    det = np.linalg.det(J)
    inv = np.linalg.inv(np.where(np.abs(det)[..., None, None] > 0, J, np.eye(3)))
    grad = np.einsum("qaj,eqjk->eqak", dN, inv)
    return J, det, grad


def facet_geometry(Xf, dN):
    """Surface measure and unit normal on facets ``Xf`` (nf, nn, 3)."""
    T = np.einsum("fai,qaj->fqij", Xf, dN)  # tangents as columns
    n = np.cross(T[..., 0], T[..., 1])
    area = np.linalg.norm(n, axis=-1)
    return area, n / np.where(area > 0, area, 1.0)[..., None]


def inverse_map(kind: int, X, x, tol: float = 1e-12, max_iter: int = 30):
    """Reference coordinates of physical point ``x`` in one element.

    Returns ``(p, inside)``; ``inside`` allows a 1e-9 slack on the reference
    bounds.  Hex uses Newton iteration started at the centre.
    """
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    if kind == 0:
        A = (X[1:] - X[0]).T
        p = np.linalg.solve(A, x - X[0])
        inside = bool(np.all(p >= -1e-9) and p.sum() <= 1.0 + 1e-9)
        return p, inside
    p = np.zeros(3)
    scale = np.max(np.ptp(X, axis=0))
    for _ in range(max_iter):
        N, dN = hex_shape(p)
        r = N @ X - x
        if np.linalg.norm(r) <= tol * scale:
            break
        J = X.T @ dN
        try:
            p = p - np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            return p, False
        if np.any(np.abs(p) > 10.0):
            return p, False
    N, _ = hex_shape(p)
    ok = np.linalg.norm(N @ X - x) <= 1e-9 * scale
    return p, bool(ok and np.all(np.abs(p) <= 1.0 + 1e-9))
