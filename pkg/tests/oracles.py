"""Independent reference computations shared by the test modules."""
import numpy as np


def in_tet(points, tet, tol=0.0):
    """Boolean mask of points inside a tetrahedron, by barycentric coordinates."""
    tet = np.asarray(tet, dtype=float)
    T = np.column_stack([tet[1] - tet[0], tet[2] - tet[0], tet[3] - tet[0]])
    lam = np.linalg.solve(T, (points - tet[0]).T).T
    return np.all(lam >= -tol, axis=1) & (lam.sum(axis=1) <= 1 + tol)


def monte_carlo_overlap(tet_a, tet_b, n, rng):
    """Volume of A ∩ B from ``n`` uniform samples in A's bounding box."""
    lo, hi = tet_a.min(axis=0), tet_a.max(axis=0)
    pts = rng.uniform(lo, hi, (n, 3))
    hit = in_tet(pts, tet_a) & in_tet(pts, tet_b)
    return np.prod(hi - lo) * hit.mean()


def random_tet(rng, scale=1.0, center=None):
    while True:
        p = rng.uniform(-scale, scale, (4, 3)) + (0 if center is None else center)
        v = np.dot(np.cross(p[1] - p[0], p[2] - p[0]), p[3] - p[0]) / 6
        if abs(v) > 0.02 * scale**3:
            return p if v > 0 else p[[0, 2, 1, 3]]


def tet_volume(p):
    return abs(np.dot(np.cross(p[1] - p[0], p[2] - p[0]), p[3] - p[0])) / 6
