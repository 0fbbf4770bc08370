"""Exact tetrahedron-tetrahedron intersection volumes.

The intersection polytope is kept as a list of tetrahedra.  Clipping one tet
by a plane leaves nothing, a tet, or a triangular prism (tiled by 3 tets), so
after the 4 face planes of the second tet at most 81 pieces remain.
"""
import numpy as np
from numba import njit

_MAX_PIECES = 81
_FACES = np.array([[0, 1, 2, 3], [0, 3, 1, 2], [1, 3, 2, 0], [0, 2, 3, 1]])  # (a, b, c, opposite)


# Kernels index whole buffers with scalars only; slicing out per-tet views
# costs more than the arithmetic at this size.


@njit(cache=True, nogil=True)
def _tet_volume(P, t):
    """Signed volume of tet ``P[t]``."""
    u0, u1, u2 = P[t, 1, 0] - P[t, 0, 0], P[t, 1, 1] - P[t, 0, 1], P[t, 1, 2] - P[t, 0, 2]
    v0, v1, v2 = P[t, 2, 0] - P[t, 0, 0], P[t, 2, 1] - P[t, 0, 1], P[t, 2, 2] - P[t, 0, 2]
    w0, w1, w2 = P[t, 3, 0] - P[t, 0, 0], P[t, 3, 1] - P[t, 0, 1], P[t, 3, 2] - P[t, 0, 2]
    return (u0 * (v1 * w2 - v2 * w1) - u1 * (v0 * w2 - v2 * w0) + u2 * (v0 * w1 - v1 * w0)) / 6.0


@njit(cache=True, nogil=True)
def _face_plane(B, b, f, plane):
    """Outward unit plane ``n.x = off`` of face ``f`` of tet ``B[b]``, stored as ``plane = (n, off)``.

    Returns False for a degenerate face.
    """
    ia, ib, ic, io = _FACES[f, 0], _FACES[f, 1], _FACES[f, 2], _FACES[f, 3]
    u0, u1, u2 = B[b, ib, 0] - B[b, ia, 0], B[b, ib, 1] - B[b, ia, 1], B[b, ib, 2] - B[b, ia, 2]
    v0, v1, v2 = B[b, ic, 0] - B[b, ia, 0], B[b, ic, 1] - B[b, ia, 1], B[b, ic, 2] - B[b, ia, 2]
    n0, n1, n2 = u1 * v2 - u2 * v1, u2 * v0 - u0 * v2, u0 * v1 - u1 * v0
    s = np.sqrt(n0 * n0 + n1 * n1 + n2 * n2)
    if s == 0.0:
        return False
    n0, n1, n2 = n0 / s, n1 / s, n2 / s
    off = n0 * B[b, ia, 0] + n1 * B[b, ia, 1] + n2 * B[b, ia, 2]
    if n0 * B[b, io, 0] + n1 * B[b, io, 1] + n2 * B[b, io, 2] - off > 0.0:
        n0, n1, n2, off = -n0, -n1, -n2, -off
    plane[0], plane[1], plane[2], plane[3] = n0, n1, n2, off
    return True


@njit(cache=True, nogil=True)
def _classify(A, a, B, b, plane):
    """-1 if a face plane of ``B[b]`` separates ``A[a]``, 1 if ``A[a]`` lies inside it, else 0."""
    inside = True
    for f in range(4):
        if not _face_plane(B, b, f, plane):
            return -1
        n_out = 0
        for i in range(4):
            if plane[0] * A[a, i, 0] + plane[1] * A[a, i, 1] + plane[2] * A[a, i, 2] - plane[3] > 0.0:
                n_out += 1
        if n_out == 4:
            return -1
        if n_out:
            inside = False
    return 1 if inside else 0


@njit(cache=True, nogil=True)
def _emit(out, m, k, T, t, d, i, o):
    # vertex k of piece m: where edge (i, o) of T[t] crosses the plane, or vertex i when o < 0
    if o < 0:
        for c in range(3):
            out[m, k, c] = T[t, i, c]
    else:
        w = d[i] / (d[i] - d[o])
        for c in range(3):
            out[m, k, c] = T[t, i, c] + w * (T[t, o, c] - T[t, i, c])


@njit(cache=True, nogil=True)
def _prism(out, m, T, t, d, verts):
    # verts holds 6 (i, o) pairs for a0 a1 a2 b0 b1 b2; 3 tets tile the prism
    for q in range(3):
        for k in range(4):
            _emit(out, m + q, k, T, t, d, verts[q + k, 0], verts[q + k, 1])
    return m + 3


@njit(cache=True, nogil=True)
def _clip_tet(T, t, plane, out, m, d, ins, outs, verts):
    ni = 0
    no = 0
    for i in range(4):
        d[i] = plane[0] * T[t, i, 0] + plane[1] * T[t, i, 1] + plane[2] * T[t, i, 2] - plane[3]
        if d[i] <= 0.0:
            ins[ni] = i
            ni += 1
        else:
            outs[no] = i
            no += 1
    if ni == 0:
        return m
    if ni == 4:
        for k in range(4):
            _emit(out, m, k, T, t, d, k, -1)
        return m + 1
    if ni == 1:
        _emit(out, m, 0, T, t, d, ins[0], -1)
        for k in range(3):
            _emit(out, m, k + 1, T, t, d, ins[0], outs[k])
        return m + 1
    if ni == 3:
        for k in range(3):
            verts[k, 0], verts[k, 1] = ins[k], -1
            verts[k + 3, 0], verts[k + 3, 1] = ins[k], outs[0]
        return _prism(out, m, T, t, d, verts)
    verts[0, 0], verts[0, 1] = ins[0], -1
    verts[1, 0], verts[1, 1] = ins[0], outs[0]
    verts[2, 0], verts[2, 1] = ins[0], outs[1]
    verts[3, 0], verts[3, 1] = ins[1], -1
    verts[4, 0], verts[4, 1] = ins[1], outs[0]
    verts[5, 0], verts[5, 1] = ins[1], outs[1]
    return _prism(out, m, T, t, d, verts)


@njit(cache=True, nogil=True)
def _workspace():
    return (np.empty((_MAX_PIECES, 4, 3)), np.empty((_MAX_PIECES, 4, 3)), np.empty(4),
            np.empty(4, dtype=np.int64), np.empty(4, dtype=np.int64), np.empty((6, 2), dtype=np.int64),
            np.empty(4))


@njit(cache=True, nogil=True)
def _clip_volume(A, a, B, b, ws):
    """Volume of ``A[a]`` intersected with ``B[b]``."""
    cur, nxt, d, ins, outs, verts, plane = ws
    # cheap exact answers before splitting into pieces
    k = _classify(A, a, B, b, plane)
    if k == -1:
        return 0.0
    if k == 1:
        return abs(_tet_volume(A, a))
    k = _classify(B, b, A, a, plane)
    if k == -1:
        return 0.0
    if k == 1:
        return abs(_tet_volume(B, b))
    for i in range(4):
        for c in range(3):
            cur[0, i, c] = A[a, i, c]
    n = 1
    for f in range(4):
        _face_plane(B, b, f, plane)
        m = 0
        for t in range(n):
            m = _clip_tet(cur, t, plane, nxt, m, d, ins, outs, verts)
        if m == 0:
            return 0.0
        cur, nxt = nxt, cur
        n = m
    vol = 0.0
    for t in range(n):
        vol += abs(_tet_volume(cur, t))
    return vol


@njit(cache=True, nogil=True)
def _pair_volumes(tgt_tets, tgt_count, src_tets, src_count, ti, si):
    """Intersection volume for each (target, source) element pair.

    ``*_tets`` are flat ``(n * 6, 4, 3)`` stacks; element ``e`` owns rows
    ``6 e .. 6 e + count[e] - 1``.
    """
    out = np.zeros(len(ti))
    ws = _workspace()
    for p in range(len(ti)):
        t = ti[p]
        s = si[p]
        acc = 0.0
        for a in range(6 * t, 6 * t + tgt_count[t]):
            for b in range(6 * s, 6 * s + src_count[s]):
                acc += _clip_volume(tgt_tets, a, src_tets, b, ws)
        out[p] = acc
    return out


def tet_clip_volume(tet_a, tet_b) -> float:
    """Volume of the intersection of two tetrahedra given as (4, 3) vertex arrays."""
    A = np.ascontiguousarray(tet_a, dtype=float).reshape(1, 4, 3)
    B = np.ascontiguousarray(tet_b, dtype=float).reshape(1, 4, 3)
    return float(_clip_volume(A, 0, B, 0, _workspace()))


def pair_volumes(tgt_tets, tgt_count, src_tets, src_count, ti, si) -> np.ndarray:
    """Batch driver; ``*_tets`` are ``(n, 6, 4, 3)`` per-element tet stacks."""
    return _pair_volumes(
        np.ascontiguousarray(tgt_tets, dtype=float).reshape(-1, 4, 3),
        np.ascontiguousarray(tgt_count, dtype=np.int64),
        np.ascontiguousarray(src_tets, dtype=float).reshape(-1, 4, 3),
        np.ascontiguousarray(src_count, dtype=np.int64),
        np.ascontiguousarray(ti, dtype=np.int64),
        np.ascontiguousarray(si, dtype=np.int64),
    )
