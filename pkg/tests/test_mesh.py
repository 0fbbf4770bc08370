import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aeropipe.errors import DegenerateElement, InvalidMesh
from aeropipe.mesh import (
    HEX_TETS, AxisBox, Mesh, TimeGrid, boundary_facets, build_spatial_index,
    element_bounding_box, element_volume, voxel_mesh,
)
from aeropipe.solver.shape import HEX_NATURAL

from conftest import UNIT_CUBE, UNIT_TET
from oracles import in_tet


def _hex(nodes):
    return Mesh(nodes, [("hex8", range(8))], {"A": [0]})


def test_unit_cube_volume(cube):
    assert element_volume(cube, 0) == pytest.approx(1.0, rel=1e-14)


def test_unit_tet_volume(tet):
    assert element_volume(tet, 0) == pytest.approx(1 / 6, rel=1e-14)


def test_perturbed_hex_matches_monte_carlo():
    # the hex solid is the canonical 6-tet polyhedron; sample its bounding box
    rng = np.random.default_rng(7)
    for _ in range(3):
        X = UNIT_CUBE + rng.uniform(-0.1, 0.1, (8, 3))
        vol = element_volume(_hex(X), 0)
        lo, hi = X.min(axis=0), X.max(axis=0)
        pts = rng.uniform(lo, hi, (1_000_000, 3))
        mc = np.prod(hi - lo) * np.any([in_tet(pts, t) for t in X[HEX_TETS]], axis=0).mean()
        assert vol == pytest.approx(mc, rel=5e-3)


def test_degenerate_hex_rejected():
    flat = UNIT_CUBE.copy()
    flat[4:, 2] = 0.0
    with pytest.raises(DegenerateElement):
        _hex(flat)


def test_inverted_tet_rejected():
    with pytest.raises(DegenerateElement):
        Mesh(UNIT_TET[[0, 2, 1, 3]], [("tet4", range(4))], {"A": [0]})


def _rotations():
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product([1, -1], repeat=3):
            R = np.zeros((3, 3))
            R[range(3), perm] = signs
            if np.linalg.det(R) > 0:
                mats.append(R)
    return mats


def test_hex_volume_invariant_under_relabelling():
    rng = np.random.default_rng(3)
    A = np.eye(3) + rng.uniform(-0.3, 0.3, (3, 3))
    X = ((HEX_NATURAL + 1) / 2) @ A.T + rng.uniform(-1, 1, 3)  # planar faces
    ref = element_volume(_hex(X), 0)
    assert ref == pytest.approx(np.linalg.det(A), rel=1e-12)
    rots = _rotations()
    assert len(rots) == 24
    for R in rots:
        target = HEX_NATURAL @ R.T
        perm = [int(np.nonzero(np.all(HEX_NATURAL == t, axis=1))[0][0]) for t in target]
        assert element_volume(_hex(X[perm]), 0) == pytest.approx(ref, rel=1e-12)


def test_voxel_box_volume_sum():
    xs = np.linspace(0.19, 0.275, 8)
    ys = np.linspace(-0.051, 0.069, 5)
    zs = np.linspace(-0.0525, 0.0675, 6)
    m = voxel_mesh(xs, ys, zs)
    total = sum(element_volume(m, e) for e in range(m.num_elements))
    assert total == pytest.approx(0.085 * 0.12 * 0.12, rel=1e-12)


def test_bounding_boxes(cube, tet):
    for m in (cube, tet):
        b = element_bounding_box(m, 0)
        assert np.all(b.min == 0) and np.all(b.max == 1)
    shift = np.array([0.19, -0.051, -0.0525])
    b = element_bounding_box(_hex(UNIT_CUBE + shift), 0)
    np.testing.assert_array_equal(b.min, shift)


def test_axis_box_rejects_inverted_extent():
    with pytest.raises(Exception):
        AxisBox([1, 0, 0], [0, 1, 1])


def test_index_whole_and_empty():
    g = np.linspace(0, 1, 11)
    m = voxel_mesh(g, g, g)
    idx = build_spatial_index(m)
    np.testing.assert_array_equal(idx.query(AxisBox([-1] * 3, [2] * 3)), np.arange(m.num_elements))
    assert idx.query(AxisBox([5] * 3, [6] * 3)).size == 0


def test_index_single_voxel_interior():
    g = np.linspace(0, 1, 11)
    m = voxel_mesh(g, g, g)
    idx = build_spatial_index(m)
    e = 437
    b = element_bounding_box(m, e)
    c = (b.min + b.max) / 2
    hits = idx.query(AxisBox(c - 0.01, c + 0.01))
    np.testing.assert_array_equal(hits, [e])


def _brute(m, box):
    out = []
    for e in range(m.num_elements):
        if element_bounding_box(m, e).intersects(box):
            out.append(e)
    return np.array(out, dtype=np.int64)


@given(
    st.integers(1, 5), st.integers(1, 5), st.integers(1, 5),
    st.lists(st.floats(-0.5, 1.5), min_size=6, max_size=6),
    st.integers(0, 2**31 - 1),
)
def test_index_matches_brute_force(nx, ny, nz, corners, seed):
    rng = np.random.default_rng(seed)
    xs = np.cumsum(rng.uniform(0.1, 0.5, nx + 1))
    ys = np.cumsum(rng.uniform(0.1, 0.5, ny + 1))
    zs = np.cumsum(rng.uniform(0.1, 0.5, nz + 1))
    m = voxel_mesh(xs - xs[0], ys - ys[0], zs - zs[0])
    c = np.array(corners).reshape(2, 3)
    box = AxisBox(c.min(axis=0), c.max(axis=0))
    np.testing.assert_array_equal(build_spatial_index(m).query(box), _brute(m, box))


def test_regions_must_partition():
    two = np.vstack([UNIT_CUBE, UNIT_CUBE + [1, 0, 0]])
    els = [("hex8", range(8)), ("hex8", range(8, 16))]
    with pytest.raises(InvalidMesh):
        Mesh(two, els, {"A": [0]})
    with pytest.raises(InvalidMesh):
        Mesh(two, els, {"A": [0, 1], "B": [1]})
    with pytest.raises(InvalidMesh):
        Mesh(UNIT_CUBE, [("hex8", [0, 1, 2, 3, 4, 5, 6, 9])], {"A": [0]})


def test_boundary_facets_of_two_cubes():
    g = np.array([0.0, 1.0, 2.0])
    m = voxel_mesh(g, [0, 1], [0, 1])
    assert len(boundary_facets(m)) == 10


def test_time_grid_offsets():
    tg = TimeGrid(start_step=0, num_steps=675, start_time=1e-5, delta=1e-5)
    assert tg.time(0) == pytest.approx(1e-5)
    assert tg.times[-1] == pytest.approx(675e-5)
    with pytest.raises(Exception):
        TimeGrid(num_steps=0)
