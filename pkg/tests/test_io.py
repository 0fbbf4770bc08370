import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from aeropipe.errors import (
    CorruptContainer, CorruptTrace, CorruptVariableFile, IncompleteMaterial, MalformedCase,
    UnsupportedElement, UnsupportedIdMode, UnsupportedVariable, UnsupportedVersion,
)
from aeropipe.io.container import (
    ContainerDataset, ContainerResult, StreamingResultWriter, read_container, write_container,
)
from aeropipe.io.ensight import (
    ensight_element_order, parse_case, read_geometry, read_scalar_variable,
    write_case, write_geometry, write_scalar_variable,
)
from aeropipe.io.material import Material, parse_material, parse_material_text, write_material
from aeropipe.io.trace import MicrophoneTrace, read_mic_trace, write_mic_trace
from aeropipe.mesh import Mesh, TimeGrid, element_volume, voxel_mesh

from conftest import UNIT_CUBE

HEX_GEO = """single hex
fixture
node id assign
element id assign
part
         1
Background
coordinates
         8
0 1 1 0 0 1 1 0
0 0 1 1 0 0 1 1
0 0 0 0 1 1 1 1
hexa8
         1
1 2 3 4 5 6 7 8
"""


def _case(tmp_path, n_steps=3, values=None, var_line="scalar per element: 1 Pressure p.****"):
    (tmp_path / "g.geo").write_text(HEX_GEO)
    for k in range(n_steps):
        v = 1.0 if values is None else values[k]
        (tmp_path / f"p.{k + 10:04d}").write_text(f"Pressure\npart\n1\nhexa8\n{v}\n")
    times = " ".join(str((k + 1) * 1e-5) for k in range(n_steps))
    (tmp_path / "c.case").write_text(
        "FORMAT\ntype: ensight gold\nGEOMETRY\nmodel: g.geo\nVARIABLE\n"
        f"{var_line}\nTIME\ntime set: 1\nnumber of steps: {n_steps}\n"
        f"filename start number: 10\nfilename increment: 1\ntime values: {times}\n"
    )
    return tmp_path / "c.case"


def test_case_time_set(tmp_path):
    desc = parse_case(_case(tmp_path))
    assert desc.step_numbers == [10, 11, 12]
    assert desc.time_values == pytest.approx([1e-5, 2e-5, 3e-5])
    # the source-side name is kept, config maps it to fluidMechPressure
    assert list(desc.variables) == ["Pressure"]
    assert desc.variable_file("Pressure", 2).name == "p.0012"


def test_case_without_time_section(tmp_path):
    (tmp_path / "c.case").write_text(
        "FORMAT\ntype: ensight gold\nGEOMETRY\nmodel: g.geo\nVARIABLE\nscalar per element: Pressure p.****\n"
    )
    with pytest.raises(MalformedCase):
        parse_case(tmp_path / "c.case")


def test_case_without_geometry(tmp_path):
    (tmp_path / "c.case").write_text("FORMAT\ntype: ensight gold\n")
    with pytest.raises(MalformedCase):
        parse_case(tmp_path / "c.case")


def test_case_rejects_nodal_variable(tmp_path):
    with pytest.raises(UnsupportedVariable):
        parse_case(_case(tmp_path, var_line="scalar per node: 1 Pressure p.****"))


def test_single_hex_geometry(tmp_path):
    (tmp_path / "g.geo").write_text(HEX_GEO)
    m = read_geometry(tmp_path / "g.geo")
    assert m.num_elements == 1 and list(m.regions) == ["Background"]
    assert element_volume(m, 0) == pytest.approx(1.0)


def test_geometry_keyword_errors(tmp_path):
    (tmp_path / "a.geo").write_text(HEX_GEO.replace("hexa8", "pyramid5"))
    with pytest.raises(UnsupportedElement):
        read_geometry(tmp_path / "a.geo")
    (tmp_path / "b.geo").write_text(HEX_GEO.replace("node id assign", "node id sometimes"))
    with pytest.raises(UnsupportedIdMode):
        read_geometry(tmp_path / "b.geo")


def test_two_parts_and_grid_volume(tmp_path):
    g = np.linspace(0, 1, 5)
    m = voxel_mesh(g, g, g, lambda i, j, k, c: "A" if c[0] < 0.5 else "B")
    write_geometry(tmp_path / "m.geo", m)
    back = read_geometry(tmp_path / "m.geo")
    assert back.num_elements == 64 and set(back.regions) == {"A", "B"}
    assert not set(back.regions["A"]) & set(back.regions["B"])
    assert sum(element_volume(back, e) for e in range(64)) == pytest.approx(1.0, rel=1e-12)


def test_geometry_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    g = np.linspace(0, 1, 4)
    m = voxel_mesh(g, g, g)
    nodes = m.nodes + rng.uniform(-0.02, 0.02, m.nodes.shape)
    m = Mesh(nodes, m.elements, m.regions)
    write_geometry(tmp_path / "m.geo", m)
    back = read_geometry(tmp_path / "m.geo")
    np.testing.assert_allclose(back.nodes, m.nodes, atol=1e-12, rtol=0)
    np.testing.assert_array_equal(back.conn, m.conn)


def test_variable_values(tmp_path):
    desc = parse_case(_case(tmp_path))
    np.testing.assert_array_equal(read_scalar_variable(desc, "Pressure", 0), [1.0])
    with pytest.raises(Exception):
        read_scalar_variable(desc, "Pressure", 3)


def test_index_valued_variable_preserves_order(tmp_path):
    g = np.linspace(0, 1, 4)
    m = voxel_mesh(g, g, g, lambda i, j, k, c: "A" if c[2] < 0.5 else "B")
    write_geometry(tmp_path / "m.geo", m)
    write_scalar_variable(tmp_path / "v.0000", m, np.arange(m.num_elements, dtype=float))
    write_case(tmp_path / "c.case", "m.geo", {"idx": "v.****"}, [0.0])
    values = read_scalar_variable(parse_case(tmp_path / "c.case"), "idx", 0)
    np.testing.assert_array_equal(values, ensight_element_order(m))
    # value i must belong to element i of the re-read geometry
    geo = read_geometry(tmp_path / "m.geo")
    for i, orig in enumerate(values.astype(int)):
        np.testing.assert_allclose(
            geo.nodes[geo.element_nodes(i)].mean(axis=0), m.nodes[m.element_nodes(orig)].mean(axis=0), atol=1e-12
        )


def test_index_valued_variable_single_part(tmp_path):
    g = np.linspace(0, 1, 4)
    m = voxel_mesh(g, g, g)
    write_geometry(tmp_path / "m.geo", m)
    write_scalar_variable(tmp_path / "v.0000", m, np.arange(m.num_elements, dtype=float))
    write_case(tmp_path / "c.case", "m.geo", {"idx": "v.****"}, [0.0])
    values = read_scalar_variable(parse_case(tmp_path / "c.case"), "idx", 0)
    np.testing.assert_array_equal(values, np.arange(m.num_elements))


def test_variable_count_mismatch(tmp_path):
    desc = parse_case(_case(tmp_path))
    (tmp_path / "p.0010").write_text("Pressure\npart\n1\nhexa8\n1.0 2.0\n")
    with pytest.raises(CorruptVariableFile):
        read_scalar_variable(desc, "Pressure", 0)


def _dataset(steps, rng):
    g = np.linspace(0, 1, 3)
    m = voxel_mesh(g, g, g, lambda i, j, k, c: "LARYNX" if c[0] < 0.5 else "VT")
    tg = TimeGrid(0, steps, 1e-5, 1e-5)
    vals = rng.standard_normal((steps, m.num_elements))
    return ContainerDataset(m, tg, [ContainerResult("acouRhsLoad", "element", ["LARYNX", "VT"], vals)], {"k": 1})


def test_container_empty_round_trip(tmp_path):
    ds = ContainerDataset()
    write_container(ds, tmp_path / "e.cfs")
    assert read_container(tmp_path / "e.cfs") == ds


def test_container_675_steps_bit_exact(tmp_path):
    ds = _dataset(675, np.random.default_rng(1))
    write_container(ds, tmp_path / "d.cfs")
    back = read_container(tmp_path / "d.cfs")
    assert back == ds
    assert back.results[0].values.tobytes() == ds.results[0].values.tobytes()


def test_container_truncated(tmp_path):
    ds = _dataset(5, np.random.default_rng(2))
    p = tmp_path / "d.cfs"
    write_container(ds, p)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(CorruptContainer):
        read_container(p)


def test_container_version(tmp_path):
    p = tmp_path / "d.cfs"
    write_container(ContainerDataset(), p)
    p.write_bytes(p.read_bytes().replace(b'"version":1', b'"version":99'))
    with pytest.raises(UnsupportedVersion):
        read_container(p)


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 8))))
def test_container_round_trip_property(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("c") / "x.cfs"
    ds = ContainerDataset(None, TimeGrid(num_steps=values.shape[0]), [ContainerResult("q", "node", ["A"], values)])
    write_container(ds, p)
    back = read_container(p)
    assert back.results[0].values.tobytes() == values.tobytes()


def test_streaming_writer_matches_batch(tmp_path):
    ds = _dataset(4, np.random.default_rng(3))
    r = ds.results[0]
    with StreamingResultWriter(tmp_path / "s.cfs", ds.mesh, ds.time_grid, r.name, r.location, r.regions,
                               r.values.shape[1], ds.attributes) as w:
        for row in r.values:
            w.append(row)
    assert read_container(tmp_path / "s.cfs") == ds


def test_streaming_writer_short(tmp_path):
    ds = _dataset(4, np.random.default_rng(3))
    w = StreamingResultWriter(tmp_path / "s.cfs", ds.mesh, ds.time_grid, "q", "element", ["LARYNX"], 8)
    w.append(np.zeros(8))
    with pytest.raises(CorruptContainer):
        w.close()


def test_material_file(tmp_path):
    write_material(tmp_path / "mat.xml", [Material("air", 1.204, 343.4), Material("water", 998.0, 1481.0)])
    mats = parse_material(tmp_path / "mat.xml")
    assert len(mats) == 2
    assert (mats["air"].density, mats["air"].speed_of_sound) == (1.204, 343.4)


def test_material_validation():
    with pytest.raises(IncompleteMaterial):
        parse_material_text('<materials><material name="air"><density>-1</density>'
                            "<speedOfSound>343.4</speedOfSound></material></materials>")
    with pytest.raises(IncompleteMaterial):
        parse_material_text('<materials><material name="air"><density>1.2</density></material></materials>')


def test_trace_round_trip(tmp_path):
    tr = MicrophoneTrace("mic", [0.0, 1e-5, 2e-5], [0.1, -0.2, 1.0 / 3.0])
    write_mic_trace(tr, tmp_path / "m.txt")
    rows = [l for l in (tmp_path / "m.txt").read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 3
    back = read_mic_trace(tmp_path / "m.txt")
    np.testing.assert_array_equal(back.values, tr.values)
    np.testing.assert_array_equal(back.times, tr.times)
    assert back.node == "mic" and back.dt == 1e-5


def test_empty_trace(tmp_path):
    write_mic_trace(MicrophoneTrace("mic", [], [], dt=1e-5), tmp_path / "m.txt")
    assert all(l.startswith("#") for l in (tmp_path / "m.txt").read_text().splitlines())
    assert len(read_mic_trace(tmp_path / "m.txt")) == 0


def test_trace_non_monotonic(tmp_path):
    (tmp_path / "m.txt").write_text("# node: mic\n0.0\t1\n2e-5\t2\n1e-5\t3\n")
    with pytest.raises(CorruptTrace):
        read_mic_trace(tmp_path / "m.txt")
