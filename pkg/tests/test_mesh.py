import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elastoacoustic.mesh import (FaceKind, MeshError, Region, build_mesh, generate_mesh, mirror_x, polygon_area,
                                 quality_report, read_mesh, subtriangulate, write_mesh)

from conftest import unit_square


def test_two_rectangles_from_single_seeds():
    seeds = (np.array([[-0.5, 0.5]]), np.array([[0.5, 0.5]]))
    m = generate_mesh(n_elastic=1, n_acoustic=1, lloyd_iterations=0, seeds=seeds)
    assert m.n_elements == 2
    iface = m.faces_of_kind(FaceKind.INTERFACE)
    assert len(iface) == 1
    assert m.faces[iface[0]].length == pytest.approx(1.0, abs=1e-14)


def test_two_rectangle_face_kinds(two_rect):
    h = two_rect.kind_histogram()
    assert h == {"interior_elastic": 0, "interior_acoustic": 0, "boundary_elastic_dirichlet": 3,
                 "boundary_acoustic_dirichlet": 3, "interface": 1}


def test_120_polygons_area_and_boundary(mesh120):
    assert mesh120.n_elements == 120
    areas = np.array([el.area for el in mesh120.elements])
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(2.0, rel=1e-10)
    x0, x1, y0, y1 = mesh120.box
    for fi in mesh120.faces_of_kind(FaceKind.BOUNDARY_ELASTIC, FaceKind.BOUNDARY_ACOUSTIC):
        p = mesh120.vertices[list(mesh120.faces[fi].endpoints)]
        on = (np.abs(p[:, 0] - x0) < 1e-12) | (np.abs(p[:, 0] - x1) < 1e-12) | \
             (np.abs(p[:, 1] - y0) < 1e-12) | (np.abs(p[:, 1] - y1) < 1e-12)
        assert on.all()


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000), ne=st.integers(1, 30), na=st.integers(1, 30))
def test_generated_mesh_invariants(seed, ne, na):
    m = generate_mesh(n_elastic=ne, n_acoustic=na, lloyd_iterations=15, rng_seed=seed)
    el = sum(e.area for e in m.elements if e.region == Region.ELASTIC)
    ac = sum(e.area for e in m.elements if e.region == Region.ACOUSTIC)
    assert el == pytest.approx(1.0, rel=1e-10)
    assert ac == pytest.approx(1.0, rel=1e-10)
    for f in m.faces:
        a, b = m.vertices[list(f.endpoints)]
        t = (b - a) / np.linalg.norm(b - a)
        assert np.allclose(f.normal, [t[1], -t[0]], atol=1e-14)
        assert abs(np.linalg.norm(f.normal) - 1) < 1e-14
        if f.kind == FaceKind.INTERFACE:
            assert abs(a[0]) < 1e-12 and abs(b[0]) < 1e-12
            assert m.elements[f.left].region == Region.ELASTIC
            assert m.elements[f.right].region == Region.ACOUSTIC
        elif f.right is not None:
            assert m.elements[f.left].region == m.elements[f.right].region
    for e in m.elements:
        assert sum(polygon_area(t) for t in e.subtriangle_coords) == pytest.approx(e.area, rel=1e-12)


def test_face_count_partition(mesh120):
    h = mesh120.kind_histogram()
    assert sum(h.values()) == len(mesh120.faces)


def test_mirror_swaps_face_kinds(mesh120):
    h, hm = mesh120.kind_histogram(), mirror_x(mesh120).kind_histogram()
    assert hm["interior_elastic"] == h["interior_acoustic"]
    assert hm["interior_acoustic"] == h["interior_elastic"]
    assert hm["boundary_elastic_dirichlet"] == h["boundary_acoustic_dirichlet"]
    assert hm["interface"] == h["interface"]


def test_deterministic_serialization(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    write_mesh(generate_mesh(n_elastic=10, n_acoustic=12, rng_seed=5), a)
    write_mesh(generate_mesh(n_elastic=10, n_acoustic=12, rng_seed=5), b)
    assert a.read_bytes() == b.read_bytes()


def test_unequal_counts_split_interface():
    m = generate_mesh(n_elastic=7, n_acoustic=11, lloyd_iterations=20, rng_seed=2)
    total = sum(m.faces[f].length for f in m.faces_of_kind(FaceKind.INTERFACE))
    assert total == pytest.approx(1.0, rel=1e-12)


def test_cross_region_face_off_interface_is_rejected():
    v = np.array([[0, 0], [1, 0], [2, 0], [2, 1], [1, 1], [0, 1]], float)
    with pytest.raises(MeshError):
        build_mesh(v, [[0, 1, 4, 5], [1, 2, 3, 4]], [Region.ELASTIC, Region.ACOUSTIC], 1, (0, 2, 0, 1), 0.5)


def test_degenerate_voronoi_cell_reports_id():
    from elastoacoustic.mesh import _check_cells
    good = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    sliver = np.array([[0, 0], [1, 0], [1, 1e-15]], float)
    with pytest.raises(MeshError, match="cell 4"):
        _check_cells([good, sliver], offset=3)


def test_generator_parameter_errors():
    with pytest.raises(MeshError):
        generate_mesh(n_elastic=0, n_acoustic=3)
    with pytest.raises(MeshError):
        generate_mesh(n_elastic=3, n_acoustic=4, mirror_y=True)


# -- subtriangulation

def test_unit_square_fan():
    tris, coords = subtriangulate(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))
    assert len(tris) == 4
    assert np.allclose([polygon_area(t) for t in coords], 0.25)


def test_regular_hexagon_fan():
    ang = np.arange(6) * np.pi / 3
    xy = np.c_[np.cos(ang), np.sin(ang)] * 0.7
    _, coords = subtriangulate(xy)
    areas = [polygon_area(t) for t in coords]
    assert len(areas) == 6
    assert np.allclose(areas, areas[0], rtol=1e-13)


def test_non_star_polygon_uses_ear_clipping():
    # comb-shaped polygon: centroid lies outside the kernel
    xy = np.array([[0, 0], [3, 0], [3, 1], [2.2, 1], [2.2, 0.1], [1.8, 0.1], [1.8, 1], [1.2, 1], [1.2, 0.1],
                   [0.8, 0.1], [0.8, 1], [0, 1]], float)
    _, coords = subtriangulate(xy)
    assert sum(polygon_area(t) for t in coords) == pytest.approx(polygon_area(xy), rel=1e-12)
    assert all(polygon_area(t) > 0 for t in coords)


# -- quality report

def test_quality_two_rectangles(two_rect):
    r = quality_report(two_rect)
    assert r.max_h_ratio == 1.0
    assert r.max_p_ratio == 1.0


def test_quality_single_element():
    r = quality_report(unit_square())
    assert r.max_h_ratio is None
    assert "neighbor_ratios no interior pairs" in r.lines()


def test_quality_finite_on_refined_meshes():
    for n in (25, 50, 100):
        r = quality_report(generate_mesh(n_elastic=n, n_acoustic=n, rng_seed=0, lloyd_iterations=30))
        assert np.isfinite(r.max_h_ratio) and r.max_h_ratio >= 1.0
        assert np.all(np.isfinite(r.height_ratio))


# -- IO

def test_roundtrip_two_rectangles(two_rect, tmp_path):
    p = tmp_path / "m.txt"
    write_mesh(two_rect, p)
    m = read_mesh(p)
    assert np.array_equal(m.vertices, two_rect.vertices)
    assert [e.vertex_ids for e in m.elements] == [e.vertex_ids for e in two_rect.elements]
    assert m.kind_histogram() == two_rect.kind_histogram()


def test_roundtrip_120(mesh120, tmp_path):
    p = tmp_path / "m.txt"
    write_mesh(mesh120, p)
    m = read_mesh(p)
    assert np.array_equal(m.vertices, mesh120.vertices)
    assert m.kind_histogram() == mesh120.kind_histogram()


@pytest.mark.parametrize("body, line", [
    ("polymesh 2d v1\nvertices 3\n0 0\n1 0\n0 1\nelements 1\ne 1 3 0 1 7\n", 7),
    ("polymesh 2d v1\nvertices 3\n0 0\n1 0\n0 1\nelements 1\nx 1 3 0 1 2\n", 7),
    ("polymesh 2d v1\nvertices 3\n0 0\n1 zero\n", 4),
    ("polymesh 3d\n", 1),
])
def test_parse_errors_carry_line_numbers(tmp_path, body, line):
    p = tmp_path / "bad.txt"
    p.write_text(body)
    with pytest.raises(MeshError, match=f"line {line}"):
        read_mesh(p)
