import math

import numpy as np
import pytest

from neumax.mesh import (TRI_QUADRATURE_D5, GAUSS_1D_4PT, build_tri_mesh,
                         build_interval_mesh, submesh)


def reference_triangle_integral(a, b, c):
    # exact integral of L0^a L1^b L2^c over the reference triangle
    return (math.factorial(a) * math.factorial(b) * math.factorial(c)
            / math.factorial(a + b + c + 2))


def test_triangle_quadrature_weights_sum_to_area():
    assert TRI_QUADRATURE_D5.weights.sum() == pytest.approx(0.5, abs=1e-14)


def test_triangle_quadrature_degree_five_exact():
    pts = TRI_QUADRATURE_D5.points
    w = TRI_QUADRATURE_D5.weights
    for a in range(6):
        for b in range(6 - a):
            for c in range(6 - a - b):
                approx = (w * pts[:, 0] ** a * pts[:, 1] ** b
                          * pts[:, 2] ** c).sum()
                assert approx == pytest.approx(
                    reference_triangle_integral(a, b, c), rel=1e-12)


def test_gauss_rule_exact_to_degree_seven():
    t, w = GAUSS_1D_4PT
    for p in range(8):
        assert (w * t ** p).sum() == pytest.approx(1.0 / (p + 1), rel=1e-13)


def test_structured_mesh_counts():
    mesh = build_tri_mesh(2, 2)
    assert len(mesh.vertices) == 9
    assert len(mesh.triangles) == 8
    assert len(mesh.edges) == 16
    assert mesh.p2_dof_count == 25


def test_areas_positive_and_sum_to_rectangle():
    mesh = build_tri_mesh(5, 3, corners=(0.0, -1.0, 2.0, 1.0))
    assert np.all(mesh.signed_areas > 0)
    assert mesh.area == pytest.approx(4.0, rel=1e-13)


def test_interior_edges_shared_by_two_triangles():
    mesh = build_tri_mesh(4, 4)
    assert set(np.unique(mesh.edge_tri_count)) <= {1, 2}
    # Euler formula for a disk-like complex: V - E + F = 1
    assert (len(mesh.vertices) - len(mesh.edges) + len(mesh.triangles)) == 1


def test_p2_dof_map_indices_valid():
    mesh = build_tri_mesh(3, 2)
    dof = mesh.p2_dof_map()
    assert dof.shape == (len(mesh.triangles), 6)
    assert dof.min() >= 0 and dof.max() < mesh.p2_dof_count
    # midpoints of the map match edge midpoints geometrically
    coords = mesh.p2_coordinates()
    tri = mesh.triangles[0]
    mid01 = 0.5 * (mesh.vertices[tri[0]] + mesh.vertices[tri[1]])
    assert np.allclose(coords[dof[0, 3]], mid01)


def test_submesh_renumbering_roundtrip():
    mesh = build_tri_mesh(4, 4)
    pick = np.array([0, 1, 5, 6])
    sub, vmap = submesh(mesh, pick)
    assert np.allclose(sub.vertices, mesh.vertices[vmap])
    # triangle geometry preserved
    assert np.allclose(np.sort(sub.signed_areas),
                       np.sort(mesh.signed_areas[pick]))


def test_submesh_empty_rejected():
    mesh = build_tri_mesh(2, 2)
    with pytest.raises(ValueError):
        submesh(mesh, [])


def test_interval_mesh_basic():
    mesh = build_interval_mesh(0.4, 10)
    assert mesh.p1_dof_count == 11
    assert mesh.p2_dof_count == 21
    assert mesh.h == pytest.approx(0.04)
    assert mesh.nodes[-1] == 0.4
    with pytest.raises(ValueError):
        build_interval_mesh(-1.0, 10)
    with pytest.raises(ValueError):
        build_interval_mesh(1.0, 0)


def test_export_text_roundtrip(tmp_path):
    mesh = build_tri_mesh(3, 3)
    path = tmp_path / "mesh.txt"
    mesh.export_text(str(path))
    lines = path.read_text().strip().split("\n")
    header = lines[0].split()
    assert int(header[0]) == 3 and int(header[1]) == 3
    assert len(lines) == 1 + len(mesh.vertices) + len(mesh.triangles)
