import numpy as np
import pytest

from neumax.mesh import build_tri_mesh, submesh
from neumax.density import DensityField, disk_indicator
from neumax.eigensolve import unrelaxed_solve_on_support
from neumax.postprocess import (extract_support, postprocessed_mu,
                                _merged_spectrum)

SQUARE_MU = np.pi ** 2 * np.array([0.0, 1.0, 1.0, 2.0])


def two_disks(mesh, r=0.16):
    a = disk_indicator(mesh, (0.25, 0.5), r)
    b = disk_indicator(mesh, (0.75, 0.5), r)
    return DensityField(mesh, np.maximum(a.values, b.values))


def test_full_density_keeps_whole_mesh():
    mesh = build_tri_mesh(8, 8)
    rho = DensityField(mesh, np.ones(mesh.p1_dof_count))
    ex = extract_support(rho, 0.01)
    assert len(ex.triangle_indices) == len(mesh.triangles)
    assert ex.component_count == 1
    assert "components 1" in ex.summary_line()


def test_threshold_validation_and_empty_support():
    mesh = build_tri_mesh(4, 4)
    rho = DensityField(mesh, np.full(mesh.p1_dof_count, 0.5))
    with pytest.raises(ValueError):
        extract_support(rho, 0.0)
    with pytest.raises(ValueError):
        extract_support(rho, 1.0)
    low = DensityField(mesh, np.full(mesh.p1_dof_count, 0.005))
    with pytest.raises(ValueError):
        extract_support(low, 0.01)


def test_disk_support_area_converges():
    mesh = build_tri_mesh(96, 96)
    r = 0.3
    rho = disk_indicator(mesh, (0.5, 0.5), r)
    ex = extract_support(rho, 0.5)
    area = mesh.signed_areas[ex.triangle_indices].sum()
    assert area == pytest.approx(np.pi * r * r, rel=0.05)
    assert ex.component_count == 1


def test_two_disks_give_two_components():
    mesh = build_tri_mesh(48, 48)
    rho = two_disks(mesh)
    ex = extract_support(rho, 0.5)
    assert ex.component_count == 2
    sizes = [len(ex.component_triangles(c)) for c in range(2)]
    # symmetric configuration: the components have similar triangle counts
    assert abs(sizes[0] - sizes[1]) <= 0.1 * max(sizes)


def test_postprocess_of_uniform_density_matches_plain_solve():
    mesh = build_tri_mesh(16, 16)
    rho = DensityField(mesh, np.ones(mesh.p1_dof_count))
    for k in (1, 2, 3):
        mu = postprocessed_mu(rho, 0.01, k)
        assert mu == pytest.approx(SQUARE_MU[k], rel=2e-3, abs=1e-8)


def test_merged_spectrum_is_sorted_union_of_components():
    mesh = build_tri_mesh(40, 40)
    rho = two_disks(mesh)
    ex = extract_support(rho, 0.5)
    merged = _merged_spectrum(ex, 5)

    # recompute each component independently and merge by hand
    manual = []
    sub = ex.density.mesh
    for c in range(ex.component_count):
        comp, cvmap = submesh(sub, ex.component_triangles(c))
        spec = unrelaxed_solve_on_support(comp, ex.density.values[cvmap], 6)
        manual.extend(float(v) for v in spec.eigenvalues)
    manual.sort()
    assert np.allclose(merged, manual[:len(merged)], rtol=1e-10, atol=1e-10)
    # each component contributes its own zero mode
    assert merged[0] == pytest.approx(0.0, abs=1e-8)
    assert merged[1] == pytest.approx(0.0, abs=1e-8)


def test_identical_disks_produce_doubled_spectrum():
    mesh = build_tri_mesh(48, 48)
    rho = two_disks(mesh)
    ex = extract_support(rho, 0.5)
    merged = _merged_spectrum(ex, 5)
    # grid-aligned translates of the same disk: eigenvalues pair up
    assert merged[2] == pytest.approx(merged[3], rel=1e-8)


def test_postprocessed_mu_index_bounds():
    mesh = build_tri_mesh(6, 6)
    rho = DensityField(mesh, np.ones(mesh.p1_dof_count))
    mu1 = postprocessed_mu(rho, 0.5, 1)
    assert mu1 > 0
