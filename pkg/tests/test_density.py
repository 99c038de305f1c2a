import numpy as np
import pytest

from neumax.mesh import build_tri_mesh, build_interval_mesh
from neumax.density import (DensityField, MassBudget, disk_indicator,
                            load_density, mass, p1_load_vector, project_box,
                            save_density, segments_indicator_1d)


def test_values_validated_and_clipped():
    mesh = build_tri_mesh(2, 2)
    with pytest.raises(ValueError):
        DensityField(mesh, np.full(9, 1.5))
    with pytest.raises(ValueError):
        DensityField(mesh, np.zeros(4))
    rho = DensityField(mesh, np.full(9, 1.0 + 1e-13))
    assert rho.values.max() <= 1.0


def test_load_vector_sums_to_area():
    mesh = build_tri_mesh(7, 4, corners=(0.0, 0.0, 2.0, 1.0))
    assert p1_load_vector(mesh).sum() == pytest.approx(2.0, rel=1e-13)
    interval = build_interval_mesh(0.7, 13)
    assert p1_load_vector(interval).sum() == pytest.approx(0.7, rel=1e-13)


def test_mass_exact_for_linear_fields():
    mesh = build_tri_mesh(6, 6)
    rho = DensityField(mesh, mesh.vertices[:, 0])  # rho = x on the unit square
    assert mass(rho) == pytest.approx(0.5, rel=1e-13)


def test_disk_indicator_mass_near_disk_area():
    mesh = build_tri_mesh(80, 80)
    r = 0.3
    rho = disk_indicator(mesh, (0.5, 0.5), r)
    assert mass(rho) == pytest.approx(np.pi * r * r, rel=0.05)


def test_project_box_clamps():
    mesh = build_tri_mesh(2, 2)
    rho = project_box(mesh, np.linspace(-1.0, 2.0, 9))
    assert rho.values.min() == 0.0 and rho.values.max() == 1.0


def test_segments_indicator_rejects_overlap():
    mesh = build_interval_mesh(1.0, 10)
    with pytest.raises(ValueError):
        segments_indicator_1d(mesh, [(0.0, 0.5), (0.4, 0.8)])
    rho = segments_indicator_1d(mesh, [(0.0, 0.2), (0.5, 0.7)])
    assert rho.values.sum() > 0


def test_save_load_roundtrip_2d(tmp_path):
    mesh = build_tri_mesh(5, 3, corners=(0.0, 0.0, 1.0, 2.0))
    rng = np.random.default_rng(1)
    rho = DensityField(mesh, rng.uniform(0, 1, mesh.p1_dof_count))
    path = tmp_path / "rho.txt"
    save_density(rho, str(path))
    back = load_density(str(path))
    assert np.array_equal(back.values, rho.values)
    assert back.mesh.nx == 5 and back.mesh.ny == 3
    assert back.mesh.corners == (0.0, 0.0, 1.0, 2.0)


def test_save_load_roundtrip_1d(tmp_path):
    mesh = build_interval_mesh(0.4, 8)
    rho = DensityField(mesh, np.linspace(0, 1, 9))
    path = tmp_path / "rho1d.txt"
    save_density(rho, str(path))
    back = load_density(str(path))
    assert isinstance(back.mesh, type(mesh))
    assert np.array_equal(back.values, rho.values)
    assert back.mesh.a == 0.4 and back.mesh.n == 8


def test_load_rejects_unknown_tag(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("D9 1 2\n0\n0\n")
    with pytest.raises(ValueError):
        load_density(str(path))


def test_mass_budget_validation():
    with pytest.raises(ValueError):
        MassBudget(-0.1, 1.0)
    with pytest.raises(ValueError):
        MassBudget(0.4, -1.0)
    budget = MassBudget(0.4, 10.0)
    assert budget.m == 0.4 and budget.alpha == 10.0
