import numpy as np
import pytest

from neumax.mesh import build_interval_mesh
from neumax.density import DensityField, mass, segments_indicator_1d
from neumax.oned import (GPFunction, TwoDensityProblem, build_gP, build_h,
                         gp_rayleigh, kroger_bound, mu_1d, sharp_bound,
                         solve_orthogonality, sturm_liouville_bound)


def uniform_density(a, n, value=1.0):
    mesh = build_interval_mesh(a, n)
    return DensityField(mesh, np.full(n + 1, value))


def random_density(a, n, seed, lo=0.1, hi=1.0):
    mesh = build_interval_mesh(a, n)
    rng = np.random.default_rng(seed)
    return DensityField(mesh, rng.uniform(lo, hi, n + 1))


# ---------------------------------------------------------------------------
# sharp bound and single-segment optimality


def test_sharp_bound_values():
    assert sharp_bound(1, 1.0) == pytest.approx(np.pi ** 2)
    assert sharp_bound(3, 0.4) == pytest.approx(9 * np.pi ** 2 / 0.16)
    with pytest.raises(ValueError):
        sharp_bound(0, 1.0)
    with pytest.raises(ValueError):
        sharp_bound(1, 0.0)


def test_single_segment_attains_sharp_bound_k1():
    # rho = indicator of one cell-aligned segment of mass m: mu_1 with a
    # small relaxation approaches pi^2 / m^2
    n = 400
    mesh = build_interval_mesh(1.0, n)
    # 159 interior cells plus two half-ramps of one cell: mass = 160 h = 0.4
    rho = segments_indicator_1d(mesh, [(0.2, 0.2 + 159 / n)])
    m = mass(rho)
    problem = TwoDensityProblem(rho, rho)
    mu = mu_1d(problem, 1, 1e-4)
    assert mu == pytest.approx(sharp_bound(1, m), rel=5e-3)


def test_uniform_density_eigenvalues():
    rho = uniform_density(1.0, 80)
    problem = TwoDensityProblem(rho, rho)
    for k in (1, 2, 3):
        assert mu_1d(problem, k, 0.0) == pytest.approx(np.pi ** 2 * k ** 2,
                                                       rel=1e-5)


def test_mu_1d_relaxed_close_to_unrelaxed_for_positive_density():
    rho = random_density(1.0, 60, seed=2, lo=0.3)
    problem = TwoDensityProblem(rho, rho)
    exact = mu_1d(problem, 2, 0.0)
    relaxed = mu_1d(problem, 2, 1e-5)
    assert relaxed == pytest.approx(exact, rel=1e-3)


def test_two_density_mesh_mismatch_rejected():
    r1 = uniform_density(1.0, 20)
    r2 = uniform_density(0.5, 20)
    with pytest.raises(ValueError):
        TwoDensityProblem(r1, r2)


# ---------------------------------------------------------------------------
# h and g_P construction


def test_ramp_function_shape():
    for k in (1, 2, 5):
        h = build_h(k)
        half = 1.0 / (2 * k)
        assert h.half_width == pytest.approx(half)
        assert h(-1.0) == -1.0 and h(1.0) == 1.0
        assert h(0.0) == pytest.approx(0.0, abs=1e-15)
        assert h(half) == pytest.approx(1.0)
        assert h(-half) == pytest.approx(-1.0)
        # odd inside the ramp
        x = np.linspace(-half, half, 17)
        assert np.allclose(h(x), -h(-x), atol=1e-14)


def test_gp_k1_is_single_ramp():
    gp = build_gP([0.5], 1)
    h = build_h(1)
    x = np.linspace(0.0, 1.0, 101)
    assert np.allclose(gp(x), -h(x - 0.5), atol=1e-14)


def test_gp_bounded_and_derivative_bounded():
    rng = np.random.default_rng(6)
    for k in (1, 2, 3, 4):
        P = np.sort(rng.uniform(0.05, 0.95, k))
        gp = build_gP(P, k)
        x = np.linspace(0.0, 1.0, 2001)
        assert np.abs(gp(x)).max() <= 1.0 + 1e-12
        assert np.abs(gp.derivative(x)).max() <= k * np.pi + 1e-9


def test_gp_continuous_across_cell_boundaries():
    gp = build_gP([0.3, 0.7], 2)
    for c in gp.cuts:
        lo = gp(np.array([c - 1e-9]))[0]
        hi = gp(np.array([c + 1e-9]))[0]
        assert hi == pytest.approx(lo, abs=1e-6)


def test_gp_alternates_sign_at_its_points():
    P = [0.2, 0.5, 0.8]
    gp = build_gP(P, 3)
    vals = gp(np.asarray(P))
    assert np.allclose(vals, 0.0, atol=1e-12)
    # the sign flips when crossing each point: + - + - moving right
    probes = np.array([0.05, 0.4, 0.6, 0.95])
    signs = np.sign(gp(probes))
    assert list(signs) == [1.0, -1.0, 1.0, -1.0]


def test_gp_point_count_validated():
    with pytest.raises(ValueError):
        build_gP([0.2, 0.8], 3)


def test_gp_point_derivative_is_minus_slope():
    gp = build_gP([0.4, 0.75], 2)
    x = np.linspace(0.0, 1.0, 401)
    dg, cell = gp.point_derivative(x)
    assert np.allclose(dg, -gp.derivative(x), atol=1e-14)
    assert set(np.unique(cell)) <= {0, 1}


# ---------------------------------------------------------------------------
# orthogonality construction and the resulting certificate


def test_constant_density_orthogonality_point_is_midpoint():
    rho = uniform_density(1.0, 200)
    pts = solve_orthogonality(rho, 1)
    assert pts.sorted[0] == pytest.approx(0.5, abs=1e-9)


def test_orthogonality_residuals_below_tolerance():
    rho = random_density(1.0, 160, seed=11, lo=0.2)
    for k in (1, 2, 3):
        pts = solve_orthogonality(rho, k)
        assert pts.k == k
        assert np.all(np.diff(pts.sorted) > 0)


def test_gp_rayleigh_certifies_sharp_bound():
    # for any admissible rho the orthogonalized g_P has Rayleigh quotient
    # at most pi^2 k^2 / (int rho)^2 after un-normalizing
    for seed in (1, 5):
        rho = random_density(1.0, 120, seed=seed, lo=0.15, hi=1.0)
        for k in (1, 2, 3):
            pts = solve_orthogonality(rho, k)
            gp = build_gP(pts.sorted, k)
            q = gp_rayleigh(gp, rho)
            assert q <= sharp_bound(k, mass(rho)) * (1 + 1e-6)


def test_orthogonality_rejects_vanishing_density():
    mesh = build_interval_mesh(1.0, 40)
    vals = np.ones(41)
    vals[5] = 0.0
    with pytest.raises(ValueError):
        solve_orthogonality(DensityField(mesh, vals), 1)


# ---------------------------------------------------------------------------
# closed-form bounds


def test_kroger_bound_planar_value():
    # N=2, k=1, sup = l1: 4 pi^2 * (4 / (2 pi)) = 8 pi
    assert kroger_bound(2, 1, 1.0, 1.0) == pytest.approx(8 * np.pi)


def test_kroger_bound_scalings():
    base = kroger_bound(2, 1, 1.0, 0.4)
    assert kroger_bound(2, 1, 1.0, 0.2) == pytest.approx(2 * base)
    assert kroger_bound(2, 4, 1.0, 0.4) == pytest.approx(4 * base)
    assert kroger_bound(3, 2, 1.0, 1.0) > 0
    with pytest.raises(ValueError):
        kroger_bound(1, 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        kroger_bound(2, 1, 0.0, 1.0)


def test_kroger_bound_dominates_disk_value():
    # mass-m disk of unit density: m * mu_1 = 10.65 < m * bound
    bound = kroger_bound(2, 1, 1.0, 0.4)
    assert 0.4 * bound > 10.65


def test_sturm_liouville_bound_holds_numerically():
    mesh = build_interval_mesh(1.0, 80)
    x = mesh.nodes
    rho1 = uniform_density(1.0, 80)
    rho2 = DensityField(mesh, 0.5 + 0.5 * x)
    problem = TwoDensityProblem(rho1, rho2)
    for k in (1, 2, 3):
        mu = mu_1d(problem, k, 0.0)
        assert mu <= sturm_liouville_bound(rho1, rho2, k) * (1 + 1e-9)


def test_sturm_liouville_bound_homogeneity():
    mesh = build_interval_mesh(1.0, 40)
    rho1 = DensityField(mesh, np.full(41, 0.8))
    rho2 = DensityField(mesh, np.linspace(0.2, 1.0, 41))
    b = sturm_liouville_bound(rho1, rho2, 2)
    half1 = DensityField(mesh, 0.5 * rho1.values)
    half2 = DensityField(mesh, 0.5 * rho2.values)
    # the bound scales linearly in rho1 and inversely in rho2,
    # matching the homogeneity of the eigenvalue itself
    assert sturm_liouville_bound(half1, rho2, 2) == pytest.approx(0.5 * b)
    assert sturm_liouville_bound(rho1, half2, 2) == pytest.approx(2.0 * b)


def test_sharp_bound_tight_over_random_batch():
    # Polya-type check: every admissible density stays below the sharp value
    rng = np.random.default_rng(17)
    for _ in range(5):
        n = 80
        mesh = build_interval_mesh(1.0, n)
        rho = DensityField(mesh, rng.uniform(0.05, 1.0, n + 1))
        problem = TwoDensityProblem(rho, rho)
        for k in (1, 2):
            mu = mu_1d(problem, k, 0.0, rtol=1e-5)
            assert mu <= sharp_bound(k, mass(rho)) * (1 + 1e-4)
