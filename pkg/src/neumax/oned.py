"""One-dimensional analysis: two-density Sturm-Liouville eigenvalues, the
sharp bound pi^2 k^2 / m^2, the sign-alternating test functions g_P, and the
Kroger / Sturm-Liouville bound evaluators.

The test function g_P is built from k points: around each sorted point b_j a
sine ramp of half-width 1/(2k) switches the function between -1 and +1, with
alternating orientation.  Making g_P orthogonal (in the rho-weighted sense)
to the first k eigenfunctions certifies mu_k <= pi^2 k^2 / (int rho)^2.
"""

from math import gamma, pi

import numpy as np

from .mesh import IntervalMesh, GAUSS_1D_4PT, build_interval_mesh
from .density import DensityField, mass
from .assembly import assemble_1d
from .eigensolve import solve_lowest, SolverError

__all__ = [
    "TwoDensityProblem",
    "TestFunctionPoints",
    "mu_1d",
    "sharp_bound",
    "build_h",
    "build_gP",
    "solve_orthogonality",
    "kroger_bound",
    "sturm_liouville_bound",
]


class TwoDensityProblem:
    """Pair of densities for -(rho1 u')' = mu rho2 u on (0, a), Neumann."""

    def __init__(self, rho1, rho2):
        if rho1.mesh is not rho2.mesh and not (
                isinstance(rho1.mesh, IntervalMesh)
                and isinstance(rho2.mesh, IntervalMesh)
                and rho1.mesh.a == rho2.mesh.a
                and rho1.mesh.n == rho2.mesh.n):
            raise ValueError("both densities must live on the same interval mesh")
        self.rho1 = rho1
        self.rho2 = rho2
        self.a = rho1.mesh.a

    @property
    def m_min(self):
        return min(mass(self.rho1), mass(self.rho2))


class TestFunctionPoints:
    """The k points parameterizing g_P, kept with their sorted copy."""

    def __init__(self, P):
        self.P = np.asarray(P, dtype=float)
        self.sorted = np.sort(self.P)

    @property
    def k(self):
        return len(self.P)


def _interp_p1(mesh, values, fine):
    return np.interp(fine.nodes, mesh.nodes, values)


def mu_1d(problem, k, eps, rtol=1e-6, max_refine=8):
    """k-th eigenvalue of the two-density problem, mesh-converged.

    Solves on the problem's mesh, then on uniformly refined copies until
    two successive values agree to rtol (relative).  eps = 0 runs the
    unrelaxed pencil and requires rho2 bounded below by a positive constant.
    """
    if k < 0:
        raise ValueError("eigenvalue index must be >= 0")
    mesh = problem.rho1.mesh
    prev = None
    n = mesh.n
    # the relaxed pencil's eps^2 mass weight drives cond(K) to ~1/eps^2 and
    # sets a residual floor; the Cauchy refinement check below still
    # controls the eigenvalue accuracy
    solver_tol = 1e-8 if eps == 0 else 1e-6
    for _ in range(max_refine + 1):
        fine = build_interval_mesh(mesh.a, n)
        r1 = DensityField(fine, _interp_p1(mesh, problem.rho1.values, fine))
        r2 = DensityField(fine, _interp_p1(mesh, problem.rho2.values, fine))
        pair = assemble_1d(fine, r1, r2, eps)
        sp = solve_lowest(pair, k + 1, tol=solver_tol)
        mu = float(sp.eigenvalues[k])
        if prev is not None and abs(mu - prev) <= rtol * max(abs(mu), 1.0):
            return mu
        prev = mu
        n *= 2
    raise SolverError("eigenvalue did not converge under mesh refinement "
                      "(last value %g)" % prev)


def sharp_bound(k, m):
    """The maximal k-th eigenvalue over densities of mass m in 1D."""
    if k < 1:
        raise ValueError("index must be >= 1")
    if m <= 0:
        raise ValueError("mass must be positive")
    return pi ** 2 * k ** 2 / m ** 2


def build_h(k):
    """Ramp function: -1 left of -1/(2k), sin(k pi x) across, +1 right."""
    if k < 1:
        raise ValueError("index must be >= 1")
    half = 1.0 / (2 * k)

    def h(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= -half, -1.0,
                        np.where(x >= half, 1.0, np.sin(k * pi * x)))

    h.half_width = half
    return h


class GPFunction:
    """Evaluable g_P with its derivative and breakpoints.

    In the cell of the nearest sorted point b_j (cells split halfway between
    consecutive points) the function is (-1)^(j+1) h(x - b_j); this closed
    form agrees with the alternating-minimum construction and is continuous
    because h is odd.
    """

    def __init__(self, P, k):
        self.points = TestFunctionPoints(P)
        if self.points.k != k:
            raise ValueError("expected %d points, got %d" % (k, self.points.k))
        self.k = k
        self.half = 1.0 / (2 * k)
        b = self.points.sorted
        self.cuts = 0.5 * (b[:-1] + b[1:])  # cell boundaries

    def _nearest(self, x):
        return np.searchsorted(self.cuts, x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        j = self._nearest(x)
        sign = np.where(j % 2 == 0, -1.0, 1.0)
        y = x - self.points.sorted[j]
        ramp = np.where(y <= -self.half, -1.0,
                        np.where(y >= self.half, 1.0, np.sin(self.k * pi * y)))
        return sign * ramp

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        j = self._nearest(x)
        sign = np.where(j % 2 == 0, -1.0, 1.0)
        y = x - self.points.sorted[j]
        inside = np.abs(y) < self.half
        return np.where(inside, sign * self.k * pi * np.cos(self.k * pi * y), 0.0)

    def point_derivative(self, x):
        """d g_P / d b_j at each x (nonzero only in the cell of b_j)."""
        x = np.asarray(x, dtype=float)
        j = self._nearest(x)
        return -self.derivative(x), j

    def breakpoints(self, a):
        """All non-smooth points of g_P inside [0, a]."""
        b = self.points.sorted
        pts = np.concatenate([self.cuts, b - self.half, b + self.half])
        return np.unique(np.clip(pts, 0.0, a))


def build_gP(P, k):
    return GPFunction(P, k)


# ---------------------------------------------------------------------------
# quadrature over an interval mesh with extra breakpoints

def _panels(mesh, extra):
    nodes = np.unique(np.concatenate([mesh.nodes, extra]))
    nodes = nodes[(nodes >= 0.0) & (nodes <= mesh.a)]
    t, w = GAUSS_1D_4PT
    left = nodes[:-1]
    h = np.diff(nodes)
    x = (left[:, None] + h[:, None] * t[None, :]).ravel()
    wq = (h[:, None] * w[None, :]).ravel()
    return x, wq


def _eval_p1(mesh, values, x):
    return np.interp(x, mesh.nodes, values)


def _eval_p2(mesh, u, x):
    """Evaluate a P2 interval FEM function at arbitrary points."""
    e = np.clip((x / mesh.h).astype(int), 0, mesh.n - 1)
    t = (x - mesh.nodes[e]) / mesh.h
    uv0 = u[e]
    uv1 = u[e + 1]
    um = u[mesh.p1_dof_count + e]
    return (uv0 * (1 - t) * (1 - 2 * t) + uv1 * t * (2 * t - 1)
            + um * 4 * t * (1 - t))


def solve_orthogonality(rho, k, start=None, rng_seed=20240813,
                        tol=1e-12, max_restarts=12):
    """Points P making g_P rho-orthogonal to the first k eigenfunctions.

    Solves F_i(P) = int rho g_P u_i dx = 0 (i = 0..k-1) by damped Newton
    with the analytic Jacobian, starting from the mass quantiles of rho and
    restarting from seeded jitters when a start fails.  Returns sorted
    TestFunctionPoints with max |F| below tol.
    """
    mesh = rho.mesh
    if np.min(rho.values) <= 0:
        raise ValueError("orthogonality construction needs rho >= delta > 0")
    if k < 1:
        raise ValueError("index must be >= 1")

    pair = assemble_1d(mesh, rho, rho, 0.0)
    sp = solve_lowest(pair, k, tol=1e-10)
    U = sp.eigenvectors  # columns u_0..u_{k-1}

    # quantile initial guess: b_j at mass fraction (2j-1)/(2k)
    xq, wq = _panels(mesh, np.empty(0))
    rq = _eval_p1(mesh, rho.values, xq)
    uq = np.column_stack([_eval_p2(mesh, U[:, i], xq) for i in range(k)])
    total = float((rq * wq).sum())
    order = np.argsort(xq)
    cum = np.cumsum((rq * wq)[order])
    quantiles = np.array([(2 * j - 1) / (2 * k) for j in range(1, k + 1)])
    b0 = xq[order][np.searchsorted(cum, quantiles * total)]

    def residual_jacobian(b):
        gp = GPFunction(b, k)
        x, w = _panels(mesh, gp.breakpoints(mesh.a))
        r = _eval_p1(mesh, rho.values, x)
        g = gp(x)
        F = np.empty(k)
        J = np.zeros((k, k))
        dg, cell = gp.point_derivative(x)
        for i in range(k):
            ui = _eval_p2(mesh, U[:, i], x)
            F[i] = float((r * g * ui * w).sum())
            contrib = r * dg * ui * w
            np.add.at(J[i], cell, contrib)
        return F, J

    rng = np.random.default_rng(rng_seed)
    guesses = [np.sort(np.asarray(start, dtype=float))] if start is not None else []
    guesses.append(b0)
    for _ in range(max_restarts):
        jitter = 0.25 * mesh.a / k * rng.uniform(-1, 1, k)
        guesses.append(np.sort(np.clip(b0 + jitter, 1e-3, mesh.a - 1e-3)))

    for b in guesses:
        b = b.copy()
        ok = True
        for _ in range(60):
            F, J = residual_jacobian(b)
            if np.abs(F).max() < tol:
                break
            try:
                db = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                ok = False
                break
            lam = 1.0
            base = np.abs(F).max()
            while lam > 1e-6:
                trial = np.sort(b + lam * db)
                Ft, _ = residual_jacobian(trial)
                if np.abs(Ft).max() < base:
                    b = trial
                    break
                lam *= 0.5
            else:
                ok = False
                break
        else:
            ok = False
        if ok and np.abs(residual_jacobian(b)[0]).max() < tol:
            pts = TestFunctionPoints(np.sort(b))
            lo, hi = -1.0 / (2 * k), mesh.a + 1.0 / (2 * k)
            if pts.sorted[0] > lo and pts.sorted[-1] < hi:
                return pts
    raise SolverError("orthogonality system: no root found within the "
                      "restart budget")


def gp_rayleigh(gp, rho):
    """rho-weighted Rayleigh quotient of g_P on the density's interval."""
    mesh = rho.mesh
    x, w = _panels(mesh, gp.breakpoints(mesh.a))
    r = _eval_p1(mesh, rho.values, x)
    num = float((r * gp.derivative(x) ** 2 * w).sum())
    den = float((r * gp(x) ** 2 * w).sum())
    return num / den


def kroger_bound(N, k, sup_norm, l1_norm):
    """Upper bound 4 pi^2 ((N+2)k/(2 omega_N) * sup/l1)^(2/N), N >= 2."""
    if N < 2:
        raise ValueError("the bound requires dimension N >= 2")
    if k < 1:
        raise ValueError("index must be >= 1")
    if sup_norm <= 0 or l1_norm <= 0:
        raise ValueError("norms must be positive")
    omega = pi ** (N / 2) / gamma(N / 2 + 1)
    return 4 * pi ** 2 * ((N + 2) * k / (2 * omega) * sup_norm / l1_norm) ** (2.0 / N)


def sturm_liouville_bound(rho1, rho2, k):
    """Sharp upper bound for -(rho1 u')' = mu rho2 u with Neumann ends.

    Normalizing each density by its sup and applying the sharp 1D bound
    gives mu_k <= (sup rho1 / sup rho2) * pi^2 k^2 / min(int rho1 / sup rho1,
    int rho2 / sup rho2)^2.
    """
    s1 = float(np.max(rho1.values))
    s2 = float(np.max(rho2.values))
    if s1 <= 0 or s2 <= 0 or np.min(rho1.values) < 0 or np.min(rho2.values) < 0:
        raise ValueError("densities must be nonnegative with positive sup")
    m = min(mass(rho1) / s1, mass(rho2) / s2)
    return (s1 / s2) * pi ** 2 * k ** 2 / m ** 2
