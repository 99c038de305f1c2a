"""Derivatives of pencil eigenvalues with respect to the nodal density.

For a K-normalized eigenvector u_k the derivative with respect to the P1
nodal value rho_l is the element-local integral of
phi_l * (|grad u_k|^2 - mu_k u_k^2) over the patch of vertex l.  Multiple
eigenvalues are handled through the smooth cluster objective
sum_i mu_{k+i} - beta * sum_{i<j} (mu_{k+i} - mu_{k+j})^2, whose gradient is
invariant under re-mixing of a degenerate eigenbasis.
"""

import numpy as np

from .mesh import IntervalMesh
from . import assembly

__all__ = [
    "ClusterSpec",
    "GradientReport",
    "detect_cluster",
    "eig_gradient",
    "cluster_objective_gradient",
    "SIGMA_SIMPLE",
]

# relative gap below which an eigenvalue is treated as numerically multiple
SIGMA_SIMPLE = 1e-8


class ClusterSpec:
    """Contiguous group of near-equal eigenvalues starting at index k.

    l is the number of members: the cluster is mu_k, ..., mu_{k+l-1}, all
    within sigma of mu_k.  l = 1 means mu_k is treated as simple.
    """

    def __init__(self, k, l, sigma):
        if k < 1:
            raise ValueError("cluster index k must be >= 1")
        if l < 1:
            raise ValueError("cluster width must be >= 1")
        self.k = int(k)
        self.l = int(l)
        self.sigma = float(sigma)

    @property
    def indices(self):
        return range(self.k, self.k + self.l)


def detect_cluster(eigenvalues, k, sigma):
    """ClusterSpec for the eigenvalues within sigma above mu_k."""
    eigenvalues = np.asarray(eigenvalues)
    l = 1
    while k + l < len(eigenvalues) and eigenvalues[k + l] - eigenvalues[k] < sigma:
        l += 1
    return ClusterSpec(k, l, sigma)


class GradientReport:
    """Gradient with respect to the P1 nodal densities plus the objective."""

    def __init__(self, values, objective_value):
        self.values = np.asarray(values, dtype=float)
        self.objective_value = float(objective_value)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("gradient contains non-finite entries")

    def save(self, path):
        with open(path, "w") as f:
            f.write("# objective %.17g\n" % self.objective_value)
            for v in self.values:
                f.write("%.17g\n" % v)


def _eig_density_gradient(mesh, u, mu):
    """Gradient of a single K-normalized eigenpair with respect to the
    nodal density, assuming the same P1 weight on both sides of the pencil."""
    if isinstance(mesh, IntervalMesh):
        return _eig_density_gradient_1d(mesh, u, mu)

    detJ, invJ = assembly._tri_geometry(mesh)
    dof = mesh.p2_dof_map()
    ue = u[dof]  # (nt, 6)

    # values and physical gradients of u at the quadrature points
    uq = ue @ assembly._TRI_N.T  # (nt, nq)
    G = np.einsum("qid,tde->tqie", assembly._TRI_DN, invJ)
    gq = np.einsum("ti,tqie->tqe", ue, G)  # (nt, nq, 2)

    s = (gq * gq).sum(axis=2) - mu * uq * uq  # (nt, nq)
    wdet = assembly._TRI_W[None, :] * detJ[:, None]
    contrib = (s * wdet) @ assembly._TRI_P1  # (nt, 3)

    g = np.zeros(mesh.p1_dof_count)
    np.add.at(g, mesh.triangles.ravel(), contrib.ravel())
    return g


def _eig_density_gradient_1d(mesh, u, mu):
    n = mesh.n
    h = np.diff(mesh.nodes)
    pairs = np.column_stack([np.arange(n), np.arange(n) + 1])
    dof = np.column_stack([pairs, mesh.p1_dof_count + np.arange(n)])
    ue = u[dof]  # (n, 3)

    uq = ue @ assembly._IV_N.T
    gq = (ue @ assembly._IV_DN.T) / h[:, None]
    s = gq * gq - mu * uq * uq
    contrib = (s * assembly._IV_W[None, :] * h[:, None]) @ assembly._IV_P1

    g = np.zeros(mesh.p1_dof_count)
    np.add.at(g, pairs.ravel(), contrib.ravel())
    return g


def _knorm_sq(pair, u):
    return float(u @ (pair.K @ u))


def eig_gradient(pair, spectrum, k):
    """Gradient of the simple eigenvalue mu_k with respect to nodal density.

    Raises ValueError when mu_k is numerically multiple (relative gap to a
    neighbor below SIGMA_SIMPLE); use cluster_objective_gradient there.
    """
    mu = spectrum.eigenvalues
    if not (0 <= k < len(mu)):
        raise IndexError("eigenvalue index out of range")
    if k == 0:
        # mu_0 is identically zero for Neumann pencils
        return GradientReport(np.zeros(pair.mesh.p1_dof_count), mu[0])
    scale = max(abs(mu[k]), 1.0)
    if k + 1 < len(mu) and (mu[k + 1] - mu[k]) < SIGMA_SIMPLE * scale:
        raise ValueError("eigenvalue %d is numerically multiple" % k)
    if (mu[k] - mu[k - 1]) < SIGMA_SIMPLE * scale:
        raise ValueError("eigenvalue %d is numerically multiple" % k)

    u = spectrum.eigenvectors[:, k]
    g = _eig_density_gradient(pair.mesh, u, mu[k]) / _knorm_sq(pair, u)
    return GradientReport(g, mu[k])


def cluster_objective_gradient(pair, spectrum, cluster, beta=10.0):
    """Gradient of sum_i mu_{k+i} - beta * sum_{i<j} (mu_{k+i}-mu_{k+j})^2
    over the cluster members, using per-eigenvector Rayleigh sensitivities.

    The sum part is a trace over the (near-)eigenspace, so the result does
    not depend on the particular K-orthonormal basis the solver returned.
    """
    if beta < 0:
        raise ValueError("gap-penalty weight must be nonnegative")
    mu = spectrum.eigenvalues
    if cluster.k + cluster.l > len(mu):
        raise IndexError("cluster spans past the computed spectrum")

    members = list(cluster.indices)
    mus = mu[members]
    # d/dmu_i of the gap penalty
    coeff = np.ones(len(members))
    for i in range(len(members)):
        coeff[i] -= beta * 2.0 * (mus[i] * len(members) - mus.sum())

    g = np.zeros(pair.mesh.p1_dof_count)
    for c, idx in zip(coeff, members):
        u = spectrum.eigenvectors[:, idx]
        g += c * _eig_density_gradient(pair.mesh, u, mu[idx]) / _knorm_sq(pair, u)

    gaps = sum((mus[i] - mus[j]) ** 2
               for i in range(len(members)) for j in range(i + 1, len(members)))
    value = mus.sum() - beta * gaps
    return GradientReport(g, value)
