"""Assembly of the relaxed stiffness/mass pencil on P2 elements.

The stiffness matrix carries the weight rho + eps and the mass matrix the
weight rho + eps**2 (the spurious-mode-free scheme); the naive scheme uses
rho + eps on both sides.  Densities enter as P1 nodal vectors, so both
matrices are affine in the nodal values.
"""

import numpy as np
import scipy.sparse as sp

from .mesh import TriMesh, IntervalMesh, TRI_QUADRATURE_D5, GAUSS_1D_4PT

__all__ = [
    "OperatorPair",
    "assemble",
    "assemble_1d",
    "assemble_weighted",
    "entry_sensitivities",
    "dump_matrix",
]

SCHEMES = ("eps_eps2", "eps_eps")


class OperatorPair:
    """Assembled stiffness M and mass K of the generalized pencil."""

    def __init__(self, M, K, eps, scheme, mesh=None):
        self.M = M
        self.K = K
        self.eps = eps
        self.scheme = scheme
        self.mesh = mesh

    @property
    def dof_count(self):
        return self.M.shape[0]


# ---------------------------------------------------------------------------
# reference element data

def _p2_tri_reference(quad):
    """P2 basis values/gradients and P1 values at the quadrature points.

    Local DOF order: v0 v1 v2 m01 m12 m20.
    """
    L = quad.points  # (nq, 3) barycentric
    L0, L1, L2 = L[:, 0], L[:, 1], L[:, 2]
    N = np.column_stack([
        L0 * (2 * L0 - 1), L1 * (2 * L1 - 1), L2 * (2 * L2 - 1),
        4 * L0 * L1, 4 * L1 * L2, 4 * L2 * L0,
    ])  # (nq, 6)

    gL = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # grad of L0, L1, L2
    nq = len(L)
    dN = np.zeros((nq, 6, 2))
    for i in range(3):
        dN[:, i, :] = (4 * L[:, i] - 1)[:, None] * gL[i]
    for a, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
        dN[:, 3 + a, :] = 4 * (L[:, i, None] * gL[j] + L[:, j, None] * gL[i])
    return N, dN, L


_TRI_N, _TRI_DN, _TRI_P1 = _p2_tri_reference(TRI_QUADRATURE_D5)
_TRI_W = TRI_QUADRATURE_D5.weights


def _tri_geometry(mesh):
    v = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    d1 = v[:, 1] - v[:, 0]
    d2 = v[:, 2] - v[:, 0]
    detJ = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    invJ = np.empty((len(v), 2, 2))
    invJ[:, 0, 0] = d2[:, 1]
    invJ[:, 0, 1] = -d2[:, 0]
    invJ[:, 1, 0] = -d1[:, 1]
    invJ[:, 1, 1] = d1[:, 0]
    invJ /= detJ[:, None, None]
    return detJ, invJ


def assemble_weighted(mesh, stiff_nodal, stiff_const, mass_nodal, mass_const):
    """Assemble M[i,j] = int w_s grad(psi_i).grad(psi_j) and
    K[i,j] = int w_m psi_i psi_j where each weight is a P1 field plus a
    constant.  Works on TriMesh and IntervalMesh.
    """
    if isinstance(mesh, IntervalMesh):
        return _assemble_weighted_1d(mesh, stiff_nodal, stiff_const,
                                     mass_nodal, mass_const)
    return _assemble_weighted_tri(mesh, stiff_nodal, stiff_const,
                                  mass_nodal, mass_const)


def _assemble_weighted_tri(mesh, stiff_nodal, stiff_const, mass_nodal, mass_const):
    detJ, invJ = _tri_geometry(mesh)
    nt = len(mesh.triangles)
    nq = len(_TRI_W)

    # physical gradients: G[t, q, i, d]
    G = np.einsum("qid,tde->tqie", _TRI_DN, invJ)

    tri_rho_s = np.asarray(stiff_nodal)[mesh.triangles] if stiff_nodal is not None \
        else np.zeros((nt, 3))
    tri_rho_m = np.asarray(mass_nodal)[mesh.triangles] if mass_nodal is not None \
        else np.zeros((nt, 3))
    ws = tri_rho_s @ _TRI_P1.T + stiff_const  # (nt, nq)
    wm = tri_rho_m @ _TRI_P1.T + mass_const

    wdet = _TRI_W[None, :] * detJ[:, None]
    Ke = np.einsum("tq,tqie,tqje->tij", ws * wdet, G, G)
    Me = np.einsum("tq,qi,qj->tij", wm * wdet, _TRI_N, _TRI_N)

    dof = mesh.p2_dof_map()
    rows = np.repeat(dof, 6, axis=1).ravel()
    cols = np.tile(dof, (1, 6)).ravel()
    n = mesh.p2_dof_count
    M = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M.sum_duplicates()
    K.sum_duplicates()
    return M, K


def _p2_interval_reference():
    t, w = GAUSS_1D_4PT
    # local order: left vertex, right vertex, midpoint
    N = np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])
    dN = np.column_stack([4 * t - 3, 4 * t - 1, 4 - 8 * t])
    P1 = np.column_stack([1 - t, t])
    return N, dN, P1, w


_IV_N, _IV_DN, _IV_P1, _IV_W = _p2_interval_reference()


def _assemble_weighted_1d(mesh, stiff_nodal, stiff_const, mass_nodal, mass_const):
    n = mesh.n
    h = np.diff(mesh.nodes)  # (n,)

    pairs = np.column_stack([np.arange(n), np.arange(n) + 1])
    ws = (np.asarray(stiff_nodal)[pairs] @ _IV_P1.T if stiff_nodal is not None
          else 0.0) + stiff_const
    wm = (np.asarray(mass_nodal)[pairs] @ _IV_P1.T if mass_nodal is not None
          else 0.0) + mass_const
    ws = np.broadcast_to(ws, (n, len(_IV_W)))
    wm = np.broadcast_to(wm, (n, len(_IV_W)))

    Ke = np.einsum("eq,qi,qj->eij", ws * _IV_W / h[:, None] ** 2, _IV_DN, _IV_DN)
    Ke *= h[:, None, None]
    Me = np.einsum("eq,qi,qj->eij", wm * _IV_W * h[:, None], _IV_N, _IV_N)

    nv = mesh.p1_dof_count
    dof = np.column_stack([pairs, nv + np.arange(n)])
    rows = np.repeat(dof, 3, axis=1).ravel()
    cols = np.tile(dof, (1, 3)).ravel()
    nd = mesh.p2_dof_count
    M = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(nd, nd)).tocsr()
    K = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(nd, nd)).tocsr()
    M.sum_duplicates()
    K.sum_duplicates()
    return M, K


# ---------------------------------------------------------------------------
# public assembly entry points

def assemble(mesh, rho, eps, scheme="eps_eps2"):
    """Relaxed operator pair on a triangle mesh.

    scheme "eps_eps2": stiffness weight rho+eps, mass weight rho+eps**2.
    scheme "eps_eps": both weights rho+eps (spurious-mode prone).
    """
    if eps <= 0:
        raise ValueError("relaxation parameter eps must be positive")
    if scheme not in SCHEMES:
        raise ValueError("unknown scheme %r" % scheme)
    mass_const = eps ** 2 if scheme == "eps_eps2" else eps
    M, K = assemble_weighted(mesh, rho.values, eps, rho.values, mass_const)
    return OperatorPair(M, K, eps, scheme, mesh=mesh)


def assemble_1d(mesh, rho1, rho2, eps):
    """Two-density pencil on an interval: stiffness weight rho1+eps, mass
    weight rho2+eps**2, P2 elements.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0 and np.min(rho2.values) <= 0:
        raise ValueError("unrelaxed solve requires rho2 bounded below by a positive constant")
    M, K = assemble_weighted(mesh, rho1.values, eps, rho2.values, eps ** 2)
    return OperatorPair(M, K, eps, "eps_eps2", mesh=mesh)


def assemble_unrelaxed(mesh, rho_values):
    """Pencil with weight rho on both sides and no relaxation; used on
    support-restricted meshes where rho is bounded away from zero."""
    M, K = assemble_weighted(mesh, rho_values, 0.0, rho_values, 0.0)
    return OperatorPair(M, K, 0.0, "unrelaxed", mesh=mesh)


def entry_sensitivities(mesh, l):
    """Derivatives of the assembled pair with respect to the nodal density
    at P1 DOF l; independent of rho and eps by linearity."""
    if not (0 <= l < mesh.p1_dof_count):
        raise IndexError("P1 DOF index out of range")
    e = np.zeros(mesh.p1_dof_count)
    e[l] = 1.0
    dM, dK = assemble_weighted(mesh, e, 0.0, e, 0.0)
    return dM, dK


def dump_matrix(A, path):
    """Coordinate text dump, one "i j value" line, sorted lexicographically."""
    coo = sp.coo_matrix(A)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as f:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            f.write("%d %d %.17g\n" % (i, j, v))
