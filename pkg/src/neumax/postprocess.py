"""Support extraction and unrelaxed re-solve of optimized densities.

Thresholding at tau removes the near-void region; the remaining triangles
form one or more components on which the eigenvalue problem is well posed
without any relaxation.  The spectrum of a multi-component support is the
sorted union of the per-component spectra.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .mesh import submesh
from .density import DensityField
from .eigensolve import unrelaxed_solve_on_support

__all__ = ["SupportExtract", "extract_support", "postprocessed_mu"]


class SupportExtract:
    """Kept triangles of {rho > tau} with their component structure."""

    def __init__(self, threshold, triangle_indices, vertex_map, density,
                 component_labels):
        self.threshold = threshold
        self.triangle_indices = triangle_indices
        self.vertex_map = vertex_map
        self.density = density  # DensityField on the restricted mesh
        self.component_labels = component_labels  # per kept triangle

    @property
    def component_count(self):
        return int(self.component_labels.max()) + 1 if len(self.component_labels) else 0

    def component_triangles(self, c):
        """Kept-triangle positions belonging to component c."""
        return np.nonzero(self.component_labels == c)[0]

    def summary_line(self):
        return "threshold %g triangles %d vertices %d components %d" % (
            self.threshold, len(self.triangle_indices),
            len(self.vertex_map), self.component_count)


def extract_support(rho, tau=0.01):
    """Triangles whose three vertex densities all exceed tau.

    Returns a SupportExtract with the restricted density and the connected
    components of the kept triangulation (two triangles are connected when
    they share a vertex).
    """
    if not (0.0 < tau < 1.0):
        raise ValueError("threshold must lie in (0, 1)")
    mesh = rho.mesh
    keep = np.all(rho.values[mesh.triangles] > tau, axis=1)
    tri_idx = np.nonzero(keep)[0]
    if tri_idx.size == 0:
        raise ValueError("thresholding removed every triangle")
    sub, vmap = submesh(mesh, tri_idx)
    density = DensityField(sub, rho.values[vmap])

    # triangle adjacency through shared vertices
    nt = len(tri_idx)
    rows = np.repeat(np.arange(nt), 3)
    cols = sub.triangles.ravel()
    tv = sp.coo_matrix((np.ones(3 * nt), (rows, cols)),
                       shape=(nt, len(sub.vertices))).tocsr()
    adj = tv @ tv.T
    _, labels = connected_components(adj, directed=False)
    return SupportExtract(tau, tri_idx, vmap, density, labels)


def postprocessed_mu(rho, tau, k, tol=1e-9):
    """mu_k of the unrelaxed problem on the thresholded support.

    Components are solved separately and their spectra merged sorted, which
    matches treating the support as a collection of disjoint densities.
    """
    extract = extract_support(rho, tau)
    return _merged_spectrum(extract, k, tol=tol)[k]


def _merged_spectrum(extract, k, tol=1e-9):
    """The k+1 smallest eigenvalues across all support components."""
    sub = extract.density.mesh
    values = []
    for c in range(extract.component_count):
        pos = extract.component_triangles(c)
        comp, cvmap = submesh(sub, pos)
        count = min(k + 1, comp.p2_dof_count - 1)
        spec = unrelaxed_solve_on_support(comp, extract.density.values[cvmap],
                                          count, tol=tol)
        values.extend(float(v) for v in spec.eigenvalues)
    values.sort()
    if len(values) <= k:
        raise ValueError("support components supply only %d modes, need %d"
                         % (len(values), k + 1))
    return np.array(values)
