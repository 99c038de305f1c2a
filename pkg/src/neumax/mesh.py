"""Structured triangulations of rectangles and uniform interval partitions.

P1 degrees of freedom live on vertices, P2 degrees of freedom on vertices
plus edge midpoints.  All meshes are immutable after construction.
"""

import numpy as np

__all__ = [
    "QuadratureRule",
    "TRI_QUADRATURE_D5",
    "GAUSS_1D_4PT",
    "TriMesh",
    "IntervalMesh",
    "build_tri_mesh",
    "build_interval_mesh",
    "submesh",
]


class QuadratureRule:
    """Quadrature on the reference triangle {L0+L1+L2=1, Li>=0}.

    points are barycentric coordinates, weights sum to the reference area 1/2.
    """

    def __init__(self, points, weights, exactness_degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.exactness_degree = int(exactness_degree)
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")


def _radon_degree5():
    # 7-point symmetric rule, exact for polynomials of degree 5.
    a1 = 0.059715871789770
    b1 = 0.470142064105115
    a2 = 0.797426985353087
    b2 = 0.101286507323456
    w0 = 9.0 / 80.0
    w1 = 0.066197076394253
    w2 = 0.062969590272414
    pts = [
        (1 / 3, 1 / 3, 1 / 3),
        (a1, b1, b1), (b1, a1, b1), (b1, b1, a1),
        (a2, b2, b2), (b2, a2, b2), (b2, b2, a2),
    ]
    wts = [w0, w1, w1, w1, w2, w2, w2]
    return QuadratureRule(pts, wts, 5)


TRI_QUADRATURE_D5 = _radon_degree5()

# Gauss-Legendre on [0,1], exact to degree 7.
_gl_x, _gl_w = np.polynomial.legendre.leggauss(4)
GAUSS_1D_4PT = (0.5 * (_gl_x + 1.0), 0.5 * _gl_w)


class TriMesh:
    """Conforming triangle mesh with P1/P2 DOF maps.

    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    edges : (ne, 2) int array of sorted vertex pairs
    tri_edges : (nt, 3) edge index per local edge (0,1), (1,2), (2,0)

    For P2, DOF i < nv is vertex i and DOF nv + e is the midpoint of edge e.
    """

    def __init__(self, vertices, triangles, nx=None, ny=None, corners=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.nx = nx
        self.ny = ny
        self.corners = corners

        v = self.vertices[self.triangles]
        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        self.signed_areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(self.signed_areas <= 0):
            raise ValueError("all triangles must be counter-clockwise with positive area")

        self._build_edges()

    def _build_edges(self):
        t = self.triangles
        pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs = np.sort(pairs, axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        self.edges = edges
        self.tri_edges = inverse.reshape(3, -1).T.copy()
        self.edge_midpoints = 0.5 * (
            self.vertices[edges[:, 0]] + self.vertices[edges[:, 1]]
        )
        counts = np.bincount(inverse, minlength=len(edges))
        self.edge_tri_count = counts

    @property
    def p1_dof_count(self):
        return len(self.vertices)

    @property
    def p2_dof_count(self):
        return len(self.vertices) + len(self.edges)

    @property
    def area(self):
        return float(self.signed_areas.sum())

    def p2_coordinates(self):
        """Coordinates of all P2 DOFs (vertices then edge midpoints)."""
        return np.vstack([self.vertices, self.edge_midpoints])

    def p2_dof_map(self):
        """(nt, 6) global P2 DOF indices: v0 v1 v2, m01 m12 m20."""
        nv = len(self.vertices)
        return np.hstack([self.triangles, nv + self.tri_edges])

    def export_text(self, path):
        """Plain-text dump: header line, vertex lines, triangle lines."""
        nx = self.nx if self.nx is not None else 0
        ny = self.ny if self.ny is not None else 0
        c = self.corners if self.corners is not None else (0.0, 0.0, 0.0, 0.0)
        with open(path, "w") as f:
            f.write("%d %d %.17g %.17g %.17g %.17g\n" % (nx, ny, c[0], c[1], c[2], c[3]))
            for x, y in self.vertices:
                f.write("%.17g %.17g\n" % (x, y))
            for a, b, cc in self.triangles:
                f.write("%d %d %d\n" % (a, b, cc))


class IntervalMesh:
    """Uniform partition of [0, a] into n cells."""

    def __init__(self, a, n):
        a = float(a)
        n = int(n)
        if a <= 0:
            raise ValueError("interval length must be positive")
        if n < 1:
            raise ValueError("cell count must be >= 1")
        self.a = a
        self.n = n
        self.nodes = np.linspace(0.0, a, n + 1)
        # guard against accumulated rounding at the right end
        self.nodes[-1] = a

    @property
    def p1_dof_count(self):
        return self.n + 1

    @property
    def p2_dof_count(self):
        # vertices plus one midpoint per cell
        return 2 * self.n + 1

    @property
    def h(self):
        return self.a / self.n

    def midpoints(self):
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])


def build_tri_mesh(nx, ny, corners=(0.0, 0.0, 1.0, 1.0)):
    """Uniform triangulation of a rectangle, every cell split along the
    (lower-left, upper-right) diagonal.
    """
    nx = int(nx)
    ny = int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be >= 1")
    x0, y0, x1, y1 = map(float, corners)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    iy, ix = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = (iy * (nx + 1) + ix).ravel()
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    return TriMesh(vertices, triangles, nx=nx, ny=ny, corners=(x0, y0, x1, y1))


def build_interval_mesh(a, n):
    return IntervalMesh(a, n)


def submesh(mesh, tri_indices):
    """Restriction of a TriMesh to a subset of its triangles.

    Returns (sub, vertex_map) where vertex_map[i] is the parent index of
    sub vertex i.
    """
    tri_indices = np.asarray(tri_indices, dtype=np.int64)
    if tri_indices.size == 0:
        raise ValueError("empty triangle subset")
    tris = mesh.triangles[tri_indices]
    vertex_map = np.unique(tris)
    renumber = -np.ones(len(mesh.vertices), dtype=np.int64)
    renumber[vertex_map] = np.arange(len(vertex_map))
    sub = TriMesh(mesh.vertices[vertex_map], renumber[tris])
    return sub, vertex_map
