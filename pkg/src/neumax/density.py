"""Density fields on meshes, mass computation and feasibility projections.

A density is a P1 nodal vector with values in [0, 1]; its mass is the exact
integral of the piecewise-linear interpolant.
"""

import numpy as np

from .mesh import TriMesh, IntervalMesh, build_tri_mesh, build_interval_mesh

__all__ = [
    "DensityField",
    "MassBudget",
    "mass",
    "project_box",
    "disk_indicator",
    "segments_indicator_1d",
    "p1_load_vector",
    "save_density",
    "load_density",
]


class DensityField:
    """P1 nodal density in [0, 1] attached to a mesh."""

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=float)
        if len(values) != mesh.p1_dof_count:
            raise ValueError("nodal value count does not match the mesh P1 space")
        if np.any(values < -1e-12) or np.any(values > 1 + 1e-12):
            raise ValueError("nodal values must lie in [0, 1]")
        self.mesh = mesh
        self.values = np.clip(values, 0.0, 1.0)

    def with_values(self, values):
        return DensityField(self.mesh, values)


class MassBudget:
    """Target mass and the weight of the quadratic mass penalty."""

    def __init__(self, m, alpha):
        if m <= 0:
            raise ValueError("target mass must be positive")
        if alpha < 0:
            raise ValueError("penalty weight must be nonnegative")
        self.m = float(m)
        self.alpha = float(alpha)


def p1_load_vector(mesh):
    """Integrals of the P1 hat functions, one entry per P1 DOF."""
    if isinstance(mesh, IntervalMesh):
        h = np.diff(mesh.nodes)
        v = np.zeros(mesh.p1_dof_count)
        v[:-1] += 0.5 * h
        v[1:] += 0.5 * h
        return v
    v = np.zeros(mesh.p1_dof_count)
    contrib = np.repeat(mesh.signed_areas / 3.0, 3)
    np.add.at(v, mesh.triangles.ravel(), contrib)
    return v


def mass(rho):
    """Integral of the density; exact for P1 interpolants."""
    return float(p1_load_vector(rho.mesh) @ rho.values)


def project_box(mesh, values):
    """Componentwise clamp of an arbitrary nodal vector to [0, 1]."""
    return DensityField(mesh, np.clip(np.asarray(values, dtype=float), 0.0, 1.0))


def disk_indicator(mesh, center, radius):
    """Sharp P1 interpolation of a disk indicator (vertex-inside test)."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    d = mesh.vertices - np.asarray(center, dtype=float)
    inside = (d * d).sum(axis=1) <= radius * radius
    return DensityField(mesh, inside.astype(float))


def segments_indicator_1d(mesh, segments):
    """P1 interpolant of the indicator of a disjoint union of segments."""
    segs = sorted((float(a), float(b)) for a, b in segments)
    for (a0, b0), (a1, b1) in zip(segs, segs[1:]):
        if a1 < b0:
            raise ValueError("segments must be pairwise disjoint")
    values = np.zeros(mesh.p1_dof_count)
    for a, b in segs:
        values[(mesh.nodes >= a - 1e-14) & (mesh.nodes <= b + 1e-14)] = 1.0
    return DensityField(mesh, values)


def save_density(rho, path):
    """Write the density file format.

    Line 1 is "D1 <a> <n>" or "D2 <nx> <ny> <x0> <y0> <x1> <y1>", then one
    nodal value per line in DOF order.
    """
    mesh = rho.mesh
    with open(path, "w") as f:
        if isinstance(mesh, IntervalMesh):
            f.write("D1 %.17g %d\n" % (mesh.a, mesh.n))
        else:
            if mesh.nx is None:
                raise ValueError("only structured rectangle meshes are serializable")
            c = mesh.corners
            f.write("D2 %d %d %.17g %.17g %.17g %.17g\n"
                    % (mesh.nx, mesh.ny, c[0], c[1], c[2], c[3]))
        for v in rho.values:
            f.write("%.17g\n" % v)


def load_density(path):
    with open(path) as f:
        header = f.readline().split()
        values = np.array([float(line) for line in f if line.strip()])
    if not header:
        raise ValueError("empty density file")
    if header[0] == "D1":
        mesh = build_interval_mesh(float(header[1]), int(header[2]))
    elif header[0] == "D2":
        nx, ny = int(header[1]), int(header[2])
        corners = tuple(float(x) for x in header[3:7])
        mesh = build_tri_mesh(nx, ny, corners)
    else:
        raise ValueError("unknown density file tag %r" % header[0])
    return DensityField(mesh, values)
