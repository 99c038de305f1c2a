"""Neumann eigenvalues of density fields.

Relaxed finite-element solves of -div(rho grad u) = mu rho u for densities
that may vanish on large sets, gradient-based maximization of mu_k under a
mass budget, and the one-dimensional sharp-bound analysis suite.
"""

__version__ = "0.1.0"

from .mesh import TriMesh, IntervalMesh, build_tri_mesh, build_interval_mesh
from .density import DensityField, mass, load_density, save_density
from .assembly import OperatorPair, assemble, assemble_1d
from .eigensolve import Spectrum, SolverError, solve_lowest, rayleigh
from .sensitivity import ClusterSpec, GradientReport, eig_gradient
from .optimizer import OptimizerConfig, run, run_multi
from .oned import sharp_bound, kroger_bound, mu_1d
from .postprocess import extract_support, postprocessed_mu
