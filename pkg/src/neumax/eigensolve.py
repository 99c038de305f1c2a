"""Deterministic smallest-end solves of the generalized symmetric pencil
M u = mu K u with K-orthonormal eigenvectors.

Small problems go through a dense solve.  Large ones use ARPACK shift-invert
with a fixed start vector, refined by block inverse iteration so that the
clustered spectra produced by degenerate densities come out with tight
residuals.
"""

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

__all__ = ["Spectrum", "SolverError", "solve_lowest", "rayleigh",
           "unrelaxed_solve_on_support"]

_DENSE_CUTOFF = 900


class SolverError(RuntimeError):
    """Eigensolve failed to meet its residual tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class Spectrum:
    """Sorted eigenvalues with K-orthonormal eigenvectors (columns)."""

    def __init__(self, eigenvalues, eigenvectors, residual_norms):
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.eigenvectors = np.asarray(eigenvectors, dtype=float)
        self.residual_norms = np.asarray(residual_norms, dtype=float)

    def __len__(self):
        return len(self.eigenvalues)

    def report_text(self):
        lines = []
        for k, (mu, r) in enumerate(zip(self.eigenvalues, self.residual_norms)):
            lines.append("%d %.12g %.3g" % (k, mu, r))
        return "\n".join(lines) + "\n"


def rayleigh(pair, v):
    """Rayleigh quotient (v'Mv)/(v'Kv) of the pencil."""
    v = np.asarray(v, dtype=float)
    denom = v @ (pair.K @ v)
    if denom <= 0:
        raise ValueError("vector has nonpositive K-norm")
    return float(v @ (pair.M @ v) / denom)


def _residuals(M, K, mu, U):
    res = np.empty(len(mu))
    for i in range(len(mu)):
        u = U[:, i]
        Ku = K @ u
        res[i] = np.linalg.norm(M @ u - mu[i] * Ku) / np.linalg.norm(Ku)
    return res


def _rayleigh_ritz(M, K, W):
    """Dense solve of the pencil projected on the span of the columns of W."""
    Mw = W.T @ (M @ W)
    Kw = W.T @ (K @ W)
    Mw = 0.5 * (Mw + Mw.T)
    Kw = 0.5 * (Kw + Kw.T)
    vals, Y = sla.eigh(Mw, Kw)
    return vals, W @ Y


def _shift_factor(M, K):
    # trace ratio estimates the top of the spectrum; dividing by n brings the
    # shift down to the scale of the smallest eigenvalues (Weyl growth)
    scale = M.diagonal().sum() / K.diagonal().sum()
    sigma = -max(scale / M.shape[0], 1e-12 * scale)
    return sigma, spla.splu((M - sigma * K).tocsc())


def _refine(M, K, opinv, X, count, tol, sweeps):
    """Block inverse iteration with Rayleigh-Ritz extraction; returns
    (vals, vecs, residuals) for the best iterate seen."""
    best = np.inf
    vals = res = None
    for _ in range(sweeps):
        vals, X = _rayleigh_ritz(M, K, X)
        res = _residuals(M, K, vals[:count], X[:, :count])
        worst = res.max()
        if worst <= tol or worst > 0.5 * best:
            break
        best = worst
        X = opinv.solve(K @ X)
        X, _ = np.linalg.qr(X)
    return vals[:count], X[:, :count], res, X


def solve_lowest(pair, count, tol=1e-9, maxiter=None):
    """The `count` smallest eigenpairs of M u = mu K u.

    Eigenvectors are K-orthonormal; ties are ordered by the solver's
    deterministic internal index.  Raises SolverError when the relative
    residual target is missed by more than a factor 50.
    """
    M, K = pair.M, pair.K
    n = M.shape[0]
    if count < 1:
        raise ValueError("count must be >= 1")
    if count >= n:
        raise ValueError("count must be smaller than the DOF count")

    if n <= _DENSE_CUTOFF:
        vals, U = sla.eigh(M.toarray(), K.toarray(),
                           subset_by_index=[0, count - 1])
        res = _residuals(M, K, vals, U)
        if res.max() > 50 * tol:
            raise SolverError("dense solve residuals above tolerance: %s" % res,
                              residuals=res)
        return _finalize(K, vals, U, res, tol)

    sigma, opinv = _shift_factor(M, K)
    v0 = np.random.default_rng(20240813).standard_normal(n)
    if maxiter is None:
        maxiter = 500 * count
    k_arp = min(count + 3, n - 1)
    ncv = min(n, max(2 * k_arp + 2, 20))
    OPinv = spla.LinearOperator((n, n), matvec=opinv.solve, dtype=float)
    try:
        vals, X = spla.eigsh(M, k=k_arp, M=K, sigma=sigma, which="LM",
                             v0=v0, ncv=ncv, tol=min(tol * 1e-2, 1e-8),
                             maxiter=maxiter, OPinv=OPinv)
    except spla.ArpackNoConvergence as exc:
        if exc.eigenvalues is None or len(exc.eigenvalues) < count:
            raise SolverError("eigensolver did not converge") from exc
        vals, X = exc.eigenvalues, exc.eigenvectors

    vals, U, res, _ = _refine(M, K, opinv, X, count, tol, sweeps=30)
    if res.max() > 50 * tol:
        raise SolverError("eigensolver stalled with residuals %s" % res,
                          residuals=res)
    return _finalize(K, vals, U, res, tol)


def unrelaxed_solve_on_support(mesh, rho_values, count, tol=1e-9):
    """Eigenpairs of the weighted pencil with no relaxation terms.

    Intended for support-restricted meshes where the density is bounded
    away from zero, so both matrices carry the bare weight rho.
    """
    from .assembly import assemble_unrelaxed

    rho_values = np.asarray(rho_values, dtype=float)
    if np.min(rho_values) <= 0:
        raise ValueError("unrelaxed solve requires a strictly positive density "
                         "on the support mesh")
    pair = assemble_unrelaxed(mesh, rho_values)
    return solve_lowest(pair, count, tol=tol)


def _finalize(K, vals, U, res, tol):
    order = np.argsort(vals, kind="stable")
    vals = np.asarray(vals)[order]
    U = np.asarray(U)[:, order]
    for i in range(U.shape[1]):
        U[:, i] /= np.sqrt(U[:, i] @ (K @ U[:, i]))
    res = np.asarray(res)[order]
    return Spectrum(vals, U, res)
