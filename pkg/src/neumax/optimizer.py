"""Projected-gradient ascent of the penalized eigenvalue objective

    ||rho||_1 * mu_k^eps(rho) - alpha * (||rho||_1 - m)^2

over P1 densities in the box [0, 1].  When mu_k sits in a cluster of
near-equal eigenvalues the target switches to the cluster mean with a
quadratic gap penalty, which is the smooth surrogate whose gradient is
basis-invariant; the two objectives coincide for a cluster of width one.
"""

import time

import numpy as np
from scipy.optimize import minimize

from .density import DensityField, mass, p1_load_vector, project_box
from .assembly import assemble
from .eigensolve import solve_lowest
from .sensitivity import cluster_objective_gradient, detect_cluster

__all__ = ["OptimizerConfig", "OptimizerState", "objective", "step", "run",
           "run_multi"]

_BETA_MAX = 320.0


class OptimizerConfig:
    """Settings of one optimization run."""

    def __init__(self, mesh, k, m=0.4, eps=1e-3, alpha=None, sigma=0.1,
                 beta=10.0, step0=None, max_iters=150, ftol=1e-7, gtol=1e-7,
                 seed=0, tol=1e-9):
        if k < 1:
            raise ValueError("target index k must be >= 1")
        if m <= 0 or m >= mesh.area:
            raise ValueError("target mass must lie in (0, |D|)")
        if eps <= 0 or sigma <= 0:
            raise ValueError("eps and sigma must be positive")
        self.mesh = mesh
        self.k = int(k)
        self.m = float(m)
        self.eps = float(eps)
        self.alpha = alpha
        self.sigma = float(sigma)
        self.beta = float(beta)
        self.step0 = step0
        self.max_iters = int(max_iters)
        self.ftol = float(ftol)
        self.gtol = float(gtol)
        self.seed = int(seed)
        self.tol = float(tol)

    def resolved_alpha(self):
        """Penalty weight; by default 100x the uniform-density mu_k scale."""
        if self.alpha is not None:
            return float(self.alpha)
        uniform = DensityField(self.mesh, np.full(self.mesh.p1_dof_count,
                                                  min(1.0, self.m / self.mesh.area)))
        sp = solve_lowest(assemble(self.mesh, uniform, self.eps),
                          self.k + 1, tol=1e-7)
        return 100.0 * max(sp.eigenvalues[self.k], 1.0)


class OptimizerState:
    """One iterate: density, spectrum-derived quantities and history."""

    def __init__(self, rho, iteration=0, step=None, beta=None):
        self.rho = rho
        self.iteration = iteration
        self.step = step
        self.beta = beta
        self.objective = None
        self.merit = None
        self.gradient = None
        self.spectrum = None
        self.cluster = None
        self.mass = None
        self.history = []
        self.converged = False
        self.status = "running"


def _evaluate(rho, cfg, alpha, beta, need_gradient):
    """Solve the pencil at rho and return (objective, merit, grad, spectrum,
    cluster, mass).  merit is the smooth surrogate actually ascended."""
    pair = assemble(cfg.mesh, rho, cfg.eps)
    count = min(cfg.k + 4, pair.dof_count - 1)
    sp = solve_lowest(pair, count, tol=cfg.tol)
    cluster = detect_cluster(sp.eigenvalues, cfg.k, cfg.sigma)

    L1 = mass(rho)
    mus = sp.eigenvalues[cfg.k:cfg.k + cluster.l]
    mean = mus.mean()
    gaps = sum((mus[i] - mus[j]) ** 2
               for i in range(len(mus)) for j in range(i + 1, len(mus)))
    penalty = alpha * (L1 - cfg.m) ** 2
    obj = L1 * mean - penalty
    merit = L1 * (mean - beta * gaps / cluster.l) - penalty

    grad = None
    if need_gradient:
        rep = cluster_objective_gradient(pair, sp, cluster, beta=beta)
        load = p1_load_vector(cfg.mesh)
        smooth = rep.values / cluster.l  # gradient of the cluster mean part
        grad = (load * (mean - beta * gaps / cluster.l) + L1 * smooth
                - 2.0 * alpha * (L1 - cfg.m) * load)
        # deflate most of the mass-direction component: the stiff penalty
        # otherwise dwarfs the spectral part and strangles the step length
        if abs(L1 - cfg.m) < 0.02 * cfg.m:
            grad = grad - (load @ grad) / (load @ load) * load
    return obj, merit, grad, sp, cluster, L1


def objective(rho, cfg):
    """Penalized objective value at rho (cluster mean when a cluster is
    active, plain mu_k otherwise)."""
    alpha = cfg.resolved_alpha()
    obj, _, _, _, _, _ = _evaluate(rho, cfg, alpha, cfg.beta, False)
    return obj


def initial_density(cfg):
    """Near-uniform start with seeded noise, rescaled to the target mass."""
    rng = np.random.default_rng(cfg.seed)
    base = cfg.m / cfg.mesh.area
    values = base + 0.2 * rng.uniform(-1.0, 1.0, cfg.mesh.p1_dof_count)
    values = np.clip(values, 0.0, 1.0)
    rho = DensityField(cfg.mesh, values)
    for _ in range(3):
        cur = mass(rho)
        if cur <= 0:
            break
        rho = project_box(cfg.mesh, rho.values * (cfg.m / cur))
    return rho


def _projected_gradient_norm(rho, grad):
    """Sup-norm of the gradient restricted to non-binding box directions."""
    g = grad.copy()
    g[(rho.values <= 0.0) & (g < 0)] = 0.0
    g[(rho.values >= 1.0) & (g > 0)] = 0.0
    return float(np.abs(g).max())


def step(state, cfg, alpha=None):
    """One backtracking projected-gradient ascent step, in place.

    Halves the step length up to 20 times; on stall with a wide cluster
    whose internal gap exceeds sigma/2 the gap-penalty weight is doubled
    and the search restarted, otherwise the state is marked converged.
    """
    if alpha is None:
        alpha = cfg.resolved_alpha()
    if state.beta is None:
        state.beta = cfg.beta

    if state.gradient is None:
        (state.objective, state.merit, state.gradient, state.spectrum,
         state.cluster, state.mass) = _evaluate(state.rho, cfg, alpha,
                                                state.beta, True)

    gnorm = _projected_gradient_norm(state.rho, state.gradient)
    if gnorm < cfg.gtol:
        state.converged = True
        state.status = "gradient tolerance reached"
        return state

    if state.step is None:
        state.step = cfg.step0 if cfg.step0 is not None else 0.05 / gnorm

    s = state.step
    for _ in range(21):
        trial = project_box(cfg.mesh, state.rho.values + s * state.gradient)
        obj, merit, grad, sp, cluster, L1 = _evaluate(trial, cfg, alpha,
                                                      state.beta, True)
        if merit > state.merit:
            state.rho = trial
            state.objective = obj
            state.merit = merit
            state.gradient = grad
            state.spectrum = sp
            state.cluster = cluster
            state.mass = L1
            state.step = 2.0 * s  # gentle growth after success
            state.iteration += 1
            return state
        s *= 0.5

    # stalled; widen the gap penalty if the cluster is genuinely split
    if state.cluster.l > 1 and state.beta < _BETA_MAX:
        mus = state.spectrum.eigenvalues[cfg.k:cfg.k + state.cluster.l]
        if mus[-1] - mus[0] > cfg.sigma / 2:
            state.beta *= 2.0
            (state.objective, state.merit, state.gradient, state.spectrum,
             state.cluster, state.mass) = _evaluate(state.rho, cfg, alpha,
                                                    state.beta, True)
            state.step = None
            return state
    state.converged = True
    state.status = "line search stalled"
    return state


def _threshold_move(state, cfg, alpha):
    """Try replacing rho by the indicator of an upper level set of the
    gradient holding mass m (the bang-bang candidate of the linearized
    problem); accept only on merit improvement."""
    g = state.gradient
    load = p1_load_vector(cfg.mesh)
    order = np.argsort(-g, kind="stable")
    cum = np.cumsum(load[order])
    cut = int(np.searchsorted(cum, cfg.m))
    if cut < 1 or cut >= len(g):
        return False
    values = np.zeros(len(g))
    values[order[:cut + 1]] = 1.0
    for theta in (1.0, 0.5, 0.25):
        blend = (1.0 - theta) * state.rho.values + theta * values
        trial = DensityField(cfg.mesh, blend)
        obj, merit, grad, sp, cluster, L1 = _evaluate(trial, cfg, alpha,
                                                      state.beta, True)
        if merit > state.merit:
            state.rho = trial
            state.objective = obj
            state.merit = merit
            state.gradient = grad
            state.spectrum = sp
            state.cluster = cluster
            state.mass = L1
            state.iteration += 1
            return True
    return False


def _quasi_newton_phase(rho0, cfg, alpha, history):
    """Box-constrained L-BFGS ascent of the merit function; the workhorse
    first phase.  Returns the best density seen."""
    trace = []

    def fun(x):
        rho = DensityField(cfg.mesh, np.clip(x, 0.0, 1.0))
        obj, merit, grad, sp, cluster, L1 = _evaluate(rho, cfg, alpha,
                                                      cfg.beta, True)
        trace.append((obj, float(sp.eigenvalues[cfg.k]), L1, cluster.l, x.copy()))
        return -merit, -grad

    res = minimize(fun, rho0.values, jac=True, method="L-BFGS-B",
                   bounds=[(0.0, 1.0)] * cfg.mesh.p1_dof_count,
                   options=dict(maxiter=cfg.max_iters, ftol=1e-12,
                                gtol=1e-10))
    for i, (obj, mu_k, L1, width, _) in enumerate(trace):
        history.append((-len(trace) + i, obj, mu_k, L1, width))
    best = max(trace, key=lambda t: t[0])
    return DensityField(cfg.mesh, np.clip(best[4], 0.0, 1.0))


def run(cfg):
    """Two-phase maximization from the seeded start; returns
    (DensityField, report).

    Phase one is a box-constrained quasi-Newton ascent of the smooth merit;
    phase two polishes with the monotone projected-gradient `step` loop.
    The report carries the per-iteration history, final eigenvalues and
    mass; everything is deterministic given cfg.seed.
    """
    t0 = time.time()
    alpha = cfg.resolved_alpha()
    history = []
    rho0 = _quasi_newton_phase(initial_density(cfg), cfg, alpha, history)
    state = OptimizerState(rho0)
    state.history = history
    best_rho, best_obj = state.rho, -np.inf
    prev_obj = None

    polish_budget = max(20, cfg.max_iters // 3)
    for it in range(polish_budget):
        if state.gradient is not None and it % 5 == 4:
            if _threshold_move(state, cfg, alpha):
                state.history.append((state.iteration, state.objective,
                                      float(state.spectrum.eigenvalues[cfg.k]),
                                      state.mass, state.cluster.l))
                prev_obj = state.objective
                continue
        step(state, cfg, alpha=alpha)
        if state.objective > best_obj:
            best_obj, best_rho = state.objective, state.rho
        state.history.append((state.iteration, state.objective,
                              float(state.spectrum.eigenvalues[cfg.k]),
                              state.mass, state.cluster.l))
        if state.converged:
            break
        if prev_obj is not None and state.objective > prev_obj:
            rel = (state.objective - prev_obj) / max(abs(state.objective), 1.0)
            if rel < cfg.ftol:
                state.status = "objective stalled"
                break
        prev_obj = state.objective

    mu = state.spectrum.eigenvalues
    intermediate = float(np.mean((best_rho.values > 0.05)
                                 & (best_rho.values < 0.95)))
    report = {
        "k": cfg.k,
        "m": cfg.m,
        "eps": cfg.eps,
        "alpha": alpha,
        "sigma": cfg.sigma,
        "beta": state.beta,
        "seed": cfg.seed,
        "iterations": state.iteration,
        "status": state.status,
        "objective": best_obj,
        "mu": [float(v) for v in mu[:cfg.k + 3]],
        "mu_k": float(mu[cfg.k]),
        "mass": state.mass,
        "cluster_width": state.cluster.l,
        "scale_invariant_value": float(state.mass * mu[cfg.k]),
        "intermediate_fraction": intermediate,
        "history": state.history,
        "wall_time": time.time() - t0,
    }
    if abs(state.mass - cfg.m) > 0.02 * cfg.m:
        report["mass_warning"] = "final mass misses the target by more than 2%"
    return best_rho, report


def run_multi(cfg, seeds):
    """Best-of multi-start over the given seeds (deterministic merge)."""
    best = None
    reports = []
    for seed in seeds:
        sub = OptimizerConfig(cfg.mesh, cfg.k, m=cfg.m, eps=cfg.eps,
                              alpha=cfg.alpha, sigma=cfg.sigma, beta=cfg.beta,
                              step0=cfg.step0, max_iters=cfg.max_iters,
                              ftol=cfg.ftol, gtol=cfg.gtol, seed=seed,
                              tol=cfg.tol)
        rho, report = run(sub)
        reports.append(report)
        if best is None or report["objective"] > best[1]["objective"]:
            best = (rho, report)
    rho, report = best
    report = dict(report)
    report["seeds"] = list(seeds)
    report["all_values"] = [r["scale_invariant_value"] for r in reports]
    return rho, report
