"""Constrained local descent and the multi-start driver.

The local solver minimizes f_g subject to the target-lift equality and
the design box by combining a log barrier on the bounds with an
augmented Lagrangian on h, taking damped-BFGS inner steps under an
Armijo line search that never touches the box faces. Gradients come
from central differences over the backend. The multi-start driver
launches it from uniform points and keeps the best feasible solution,
reporting an explicit no-feasible-solution status when every start
fails the constraint tolerance.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InfeasibleEvaluationError
from ..geometry import Bounds
from .objective import (ObjectiveSpec, estimate_multipliers, fd_objective_gradients,
                        kkt_residual)
from .run import IncumbentTracker, OptConfig, OptRun


class _CountingBackend:
    """Counts evaluated design rows on behalf of a wrapped backend."""

    def __init__(self, inner):
        self.inner = inner
        self.rows = 0

    def __call__(self, x):
        self.rows += np.atleast_2d(x).shape[0]
        return self.inner(x)


@dataclass
class LocalResult:
    x: np.ndarray
    f: float
    h: float
    status: str
    iterations: int


def _merit(spec: ObjectiveSpec, x, lam, mu, mu_bar, lb, ub) -> float:
    try:
        f, h = spec.f_and_h(x)
    except InfeasibleEvaluationError:
        return np.inf
    gap_lo = x - lb
    gap_hi = ub - x
    if (gap_lo <= 0.0).any() or (gap_hi <= 0.0).any():
        return np.inf
    barrier = np.log(gap_lo).sum() + np.log(gap_hi).sum()
    return f + lam * h + 0.5 * mu * h * h - mu_bar * barrier


def _merit_gradient(spec, x, lam, mu, mu_bar, lb, ub, step) -> tuple:
    """(merit grad, f, h) at a strictly interior point."""
    f, h = spec.f_and_h(x)
    gf, gh = fd_objective_gradients(spec, x, step=step)
    grad = gf + (lam + mu * h) * gh - mu_bar * (1.0 / (x - lb) - 1.0 / (ub - x))
    return grad, f, h, gf, gh


def local_solve(spec: ObjectiveSpec, bounds: Bounds, x0: np.ndarray,
                config: OptConfig, fd_step: float = 1e-5) -> LocalResult:
    """Barrier + augmented-Lagrangian descent from one start point."""
    lb, ub = bounds.lb, bounds.ub
    span = ub - lb
    x = np.clip(np.asarray(x0, dtype=float), lb + 1e-9 * span, ub - 1e-9 * span)

    try:
        f0, h0 = spec.f_and_h(x)
    except InfeasibleEvaluationError:
        return LocalResult(x=x, f=np.inf, h=np.inf, status="infeasible_start",
                           iterations=0)
    scale = max(1.0, abs(f0))
    lam, mu = 0.0, 10.0
    mu_bar = 1e-3 * scale
    h_prev = abs(h0)
    status = "max_outer"
    total_inner = 0

    for outer in range(40):
        inner_tol = max(0.1 * config.optimality_tol, min(1e-2 * scale, mu_bar))
        hmat = np.eye(x.size)
        grad, f, h, gf, gh = _merit_gradient(spec, x, lam, mu, mu_bar, lb, ub, fd_step)
        value = f + lam * h + 0.5 * mu * h * h - mu_bar * (
            np.log(x - lb).sum() + np.log(ub - x).sum())

        for inner in range(config.max_iter):
            total_inner += 1
            if np.abs(grad).max() <= inner_tol:
                break
            d = -hmat @ grad
            if d @ grad >= 0.0:
                hmat = np.eye(x.size)
                d = -grad
            # largest step keeping x strictly inside the box
            t_max = np.inf
            pos = d > 0.0
            neg = d < 0.0
            if pos.any():
                t_max = min(t_max, ((ub - x)[pos] / d[pos]).min())
            if neg.any():
                t_max = min(t_max, ((lb - x)[neg] / d[neg]).min())
            t = min(1.0, 0.9995 * t_max)
            slope = float(grad @ d)
            accepted = False
            for _ in range(60):
                trial = x + t * d
                trial_value = _merit(spec, trial, lam, mu, mu_bar, lb, ub)
                if trial_value <= value + 1e-4 * t * slope:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break
            s = t * d
            x_new = x + s
            grad_new, f, h, gf, gh = _merit_gradient(
                spec, x_new, lam, mu, mu_bar, lb, ub, fd_step)
            y = grad_new - grad
            sy = float(s @ y)
            if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
                rho = 1.0 / sy
                i_mat = np.eye(x.size)
                left = i_mat - rho * np.outer(s, y)
                hmat = left @ hmat @ left.T + rho * np.outer(s, s)
            x, grad, value = x_new, grad_new, trial_value
            if np.abs(s).max() < config.step_tol * max(1.0, np.abs(x).max()):
                break

        # multiplier and penalty updates
        lam += mu * h
        if abs(h) > 0.25 * h_prev:
            mu = min(mu * 10.0, 1e12)
        h_prev = max(abs(h), 1e-300)
        mu_bar = max(mu_bar * 0.2, 1e-14 * scale)

        if abs(h) <= 0.5 * config.constraint_tol and mu_bar <= 1e-8 * scale:
            point = estimate_multipliers(x, spec, bounds, step=fd_step)
            point = dataclasses.replace(point, lam=lam)
            res = kkt_residual(point, spec, bounds, step=fd_step)
            if res.within(config.optimality_tol, config.constraint_tol):
                status = "converged"
                break

    f, h = spec.f_and_h(x)
    return LocalResult(x=x, f=f, h=h, status=status, iterations=total_inner)


def run_multistart(spec: ObjectiveSpec, bounds: Bounds,
                   config: Optional[OptConfig] = None) -> OptRun:
    """Best feasible f_g over uniformly seeded local solves."""
    config = config or OptConfig()
    rng = np.random.default_rng(config.seed)
    counting = _CountingBackend(spec.backend)
    spec = dataclasses.replace(spec, backend=counting)

    starts = bounds.lb + rng.uniform(size=(config.n_starts, bounds.dim)) * bounds.span
    tracker = IncumbentTracker(spec)
    fallback = None  # best-|h| solution, reported only as a diagnostic
    n_converged = 0
    statuses = []

    for i in range(config.n_starts):
        if counting.rows >= config.max_evals:
            statuses.append("budget_exhausted")
            break
        result = local_solve(spec, bounds, starts[i], config)
        statuses.append(result.status)
        if result.status == "converged":
            n_converged += 1
        if abs(result.h) <= config.constraint_tol:
            if tracker.offer(result.x, result.f):
                pass
        if np.isfinite(result.h) and (fallback is None or abs(result.h) < abs(fallback.h)):
            fallback = result
        if tracker.x is not None:
            tracker.record(iteration=i)

    meta = {
        "seed": config.seed,
        "n_starts": config.n_starts,
        "n_converged": n_converged,
        "statuses": statuses,
        "backend_rows": counting.rows,
    }
    if tracker.x is None:
        meta["status"] = "no_feasible_solution"
        x_best = fallback.x if fallback is not None else starts[0]
        h_best = fallback.h if fallback is not None else np.inf
        f_best = fallback.f if fallback is not None else np.inf
        return OptRun(method="grad", x_best=x_best, f_best=f_best,
                      feasible=False, h_best=h_best, history=[], meta=meta)

    meta["status"] = "ok"
    h_best = spec.constraint_h(tracker.x)
    point = estimate_multipliers(tracker.x, spec, bounds)
    res = kkt_residual(point, spec, bounds)
    kkt = {
        "lambda": float(point.lam),
        "alpha": [float(v) for v in point.alpha],
        "beta": [float(v) for v in point.beta],
        "stationarity": res.stationarity,
        "feasibility": res.feasibility,
        "complementarity": res.complementarity,
    }
    return OptRun(method="grad", x_best=tracker.x, f_best=tracker.f,
                  feasible=abs(h_best) <= config.constraint_tol, h_best=h_best,
                  history=tracker.history, kkt=kkt, meta=meta)
