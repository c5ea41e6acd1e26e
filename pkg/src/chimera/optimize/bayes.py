"""Gaussian-process surrogate search with expected improvement.

The GP uses a squared-exponential kernel over box-normalized inputs
with standardized targets and a jitter that escalates until the kernel
factorizes; past the active-set size only the lowest-objective subset
is kept. Proposals maximize an exploration-biased EI (or, for a fixed
fraction of iterations, the posterior mean) by random candidates plus
a bounded quasi-Newton polish. A GP failure downgrades that iteration
to a uniform random proposal and is logged on the run record.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.special import ndtr

from ..errors import NumericalError
from ..geometry import Bounds
from .local import _CountingBackend
from .objective import ObjectiveSpec
from .run import IncumbentTracker, OptConfig, OptRun

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def _norm_pdf(z):
    return np.exp(-0.5 * z * z) / _SQRT_2PI


@dataclass
class GaussianProcess:
    """Zero-mean SE-kernel GP on unit-cube inputs, standardized targets."""

    x_train: np.ndarray
    y_mean: float
    y_std: float
    lengthscale: float
    alpha: np.ndarray
    chol: tuple
    jitter: float

    def predict(self, x_query: np.ndarray) -> tuple:
        """(posterior mean, posterior std) in original target units."""
        x_query = np.atleast_2d(x_query)
        k_star = _se_kernel(x_query, self.x_train, self.lengthscale)
        mu = k_star @ self.alpha
        v = cho_solve(self.chol, k_star.T)
        var = 1.0 + self.jitter - np.einsum("ij,ji->i", k_star, v)
        sigma = np.sqrt(np.maximum(var, 0.0))
        return mu * self.y_std + self.y_mean, sigma * self.y_std


def _se_kernel(a: np.ndarray, b: np.ndarray, lengthscale: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-0.5 * d2 / lengthscale**2)


def _median_lengthscale(x: np.ndarray) -> float:
    """Median pairwise distance of the inputs, floored at 1e-3.

    The active set shrinks toward the incumbent as a run progresses, so
    the heuristic starts near the box scale and sharpens with it."""
    if len(x) < 2:
        return 1.0
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    d = np.sqrt(d2[np.triu_indices(len(x), k=1)])
    d = d[d > 0.0]
    if d.size == 0:
        return 1.0
    return max(float(np.median(d)), 1e-3)


def gp_fit(x_train: np.ndarray, y_train: np.ndarray,
           lengthscale: Optional[float] = None) -> GaussianProcess:
    """Fit the GP; jitter escalates tenfold from 1e-10 to 1e-2 before
    giving up with a numerical-failure error. Without an explicit
    lengthscale the median-distance heuristic is used."""
    x_train = np.atleast_2d(np.asarray(x_train, dtype=float))
    if lengthscale is None:
        lengthscale = _median_lengthscale(x_train)
    y_train = np.asarray(y_train, dtype=float)
    y_mean = float(y_train.mean())
    y_std = float(y_train.std())
    if y_std < 1e-30:
        y_std = 1.0
    y_n = (y_train - y_mean) / y_std
    k = _se_kernel(x_train, x_train, lengthscale)
    jitter = 1e-10
    while jitter <= 1e-2:
        try:
            chol = cho_factor(k + jitter * np.eye(len(x_train)), lower=True)
            alpha = cho_solve(chol, y_n)
            return GaussianProcess(x_train=x_train, y_mean=y_mean, y_std=y_std,
                                   lengthscale=lengthscale, alpha=alpha,
                                   chol=chol, jitter=jitter)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError("GP kernel matrix is not positive definite",
                         n_points=len(x_train), jitter=jitter)


def expected_improvement(mu, sigma, f_min):
    """EI for minimization: (f_min - mu) Phi(z) + sigma phi(z),
    z = (f_min - mu) / sigma; the sigma = 0 limit is max(f_min - mu, 0)."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    improve = f_min - mu
    out = np.maximum(improve, 0.0)
    positive = sigma > 0.0
    if np.any(positive):
        z = improve[positive] / sigma[positive]
        out = np.array(out, dtype=float)
        out[positive] = improve[positive] * ndtr(z) + sigma[positive] * _norm_pdf(z)
    return out if out.ndim else float(out)


def _propose(gp: GaussianProcess, f_min: float, explore: bool, rng,
             dim: int, z_incumbent: Optional[np.ndarray] = None,
             n_candidates: int = 2000) -> np.ndarray:
    """Maximize the acquisition over the unit cube.

    Uniform candidates alone are too sparse in 8-D to land near the
    incumbent, so a local cloud around it joins the pool and the
    quasi-Newton polish also restarts from the incumbent itself."""
    if explore:
        def acq(z):
            mu, sigma = gp.predict(z)
            return expected_improvement(mu, sigma, f_min) + 0.1 * sigma
    else:
        def acq(z):
            mu, _ = gp.predict(z)
            return -mu

    candidates = rng.uniform(size=(n_candidates, dim))
    starts = []
    if z_incumbent is not None:
        cloud = z_incumbent + rng.normal(
            scale=0.25 * gp.lengthscale, size=(200, dim))
        candidates = np.vstack([candidates, np.clip(cloud, 0.0, 1.0)])
        starts.append(np.asarray(z_incumbent, dtype=float))
    values = acq(candidates)
    best = candidates[int(np.argmax(values))]
    best_value = float(np.max(values))
    starts.append(best)
    for start in starts:
        result = minimize(lambda z: -float(acq(z[None, :])[0]), start,
                          method="L-BFGS-B", bounds=[(0.0, 1.0)] * dim,
                          options={"maxiter": 60})
        if -result.fun >= best_value:
            best = np.clip(result.x, 0.0, 1.0)
            best_value = float(-result.fun)
    return best


def run_bayesopt(spec: ObjectiveSpec, bounds: Bounds,
                 config: Optional[OptConfig] = None) -> OptRun:
    config = config or OptConfig()
    rng = np.random.default_rng(config.seed)
    counting = _CountingBackend(spec.backend)
    spec = dataclasses.replace(spec, backend=counting)
    lb, span, dim = bounds.lb, bounds.span, bounds.dim

    z_all = rng.uniform(size=(config.bo_seeds, dim))
    x_all = lb + z_all * span
    f_all = spec.f_p_batch(x_all)

    tracker = IncumbentTracker(spec)
    finite = np.isfinite(f_all)
    fallbacks = []
    if finite.any():
        best = int(np.argmin(np.where(finite, f_all, np.inf)))
        tracker.offer(x_all[best], f_all[best])
        tracker.record(iteration=0)

    n_evals = config.bo_seeds
    iteration = 0
    while n_evals < config.bo_max_evals:
        iteration += 1
        explore = rng.uniform() < config.exploration
        z_next = None
        if finite.any():
            keep = np.flatnonzero(finite)
            if keep.size > config.bo_active_set:
                keep = keep[np.argsort(f_all[keep], kind="stable")[: config.bo_active_set]]
            try:
                # model log f: the penalized objective is positive with a
                # range spanning decades, and the monotone transform keeps
                # the argmin while letting the GP resolve the low end
                y_fit = np.log(np.maximum(f_all[keep], 1e-300))
                gp = gp_fit(z_all[keep], y_fit)
                z_inc = z_all[keep][int(np.argmin(f_all[keep]))]
                z_next = _propose(gp, float(y_fit.min()), explore, rng,
                                  dim, z_incumbent=z_inc)
            except NumericalError as exc:
                fallbacks.append({"iteration": iteration, "reason": str(exc)})
        else:
            fallbacks.append({"iteration": iteration, "reason": "no finite observations"})
        if z_next is None:
            z_next = rng.uniform(size=dim)

        x_next = lb + z_next * span
        f_next = spec.f_p_batch(x_next[None, :])[0]
        z_all = np.vstack([z_all, z_next])
        x_all = np.vstack([x_all, x_next])
        f_all = np.append(f_all, f_next)
        finite = np.append(finite, np.isfinite(f_next))
        n_evals += 1
        if np.isfinite(f_next):
            tracker.offer(x_next, float(f_next))
        if tracker.x is not None:
            tracker.record(iteration=iteration)

    if tracker.x is None:
        return OptRun(method="bayes", x_best=x_all[0], f_best=np.inf,
                      feasible=False, h_best=np.inf, history=[],
                      meta={"seed": config.seed, "status": "no_feasible_solution",
                            "evaluations": n_evals, "fallbacks": fallbacks,
                            "exploration": config.exploration})

    h_best = spec.h_batch(tracker.x[None, :])[0]
    return OptRun(
        method="bayes",
        x_best=tracker.x,
        f_best=tracker.f,
        feasible=bool(abs(h_best) <= config.constraint_tol),
        h_best=float(h_best),
        history=tracker.history,
        meta={"seed": config.seed, "status": "ok", "evaluations": n_evals,
              "fallbacks": fallbacks, "exploration": config.exploration,
              "exploration_rule": "EI + 0.1 sigma when u < ratio, else posterior mean"},
    )
