"""Real-valued genetic algorithm over the penalized objective.

Selection is stochastic-uniform on weights proportional to the negated
objective (shifted to be non-negative), crossover is the blend operator
BLX-alpha, mutation perturbs genes with Gaussian noise scaled to the
box, and the single best individual survives unchanged, which makes the
best objective non-increasing across generations.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import InvalidInputError
from ..geometry import Bounds
from .objective import ObjectiveSpec
from .run import IncumbentTracker, OptConfig, OptRun


def _selection_weights(f: np.ndarray) -> np.ndarray:
    """Non-negative weights ~ (-f) after shifting; +inf maps to zero."""
    finite = np.isfinite(f)
    if not finite.any():
        return np.ones_like(f)
    worst = f[finite].max()
    w = np.where(finite, worst - f, 0.0)
    total = w.sum()
    if total <= 0.0:
        w = finite.astype(float)
        total = w.sum()
    return w / total


def _stochastic_uniform(weights: np.ndarray, count: int, rng) -> np.ndarray:
    """Equally spaced pointers over the cumulative weights."""
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    step = 1.0 / count
    points = rng.uniform(0.0, step) + step * np.arange(count)
    return np.searchsorted(cum, points, side="right").clip(0, weights.size - 1)


def run_ga(spec: ObjectiveSpec, bounds: Bounds,
           config: Optional[OptConfig] = None) -> OptRun:
    config = config or OptConfig()
    if config.population < 4:
        raise InvalidInputError("population must be >= 4")
    rng = np.random.default_rng(config.seed)
    lb, ub, span = bounds.lb, bounds.ub, bounds.span
    n, dim = config.population, bounds.dim
    n_children = n - config.elite

    pop = lb + rng.uniform(size=(n, dim)) * span
    f = spec.f_p_batch(pop)

    tracker = IncumbentTracker(spec)
    best = int(np.argmin(f))
    tracker.offer(pop[best], f[best])
    tracker.record(iteration=0)
    stall = 0
    generations_run = 0

    for gen in range(1, config.generations + 1):
        generations_run = gen
        order = np.argsort(f, kind="stable")
        elite = pop[order[: config.elite]]

        weights = _selection_weights(f)
        parents = _stochastic_uniform(weights, 2 * n_children, rng)
        pa = pop[parents[0::2]]
        pb = pop[parents[1::2]]

        # blend crossover: child uniform in the alpha-expanded parent span
        low = np.minimum(pa, pb)
        high = np.maximum(pa, pb)
        d = high - low
        children = rng.uniform(low - config.crossover_alpha * d,
                               high + config.crossover_alpha * d)

        mutate = rng.uniform(size=children.shape) < config.mutation_rate
        noise = rng.normal(0.0, config.mutation_sigma, size=children.shape) * span
        children = np.where(mutate, children + noise, children)
        children = np.clip(children, lb, ub)

        pop = np.vstack([elite, children])
        f = spec.f_p_batch(pop)
        best = int(np.argmin(f))
        if tracker.offer(pop[best], f[best]):
            stall = 0
        else:
            stall += 1
        tracker.record(iteration=gen)
        if stall >= config.ga_stall:
            break

    h_best = spec.h_batch(tracker.x[None, :])[0]
    return OptRun(
        method="ga",
        x_best=tracker.x,
        f_best=tracker.f,
        feasible=bool(abs(h_best) <= config.constraint_tol),
        h_best=float(h_best),
        history=tracker.history,
        meta={"seed": config.seed, "generations": generations_run,
              "population": n, "stall": stall},
    )
