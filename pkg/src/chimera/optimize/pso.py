"""Particle swarm over the penalized objective.

Update law per particle: v <- W v + c1 u1 (p - x) + c2 u2 (g - x)
with fresh uniform u1, u2 each iteration, then x <- clip(x + v) onto
the box. Inertia W decays linearly over the iteration budget; the run
stops early after a fixed number of iterations without global-best
improvement.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import InvalidInputError
from ..geometry import Bounds
from .objective import ObjectiveSpec
from .run import IncumbentTracker, OptConfig, OptRun


def run_pso(spec: ObjectiveSpec, bounds: Bounds,
            config: Optional[OptConfig] = None) -> OptRun:
    config = config or OptConfig()
    if config.swarm_size < 2:
        raise InvalidInputError("swarm_size must be >= 2")
    rng = np.random.default_rng(config.seed)
    lb, ub, span = bounds.lb, bounds.ub, bounds.span
    n, dim = config.swarm_size, bounds.dim

    x = lb + rng.uniform(size=(n, dim)) * span
    v = np.zeros_like(x)
    f = spec.f_p_batch(x)
    p_best = x.copy()
    p_val = f.copy()
    g_idx = int(np.argmin(p_val))

    tracker = IncumbentTracker(spec)
    tracker.offer(p_best[g_idx], p_val[g_idx])
    tracker.record(iteration=0)
    stall = 0
    iterations_run = 0

    for it in range(1, config.pso_max_iter + 1):
        iterations_run = it
        frac = (it - 1) / max(config.pso_max_iter - 1, 1)
        inertia = config.inertia_start + (config.inertia_end - config.inertia_start) * frac
        u1 = rng.uniform(size=(n, dim))
        u2 = rng.uniform(size=(n, dim))
        v = (inertia * v
             + config.c1 * u1 * (p_best - x)
             + config.c2 * u2 * (tracker.x - x))
        x = np.clip(x + v, lb, ub)
        f = spec.f_p_batch(x)
        better = f < p_val
        p_best[better] = x[better]
        p_val[better] = f[better]
        g_idx = int(np.argmin(p_val))
        if tracker.offer(p_best[g_idx], p_val[g_idx]):
            stall = 0
        else:
            stall += 1
        tracker.record(iteration=it)
        if stall >= config.pso_stall:
            break

    h_best = spec.h_batch(tracker.x[None, :])[0]
    return OptRun(
        method="pso",
        x_best=tracker.x,
        f_best=tracker.f,
        feasible=bool(abs(h_best) <= config.constraint_tol),
        h_best=float(h_best),
        history=tracker.history,
        meta={"seed": config.seed, "iterations": iterations_run,
              "swarm_size": n, "stall": stall},
    )
