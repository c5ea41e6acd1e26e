"""Adaptive Lipschitz partitioning over the box-normalized design cube.

Boxes carry a characteristic value chi(B) = f_p(center) - Lhat d(B)/2
with d(B) the sup-norm diameter; the smallest-chi box is refined by
trisection along its widest dimension, the middle child inheriting the
parent center evaluation. The rate estimate Lhat is the reliability
factor times the steepest pairwise slope seen so far (sup-norm metric),
so chi is a certified lower bound whenever Lhat dominates the true
constant. Deep lineages trigger one constrained local solve from the
box center.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..geometry import Bounds
from .local import _CountingBackend, local_solve
from .objective import ObjectiveSpec
from .run import IncumbentTracker, OptConfig, OptRun


def characteristic(f_center: float, lhat: float, diameter: float) -> float:
    """chi(B) = f(center) - Lhat * diameter / 2."""
    return f_center - lhat * diameter / 2.0


def lipschitz_estimate(points: np.ndarray, values: np.ndarray,
                       reliability: float = 1.1, initial: float = 1e-32) -> float:
    """max over pairs of |f_i - f_j| / ||z_i - z_j||_inf, scaled by the
    reliability factor and floored at the initial estimate."""
    points = np.atleast_2d(points)
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    points, values = points[finite], values[finite]
    best = 0.0
    for i in range(1, len(values)):
        dist = np.abs(points[:i] - points[i]).max(axis=1)
        df = np.abs(values[:i] - values[i])
        ok = dist > 0.0
        if ok.any():
            best = max(best, float((df[ok] / dist[ok]).max()))
    return max(reliability * best, initial)


@dataclass
class _Box:
    lo: np.ndarray
    hi: np.ndarray
    center: np.ndarray
    f_center: float
    depth: int
    local_done: bool = False

    @property
    def diameter(self) -> float:
        return float((self.hi - self.lo).max())


def run_lipschitz(spec: ObjectiveSpec, bounds: Bounds,
                  config: Optional[OptConfig] = None) -> OptRun:
    config = config or OptConfig()
    counting = _CountingBackend(spec.backend)
    spec = dataclasses.replace(spec, backend=counting)
    lb, span, dim = bounds.lb, bounds.span, bounds.dim

    def denorm(z):
        return lb + z * span

    def eval_center(z):
        return float(spec.f_p_batch(denorm(z)[None, :])[0])

    root_center = np.full(dim, 0.5)
    f_root = eval_center(root_center)
    boxes = [_Box(lo=np.zeros(dim), hi=np.ones(dim), center=root_center,
                  f_center=f_root, depth=0)]
    points = [root_center.copy()]
    values = [f_root]
    slope_max = 0.0
    n_evals = 1
    local_solves = 0

    tracker = IncumbentTracker(spec)
    if np.isfinite(f_root):
        tracker.offer(denorm(root_center), f_root)
        tracker.record(iteration=0)

    def add_point(z, f):
        nonlocal slope_max
        if np.isfinite(f):
            arr = np.asarray(points)
            vals = np.asarray(values)
            finite = np.isfinite(vals)
            if finite.any():
                dist = np.abs(arr[finite] - z).max(axis=1)
                df = np.abs(vals[finite] - f)
                ok = dist > 0.0
                if ok.any():
                    slope_max = max(slope_max, float((df[ok] / dist[ok]).max()))
        points.append(np.asarray(z, dtype=float).copy())
        values.append(float(f))

    status = "budget_exhausted"
    iteration = 0
    while n_evals + 2 <= config.lip_budget:
        iteration += 1
        lhat = max(config.lip_reliability * slope_max, config.lip_initial)
        chi = np.array([characteristic(b.f_center, lhat, b.diameter) for b in boxes])
        pick = int(np.argmin(chi))
        box = boxes[pick]

        # the gap certificate is meaningful only once Lhat reflects data
        if (slope_max > 0.0 and tracker.x is not None
                and tracker.f - chi[pick] <= config.lip_tol):
            status = "gap_closed"
            break

        if (box.depth >= config.lip_trigger and not box.local_done
                and tracker.x is not None):
            local = local_solve(spec, bounds, denorm(box.center), config)
            local_solves += 1
            box.local_done = True
            if np.isfinite(local.f):
                f_p_local = float(spec.f_p_batch(local.x[None, :])[0])
                if np.isfinite(f_p_local):
                    tracker.offer(local.x, f_p_local)

        # trisect along the widest dimension (first index on ties)
        width = box.hi - box.lo
        j = int(np.argmax(width))
        third = width[j] / 3.0
        cut1 = box.lo[j] + third
        cut2 = box.hi[j] - third

        center_left = box.center.copy()
        center_left[j] = box.lo[j] + third / 2.0
        center_right = box.center.copy()
        center_right[j] = box.hi[j] - third / 2.0
        f_left = eval_center(center_left)
        f_right = eval_center(center_right)
        n_evals += 2
        add_point(center_left, f_left)
        add_point(center_right, f_right)
        for z, f in ((center_left, f_left), (center_right, f_right)):
            if np.isfinite(f):
                tracker.offer(denorm(z), f)

        lo_mid, hi_mid = box.lo.copy(), box.hi.copy()
        lo_mid[j], hi_mid[j] = cut1, cut2
        lo_left, hi_left = box.lo.copy(), box.hi.copy()
        hi_left[j] = cut1
        lo_right, hi_right = box.lo.copy(), box.hi.copy()
        lo_right[j] = cut2
        child_depth = box.depth + 1
        boxes[pick] = _Box(lo=lo_mid, hi=hi_mid, center=box.center,
                           f_center=box.f_center, depth=child_depth,
                           local_done=box.local_done)
        boxes.append(_Box(lo=lo_left, hi=hi_left, center=center_left,
                          f_center=f_left, depth=child_depth,
                          local_done=box.local_done))
        boxes.append(_Box(lo=lo_right, hi=hi_right, center=center_right,
                          f_center=f_right, depth=child_depth,
                          local_done=box.local_done))

        if tracker.x is not None:
            tracker.record(iteration=iteration)

    if tracker.x is None:
        return OptRun(method="lipschitz", x_best=denorm(root_center),
                      f_best=np.inf, feasible=False, h_best=np.inf, history=[],
                      meta={"seed": config.seed, "status": "no_feasible_solution",
                            "evaluations": n_evals})

    h_best = spec.h_batch(tracker.x[None, :])[0]
    return OptRun(
        method="lipschitz",
        x_best=tracker.x,
        f_best=tracker.f,
        feasible=bool(abs(h_best) <= config.constraint_tol),
        h_best=float(h_best),
        history=tracker.history,
        meta={"seed": config.seed, "status": status, "evaluations": n_evals,
              "boxes": len(boxes), "lhat": max(config.lip_reliability * slope_max,
                                               config.lip_initial),
              "local_solves": local_solves},
    )
