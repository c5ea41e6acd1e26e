"""Objectives, the target-lift constraint, and KKT diagnostics.

Two scalar objectives over the 8-dimensional design box share one aero
backend (any callable mapping (n, 8) designs to (n, 4) columns of
lift, drag, c_lift, c_drag):

    f_g = (D / 750)^2                    minimized subject to h(x) = 0
    f_p = (D / 100)^2 + 100 h(x)^2       penalized, unconstrained

with h(x) = L_target / L(x) - 1 and L_target = 600 * 9.81 N. Designs
whose lift is non-positive cannot satisfy the constraint in any
meaningful sense; scalar evaluations raise InfeasibleEvaluationError
and batched evaluations return +inf so population methods can discard
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import InfeasibleEvaluationError, InvalidInputError
from ..geometry import Bounds

LIFT_TARGET = 600.0 * 9.81


class SurrogateBackend:
    """Adapts a trained regression SurrogateModel to the backend protocol."""

    def __init__(self, model):
        self.model = model

    def __call__(self, x: np.ndarray) -> np.ndarray:
        values, _ = self.model.predict_aero_batch(x)
        return values


class QuadraticBackend:
    """Closed-form backend with a known interior optimum.

    Lift is identically on target, so h = 0 everywhere; drag is
    D = d0_p * sqrt(offset^2 + sum_i w_i (x_i - m_i)^2), which makes
    f_p a separable quadratic bowl with minimum offset^2 at x = m.
    Used to exercise the optimizers against an analytic truth.
    """

    def __init__(self, center, weights=None, offset: float = 1.0,
                 lift: float = LIFT_TARGET, d0_p: float = 100.0):
        self.center = np.asarray(center, dtype=float)
        self.weights = (np.ones_like(self.center) if weights is None
                        else np.asarray(weights, dtype=float))
        self.offset = float(offset)
        self.lift = float(lift)
        self.d0_p = float(d0_p)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r2 = self.offset**2 + ((x - self.center) ** 2 * self.weights).sum(axis=1)
        drag = self.d0_p * np.sqrt(r2)
        out = np.empty((x.shape[0], 4))
        out[:, 0] = self.lift
        out[:, 1] = drag
        out[:, 2] = 1.0
        out[:, 3] = drag / max(self.lift, 1e-300)
        return out


@dataclass(frozen=True)
class ObjectiveSpec:
    """Objective family parameters bound to an aero backend."""

    backend: Callable[[np.ndarray], np.ndarray]
    lift_target: float = LIFT_TARGET
    d0_g: float = 750.0
    d0_p: float = 100.0
    rho: float = 100.0

    def __post_init__(self):
        if self.d0_g <= 0.0 or self.d0_p <= 0.0 or self.lift_target <= 0.0:
            raise InvalidInputError("normalizers and lift target must be > 0")
        if self.rho < 0.0:
            raise InvalidInputError("penalty magnitude must be >= 0")

    # -- batched forms ------------------------------------------------

    def aero(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        values = np.asarray(self.backend(x), dtype=float)
        if values.shape != (x.shape[0], 4):
            raise InvalidInputError(
                f"backend returned {values.shape}, expected ({x.shape[0]}, 4)")
        return values

    def h_batch(self, x: np.ndarray) -> np.ndarray:
        """Constraint values; +inf where lift is non-positive."""
        lift = self.aero(x)[:, 0]
        out = np.full(lift.shape, np.inf)
        ok = lift > 0.0
        out[ok] = self.lift_target / lift[ok] - 1.0
        return out

    def f_g_batch(self, x: np.ndarray) -> np.ndarray:
        values = self.aero(x)
        out = np.full(values.shape[0], np.inf)
        ok = values[:, 0] > 0.0
        out[ok] = (values[ok, 1] / self.d0_g) ** 2
        return out

    def f_p_batch(self, x: np.ndarray) -> np.ndarray:
        values = self.aero(x)
        out = np.full(values.shape[0], np.inf)
        ok = values[:, 0] > 0.0
        h = self.lift_target / values[ok, 0] - 1.0
        out[ok] = (values[ok, 1] / self.d0_p) ** 2 + self.rho * h * h
        return out

    def f_and_h(self, x: np.ndarray) -> tuple:
        """(f_g, h) for one design, for the constrained local solver."""
        values = self.aero(np.asarray(x, dtype=float)[None, :])[0]
        if values[0] <= 0.0:
            raise InfeasibleEvaluationError(
                "non-positive lift", lift=float(values[0]))
        return (values[1] / self.d0_g) ** 2, self.lift_target / values[0] - 1.0

    # -- scalar forms ---------------------------------------------------

    def constraint_h(self, x) -> float:
        return float(self.f_and_h(x)[1])

    def f_g(self, x) -> float:
        return float(self.f_and_h(x)[0])

    def f_p(self, x) -> float:
        values = self.aero(np.asarray(x, dtype=float)[None, :])[0]
        if values[0] <= 0.0:
            raise InfeasibleEvaluationError(
                "non-positive lift", lift=float(values[0]))
        h = self.lift_target / values[0] - 1.0
        return float((values[1] / self.d0_p) ** 2 + self.rho * h * h)


def lift_constraint_h(x, spec: ObjectiveSpec) -> float:
    """h(x) = L_target / L(x) - 1."""
    return spec.constraint_h(x)


def objective_g(x, spec: ObjectiveSpec) -> float:
    return spec.f_g(x)


def objective_p(x, spec: ObjectiveSpec) -> float:
    return spec.f_p(x)


# -- finite differences and KKT diagnostics -----------------------------

def fd_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray,
                step: float = 1e-5) -> np.ndarray:
    """Central differences with per-coordinate step step*max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        hi = step * max(1.0, abs(x[i]))
        xp = x.copy(); xp[i] += hi
        xm = x.copy(); xm[i] -= hi
        grad[i] = (fun(xp) - fun(xm)) / (2.0 * hi)
    return grad


def fd_objective_gradients(spec: ObjectiveSpec, x: np.ndarray,
                           step: float = 1e-5) -> tuple:
    """(grad f_g, grad h) from one batched central-difference stencil."""
    x = np.asarray(x, dtype=float)
    n = x.size
    steps = step * np.maximum(1.0, np.abs(x))
    pts = np.repeat(x[None, :], 2 * n, axis=0)
    for i in range(n):
        pts[2 * i, i] += steps[i]
        pts[2 * i + 1, i] -= steps[i]
    f = spec.f_g_batch(pts)
    h = spec.h_batch(pts)
    if not (np.isfinite(f).all() and np.isfinite(h).all()):
        raise InfeasibleEvaluationError("non-positive lift inside difference stencil")
    gf = (f[0::2] - f[1::2]) / (2.0 * steps)
    gh = (h[0::2] - h[1::2]) / (2.0 * steps)
    return gf, gh


@dataclass(frozen=True)
class KKTPoint:
    """Candidate solution with multipliers for the bound-constrained
    target-lift program."""

    x: np.ndarray
    lam: float = 0.0
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        for name in ("alpha", "beta"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.size == 0:
                v = np.zeros_like(x)
            if v.shape != x.shape:
                raise InvalidInputError(f"{name} must match x in shape")
            if (v < 0.0).any():
                raise InvalidInputError(f"{name} multipliers must be >= 0")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class KKTResidual:
    stationarity: float
    feasibility: float
    complementarity: float

    def within(self, optimality_tol: float, constraint_tol: float) -> bool:
        return (self.stationarity <= optimality_tol
                and self.feasibility <= constraint_tol
                and self.complementarity <= optimality_tol)


def kkt_residual(point: KKTPoint, spec: ObjectiveSpec, bounds: Bounds,
                 step: float = 1e-5) -> KKTResidual:
    """Residual triple for (f_g, h, box) at the candidate point.

    Stationarity is the sup norm of grad f + lam grad h - alpha + beta
    (lower-bound multipliers enter the Lagrangian through -alpha (x - lb),
    upper-bound ones through -beta (ub - x)); feasibility the larger of
    |h| and the worst bound violation; complementarity the largest of the
    products alpha_i (x_i - lb_i) and beta_i (ub_i - x_i).
    """
    gf, gh = fd_objective_gradients(spec, point.x, step=step)
    stationarity = float(np.abs(gf + point.lam * gh - point.alpha + point.beta).max())
    h = spec.constraint_h(point.x)
    violation = np.maximum(bounds.lb - point.x, point.x - bounds.ub)
    feasibility = float(max(abs(h), violation.max(), 0.0))
    comp = np.maximum(np.abs(point.alpha * (point.x - bounds.lb)),
                      np.abs(point.beta * (bounds.ub - point.x)))
    return KKTResidual(stationarity, feasibility, float(comp.max()))


def estimate_multipliers(x: np.ndarray, spec: ObjectiveSpec, bounds: Bounds,
                         step: float = 1e-5, active_tol: float = 1e-8) -> KKTPoint:
    """Least-squares multipliers at a candidate solution.

    lam minimizes ||grad f + lam grad h||; bound multipliers absorb any
    remaining gradient on active coordinates and are clipped to >= 0, so
    dual feasibility holds by construction.
    """
    x = np.asarray(x, dtype=float)
    gf, gh = fd_objective_gradients(spec, x, step=step)
    denom = float(gh @ gh)
    lam = -float(gf @ gh) / denom if denom > 1e-300 else 0.0
    r = gf + lam * gh
    span = bounds.ub - bounds.lb
    at_lb = x - bounds.lb <= active_tol * span
    at_ub = bounds.ub - x <= active_tol * span
    alpha = np.where(at_lb, np.maximum(0.0, r), 0.0)
    beta = np.where(at_ub, np.maximum(0.0, -r), 0.0)
    return KKTPoint(x=x, lam=lam, alpha=alpha, beta=beta)
