"""Lipschitz partitioning tests on analytic one- and two-dimensional
objectives whose minima and Lipschitz constants are known exactly."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chimera.geometry import Bounds
from chimera.optimize import (ObjectiveSpec, OptConfig, QuadraticBackend,
                              characteristic, lipschitz_estimate,
                              run_lipschitz)


def lip_config(**overrides):
    base = dict(lip_budget=200, lip_tol=1e-6, lip_trigger=60, seed=0)
    base.update(overrides)
    return OptConfig(**base)


def drag_backend(drag_of):
    """Backend with on-target lift so f_p = (drag / 100)^2."""

    def backend(x):
        x = np.atleast_2d(x)
        out = np.empty((x.shape[0], 4))
        out[:, 0] = 5886.0
        out[:, 1] = drag_of(x)
        out[:, 2] = 1.0
        out[:, 3] = 0.01
        return out

    return backend


def vee_spec(x_star=0.3):
    """f_p = |x - x_star| exactly (drag = 100 sqrt|x - x_star|)."""
    return ObjectiveSpec(drag_backend(
        lambda x: 100.0 * np.sqrt(np.abs(x[:, 0] - x_star))))


# -- characteristic and rate estimate ------------------------------------------

def test_characteristic_values():
    assert characteristic(5.0, 2.0, 1.0) == 4.0
    assert characteristic(5.0, 0.0, 1.0) == 5.0
    assert characteristic(1.0, 4.0, 0.5) == 0.0


def test_lipschitz_estimate_known_pairs():
    points = np.array([[0.0], [1.0], [0.5]])
    values = np.array([0.0, 3.0, 1.0])
    # steepest pair is (1.0, 3.0) vs (0.5, 1.0): slope 4
    assert lipschitz_estimate(points, values) == pytest.approx(4.4)  # 1.1 * 4
    assert lipschitz_estimate(points, values, reliability=2.0) == pytest.approx(8.0)


def test_lipschitz_estimate_floor_and_infs():
    points = np.array([[0.0], [1.0]])
    assert lipschitz_estimate(points, np.array([1.0, 1.0])) == 1e-32
    values = np.array([1.0, np.inf])
    assert lipschitz_estimate(points, values) == 1e-32
    assert lipschitz_estimate(np.array([[0.0]]), np.array([2.0])) == 1e-32


def test_lipschitz_estimate_uses_sup_norm():
    points = np.array([[0.0, 0.0], [0.5, 1.0]])
    values = np.array([0.0, 2.0])
    # sup-norm distance is 1.0, not the euclidean 1.118
    assert lipschitz_estimate(points, values) == pytest.approx(2.2)


# -- bracketing the minimum -----------------------------------------------------

def test_vee_function_minimum_bracketed():
    bounds = Bounds(lb=np.zeros(1), ub=np.ones(1))
    run = run_lipschitz(vee_spec(0.3), bounds, lip_config(lip_budget=100))
    assert abs(run.x_best[0] - 0.3) <= 1e-3
    assert run.f_best <= 1e-3
    assert run.meta["evaluations"] <= 100


def test_quadratic_2d_minimum_found():
    # partitioning alone narrows to ~4e-3 under this budget; the deep-box
    # local polish carries the rest of the way
    center = np.array([0.3, -0.2])
    spec = ObjectiveSpec(QuadraticBackend(center, offset=1.0))
    bounds = Bounds(lb=-np.ones(2), ub=np.ones(2))
    run = run_lipschitz(spec, bounds, lip_config(lip_budget=300, lip_trigger=6))
    assert np.abs(run.x_best - center).max() <= 1e-3
    assert run.f_best == pytest.approx(1.0, abs=1e-4)
    assert run.meta["local_solves"] >= 1


def test_gap_certificate_terminates_early():
    spec = ObjectiveSpec(QuadraticBackend(np.array([0.5]), offset=1.0))
    bounds = Bounds(lb=np.zeros(1), ub=np.ones(1))
    run = run_lipschitz(spec, bounds, lip_config(lip_budget=5000, lip_tol=1e-2))
    assert run.meta["status"] == "gap_closed"
    assert run.meta["evaluations"] < 5000
    assert run.f_best == pytest.approx(1.0, abs=1e-2)


def test_flat_objective_exhausts_budget():
    # constant f: slope stays zero, so the gap certificate must not fire
    spec = ObjectiveSpec(drag_backend(lambda x: np.full(x.shape[0], 200.0)))
    bounds = Bounds(lb=np.zeros(2), ub=np.ones(2))
    run = run_lipschitz(spec, bounds, lip_config(lip_budget=41))
    assert run.meta["status"] == "budget_exhausted"
    assert run.f_best == pytest.approx(4.0)


def test_evaluation_count_is_odd_and_within_budget():
    # the middle child reuses the parent center, so evaluations are
    # 1 + 2 * splits; local solves are not charged to the budget
    bounds = Bounds(lb=np.zeros(1), ub=np.ones(1))
    for budget in (30, 57, 101):
        run = run_lipschitz(vee_spec(0.41), bounds,
                            lip_config(lip_budget=budget, lip_tol=1e-30))
        assert run.meta["evaluations"] % 2 == 1
        assert run.meta["evaluations"] <= budget
        assert run.meta["evaluations"] >= budget - 2
    assert run.meta["boxes"] == run.meta["evaluations"]


def test_local_solve_trigger_counts():
    bounds = Bounds(lb=np.zeros(1), ub=np.ones(1))
    deep = run_lipschitz(vee_spec(0.3), bounds,
                         lip_config(lip_budget=100, lip_trigger=4, lip_tol=1e-30))
    none = run_lipschitz(vee_spec(0.3), bounds,
                         lip_config(lip_budget=100, lip_trigger=60, lip_tol=1e-30))
    assert deep.meta["local_solves"] >= 1
    assert none.meta["local_solves"] == 0
    # the local polish lands essentially on the kink
    assert abs(deep.x_best[0] - 0.3) <= 1e-6


def test_infeasible_everywhere_reports_no_solution():
    spec = ObjectiveSpec(lambda x: np.column_stack([
        np.full(x.shape[0], -1.0), np.full(x.shape[0], 1.0),
        np.full(x.shape[0], 0.1), np.full(x.shape[0], 0.1)]))
    bounds = Bounds(lb=np.zeros(2), ub=np.ones(2))
    run = run_lipschitz(spec, bounds, lip_config(lip_budget=20))
    assert run.feasible is False
    assert run.meta["status"] == "no_feasible_solution"
    assert run.history == []


@given(
    a1=st.floats(min_value=-3.0, max_value=3.0),
    a2=st.floats(min_value=-3.0, max_value=3.0),
    b=st.floats(min_value=20.0, max_value=60.0),
)
def test_characteristic_lower_bounds_linear_functions(a1, a2, b):
    """With Lhat at least the true sup-norm constant, chi(B) on the root
    box never exceeds the true minimum of a linear objective."""
    a = np.array([a1, a2])

    def f(z):
        return float(a @ z + b)

    center = np.full(2, 0.5)
    true_constant = float(np.abs(a).sum())  # dual norm of the gradient
    chi = characteristic(f(center), true_constant, 1.0)
    corners = np.array([[i, j] for i in (0.0, 1.0) for j in (0.0, 1.0)])
    true_min = min(f(z) for z in corners)
    assert chi <= true_min + 1e-12
