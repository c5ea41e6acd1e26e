"""Design optimization: objectives, KKT diagnostics, and five strategies."""

from .objective import (LIFT_TARGET, KKTPoint, KKTResidual, ObjectiveSpec,
                        QuadraticBackend, SurrogateBackend, estimate_multipliers,
                        fd_gradient, fd_objective_gradients, kkt_residual,
                        lift_constraint_h, objective_g, objective_p)
from .run import HistoryEntry, OptConfig, OptRun
from .local import LocalResult, local_solve, run_multistart
from .pso import run_pso
from .genetic import run_ga
from .bayes import GaussianProcess, expected_improvement, gp_fit, run_bayesopt
from .lipschitz import characteristic, lipschitz_estimate, run_lipschitz
from .evaluate import EvaluationReport, evaluate_design, percent_difference

RUNNERS = {
    "grad": run_multistart,
    "pso": run_pso,
    "ga": run_ga,
    "bayes": run_bayesopt,
    "lipschitz": run_lipschitz,
}

__all__ = [
    "LIFT_TARGET", "KKTPoint", "KKTResidual", "ObjectiveSpec",
    "QuadraticBackend", "SurrogateBackend", "estimate_multipliers",
    "fd_gradient", "fd_objective_gradients", "kkt_residual",
    "lift_constraint_h", "objective_g", "objective_p",
    "HistoryEntry", "OptConfig", "OptRun",
    "LocalResult", "local_solve", "run_multistart",
    "run_pso", "run_ga",
    "GaussianProcess", "expected_improvement", "gp_fit", "run_bayesopt",
    "characteristic", "lipschitz_estimate", "run_lipschitz",
    "EvaluationReport", "evaluate_design", "percent_difference",
    "RUNNERS",
]
