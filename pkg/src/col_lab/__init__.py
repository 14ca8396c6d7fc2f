"""Continuous online learning lab.

Bifunction losses ``f_x(x')``, online learners, equilibrium solvers and
exact regret accounting with the dynamic-regret bound certificates.
"""

from ._accel import backend_name
from .algorithms import ALGORITHMS, Learner, StepSize
from .core import COLProblem, FeedbackOracle, RunLog, certify_alpha, certify_beta, play_round, run
from .equilibrium import (
    EquilibriumSolution,
    check_ep_solution,
    monotonicity_certificate,
    natural_residual,
    solve_equilibrium,
    solve_vi,
)
from .errors import (
    ColLabError,
    ConfigurationError,
    DomainError,
    FeedbackError,
    NonConvergenceError,
    NumericError,
    ProjectionContractError,
    RateUndefinedError,
    UnsupportedError,
)
from .geometry import DecisionSet, diameter, project, project_point
from .problems_il import ILProblem, TabularMDP, chain_instance, estimate_beta, self_loop_instance
from .problems_synthetic import QuadraticCOL, make_quadratic, q0, q1, q_simplex
from .regret import RegretReport, compute_report, fit_regret_rate, per_round_minimizer

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "COLProblem", "ColLabError", "ConfigurationError", "DecisionSet", "DomainError",
    "EquilibriumSolution", "FeedbackError", "FeedbackOracle", "ILProblem", "Learner",
    "NonConvergenceError", "NumericError", "ProjectionContractError", "QuadraticCOL",
    "RateUndefinedError", "RegretReport", "RunLog", "StepSize", "TabularMDP", "UnsupportedError",
    "backend_name", "certify_alpha", "certify_beta", "chain_instance", "check_ep_solution",
    "compute_report", "diameter", "estimate_beta", "fit_regret_rate", "make_quadratic",
    "monotonicity_certificate", "natural_residual", "per_round_minimizer", "play_round",
    "project", "project_point", "q0", "q1", "q_simplex", "run", "self_loop_instance",
    "solve_equilibrium", "solve_vi",
]
