"""Exact regret accounting and the dynamic-regret bound certificates.

All regret is measured against the true round losses ``l_n = f_{x_n}``,
never against sampled feedback.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .equilibrium import EquilibriumSolution, natural_residual
from .errors import ConfigurationError, DomainError, NonConvergenceError, RateUndefinedError
from .geometry import MEMBERSHIP_TOL, project_point

DEFAULT_TOL_INNER = 1e-9


def per_round_minimizer(problem, x_n, tol_inner=DEFAULT_TOL_INNER, max_iter=100_000):
    """``argmin_x f_{x_n}(x)`` over the decision set.

    Uses the problem's closed form when it has one, otherwise projected
    gradient with step ``1/L`` until the gradient-mapping norm is at most
    ``tol_inner``.
    """
    if not tol_inner > 0:
        raise DomainError("tol_inner must be positive")
    exact = problem.round_minimizer(x_n)
    if exact is not None:
        return exact
    dset = problem.decision_set
    lip = problem.smoothness if problem.smoothness > 0 else 1.0
    x = project_point(dset, np.asarray(x_n, dtype=float))
    best, best_norm = x, np.inf
    for _ in range(max_iter):
        nxt = project_point(dset, x - problem.grad(x_n, x) / lip)
        mapping = lip * np.linalg.norm(x - nxt)
        if mapping < best_norm:
            best, best_norm = x, mapping
        if mapping <= tol_inner:
            return nxt
        x = nxt
    raise NonConvergenceError(
        f"inner projected gradient stalled at gradient-mapping norm {best_norm:.3e}",
        best=best,
        residual=best_norm,
        iterations=max_iter,
    )


@dataclass(eq=False)
class RegretReport:
    """Per-round series; every cumulative series is indexed by prefix length N."""

    rounds: int
    losses: np.ndarray
    minimizers: np.ndarray
    minimizer_losses: np.ndarray
    dynamic_regret: np.ndarray
    static_regret: np.ndarray
    linearized_static_regret: np.ndarray
    delta: np.ndarray
    thm2_bound: Optional[np.ndarray]
    cor1_bound: Optional[np.ndarray]
    residual: np.ndarray
    tol_inner: float
    beta_is_estimate: bool = False

    @property
    def prefix_slack(self):
        """``N * tol_inner`` for N = 1..rounds."""
        return self.tol_inner * np.arange(1, self.rounds + 1)


def _x_star_vector(x_star):
    if isinstance(x_star, EquilibriumSolution):
        return np.asarray(x_star.x_star, dtype=float)
    return np.asarray(x_star, dtype=float)


def thm2_bound_series(static_regret, delta, alpha, beta, grad_bound, diameter):
    """Cumulative reduction bound for every prefix N.

    ``min{G sum Delta_n, Regret^s_N(x*)} + sum min{beta D Delta_n, beta^2/(2 alpha) Delta_n^2}``,
    with the static term kept as is even when negative.
    """
    first = np.minimum(grad_bound * np.cumsum(delta), static_regret)
    linear = beta * diameter * delta
    if beta == 0:
        quad = np.zeros_like(delta)
    elif alpha == 0:
        quad = np.full_like(delta, np.inf)
    else:
        quad = beta ** 2 / (2 * alpha) * delta ** 2
    return first + np.cumsum(np.minimum(linear, quad))


def cor1_bound_series(static_regret, linearized_static_regret, alpha, beta):
    """``Regret^s_N(x*) + beta^2 / (2 alpha (alpha - beta)) * linearized regret``."""
    if not alpha > beta:
        return None
    return static_regret + beta ** 2 / (2 * alpha * (alpha - beta)) * linearized_static_regret


def compute_report(problem, log, x_star=None, tol_inner=DEFAULT_TOL_INNER, bounds=True):
    """Fill a :class:`RegretReport` from a run log.

    ``x_star`` (an :class:`EquilibriumSolution` or a point) is needed for
    the static regret, ``Delta_n`` and the bound series.
    """
    dset = problem.decision_set
    for x in log.decisions:
        if not dset.contains(x, MEMBERSHIP_TOL):
            raise DomainError("run log contains an infeasible decision")
    if x_star is None and bounds:
        raise ConfigurationError("bound certificates need an equilibrium point x*")
    N = log.rounds
    d = dset.dimension
    minimizers = np.empty((N, d))
    min_losses = np.empty(N)
    star_losses = np.full(N, np.nan)
    lin_terms = np.full(N, np.nan)
    residual = np.empty(N)
    xs = None if x_star is None else _x_star_vector(x_star)
    for n, x in enumerate(log.decisions):
        minimizers[n] = per_round_minimizer(problem, x, tol_inner)
        min_losses[n] = problem.loss(x, minimizers[n])
        g = problem.operator(x)
        residual[n] = float(np.linalg.norm(x - project_point(dset, x - g)))
        if xs is not None:
            star_losses[n] = problem.loss(x, xs)
            lin_terms[n] = float(np.dot(g, x - xs))
    losses = np.array(log.losses, dtype=float)
    dynamic = np.cumsum(losses - min_losses)
    if xs is None:
        static = lin = delta = np.full(N, np.nan)
    else:
        static = np.cumsum(losses - star_losses)
        lin = np.cumsum(lin_terms)
        delta = np.linalg.norm(log.decisions - xs, axis=1)
    thm2 = cor1 = None
    if bounds:
        thm2 = thm2_bound_series(static, delta, problem.alpha, problem.beta,
                                 problem.grad_bound, dset.diameter)
        cor1 = cor1_bound_series(static, lin, problem.alpha, problem.beta)
    return RegretReport(
        rounds=N,
        losses=losses,
        minimizers=minimizers,
        minimizer_losses=min_losses,
        dynamic_regret=dynamic,
        static_regret=static,
        linearized_static_regret=lin,
        delta=delta,
        thm2_bound=thm2,
        cor1_bound=cor1,
        residual=residual,
        tol_inner=tol_inner,
        beta_is_estimate=bool(getattr(problem, "beta_is_estimate", False)),
    )


def static_regret_against(problem, log, comparator):
    """Cumulative ``sum_n l_n(x_n) - l_n(comparator)``."""
    comparator = np.asarray(comparator, dtype=float)
    terms = [problem.loss(x, x) - problem.loss(x, comparator) for x in log.decisions]
    return np.cumsum(terms)


def hindsight_static_regret(problem, log):
    """Static regret against the best fixed decision in hindsight (closed-form problems only)."""
    acc = problem.ftl_init()
    for x in log.decisions:
        acc = problem.ftl_update(acc, x)
    best = problem.ftl_leader(acc)
    return float(static_regret_against(problem, log, best)[-1]), best


def certificate_margins(report):
    """Worst ``dyn_N - bound_N - N tol`` over all prefixes for each bound present.

    A margin <= 0 means the certificate holds at every prefix.
    """
    out = {}
    slack = report.prefix_slack
    for name, bound in (("thm2", report.thm2_bound), ("cor1", report.cor1_bound)):
        if bound is not None:
            out[name] = float(np.max(report.dynamic_regret - bound - slack))
    return out


def fit_regret_rate(report_or_series, window=None):
    """Least-squares slope of ``log(regret_N)`` against ``log N`` over a window.

    ``window`` is an inclusive ``(N_lo, N_hi)`` pair of prefix lengths and
    defaults to ``(max(10, N // 10), N)``.
    """
    series = getattr(report_or_series, "dynamic_regret", report_or_series)
    series = np.asarray(series, dtype=float)
    N = series.size
    lo, hi = window if window is not None else (max(10, N // 10), N)
    if lo < 10 or hi > N or lo >= hi:
        raise DomainError(f"invalid window ({lo}, {hi}) for a series of length {N}")
    ns = np.arange(lo, hi + 1)
    vals = series[lo - 1:hi]
    keep = vals > 0
    if not np.all(keep):
        warnings.warn(f"excluding {np.count_nonzero(~keep)} non-positive regret values from the fit")
    if np.count_nonzero(keep) < 2:
        raise RateUndefinedError("fewer than two positive regret values in the window")
    slope, _ = np.polyfit(np.log(ns[keep]), np.log(vals[keep]), 1)
    return float(slope)


def natural_residuals(problem, decisions):
    return np.array([natural_residual(problem.decision_set, problem.operator, x) for x in decisions])
