"""Equilibrium side of a COL problem.

The VI map is ``F(x) = grad f_x(x)`` and the equilibrium bifunction is
``Phi(x, x') = f_x(x') - f_x(x)``. This module measures VI residuals,
solves the VI to high precision with extragradient, brute-forces the EP
condition on small grids and samples the strong-monotonicity modulus.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError, NumericError, UnsupportedError
from .geometry import project_point

MAX_EP_DIMENSION = 3


@dataclass(frozen=True)
class EquilibriumSolution:
    x_star: np.ndarray
    natural_residual: float
    iterations: int
    solver: str


def natural_residual(dset, F, x):
    """``||x - P(x - F(x))||``, zero exactly at solutions of VI(X, F)."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - project_point(dset, x - F(x))))


def _residual_from(dset, x, fx):
    return float(np.linalg.norm(x - project_point(dset, x - fx)))


def solve_vi(dset, F, tolerance=1e-10, max_iter=10**6, *, step=None, x0=None,
             accept=None, patience=1000):
    """Extragradient iterations until the natural residual drops to ``tolerance``.

    With ``step=None`` the stepsize is backtracked each iteration until
    ``step * ||F(x) - F(x_half)|| <= 0.9 ||x - x_half||``. If ``accept`` is
    given, the best iterate is returned once its residual is <= ``accept``
    and has not improved for ``patience`` iterations (rounding stagnation).
    """
    if not tolerance > 0:
        raise DomainError("tolerance must be positive")
    x = np.array(dset.midpoint() if x0 is None else x0, dtype=float)
    x = project_point(dset, x)
    eta = 1.0 if step is None else float(step)
    best_x, best_r, best_it = x, np.inf, 0
    for it in range(max_iter + 1):
        fx = np.asarray(F(x), dtype=float)
        if not np.all(np.isfinite(fx)):
            raise NumericError(f"operator returned non-finite values at iteration {it}")
        r = _residual_from(dset, x, fx)
        if r < best_r:
            best_x, best_r, best_it = x, r, it
        if r <= tolerance:
            return EquilibriumSolution(x, r, it, "extragradient")
        if accept is not None and best_r <= accept and it - best_it >= patience:
            return EquilibriumSolution(best_x, best_r, it, "extragradient")
        if it == max_iter:
            break
        while True:
            x_half = project_point(dset, x - eta * fx)
            f_half = np.asarray(F(x_half), dtype=float)
            if step is not None:
                break
            gap = np.linalg.norm(x - x_half)
            if eta * np.linalg.norm(fx - f_half) <= 0.9 * gap or gap == 0.0:
                break
            eta *= 0.5
            if eta < 1e-300:
                raise NumericError("extragradient backtracking collapsed")
        x = project_point(dset, x - eta * f_half)
    raise NonConvergenceError(
        f"extragradient did not reach residual {tolerance:g} in {max_iter} iterations "
        f"(best {best_r:.3e})",
        best=best_x,
        residual=best_r,
        iterations=max_iter,
    )


def equilibrium_step(problem):
    """Extragradient step: min(mu / (L + beta)^2, 1 / (2 (L + beta))).

    The cap matters when beta = 0, where mu / (L + beta)^2 = 1 / L sits on
    the edge of the extragradient stability range and can cycle.
    """
    lip = problem.smoothness + problem.beta
    if lip <= 0:
        return 1.0
    cap = 1.0 / (2.0 * lip)
    if problem.mu > 0:
        return min(problem.mu / lip ** 2, cap)
    return cap


def distance_factor(problem):
    """``c`` with ``||x - x*|| <= c * residual(x)`` for a strongly monotone operator."""
    if problem.mu <= 0:
        return None
    return (1.0 + problem.smoothness + problem.beta) / problem.mu


def solve_equilibrium(problem, tolerance=1e-10, max_iter=10**6, x0=None):
    """Extragradient on ``F(x) = grad f_x(x)`` at :func:`equilibrium_step`.

    When ``mu > 0`` the iteration continues until the residual also
    certifies ``||x - x*|| <= tolerance / 2`` (down to a rounding floor), so
    solutions from different starts agree within ``tolerance``. If rounding
    stalls the residual above that target but within ``tolerance``, the best
    iterate is returned.
    """
    target = tolerance
    factor = distance_factor(problem)
    if factor is not None:
        # rounding level of x - P(x - F(x)): |x| and |F| <= G, over d coordinates
        dset = problem.decision_set
        scale = max(1.0, float(np.max(np.abs(dset.midpoint()))) + dset.diameter, problem.grad_bound)
        floor = 64 * np.finfo(float).eps * np.sqrt(dset.dimension) * scale
        target = min(tolerance, max(tolerance / (2 * factor), floor))
    sol = solve_vi(
        problem.decision_set,
        problem.operator,
        target,
        max_iter,
        step=equilibrium_step(problem),
        x0=x0,
        accept=tolerance,
    )
    return sol


def ep_values(problem, x_candidate, points):
    """``Phi(x_candidate, p) = f_xc(p) - f_xc(xc)`` for each row ``p``."""
    xc = np.asarray(x_candidate, dtype=float)
    base = problem.loss(xc, xc)
    return np.array([problem.loss(xc, p) - base for p in points])


def check_ep_solution(problem, x_candidate, grid_resolution=101, threshold=-1e-6):
    """Brute-force the EP condition over a feasible grid.

    Returns ``(is_solution, worst_violation)`` where ``worst_violation`` is
    the minimum of ``Phi(x_candidate, .)`` over the grid.
    """
    dset = problem.decision_set
    if dset.dimension > MAX_EP_DIMENSION:
        raise UnsupportedError(
            f"brute-force EP check limited to dimension <= {MAX_EP_DIMENSION}"
        )
    worst = float(ep_values(problem, x_candidate, dset.grid(grid_resolution)).min())
    return worst >= threshold, worst


def monotonicity_certificate(problem, num_pairs=10_000, rng=None, return_ratios=False):
    """Minimum of ``<F(x) - F(y), x - y> / ||x - y||^2`` over random pairs."""
    if num_pairs < 1:
        raise DomainError("num_pairs must be positive")
    rng = np.random.default_rng(rng)
    dset = problem.decision_set
    ratios = np.empty(num_pairs)
    for i in range(num_pairs):
        while True:
            x, y = dset.sample(rng), dset.sample(rng)
            diff = x - y
            sq = float(np.dot(diff, diff))
            if sq >= 1e-24:
                break
        ratios[i] = np.dot(problem.operator(x) - problem.operator(y), diff) / sq
    if return_ratios:
        return ratios
    return float(ratios.min())
