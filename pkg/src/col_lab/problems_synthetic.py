"""Closed-form quadratic bifunctions ``f_x(x') = (alpha/2) ||x' - A x - b||^2``.

Every constant is analytic: strong convexity ``alpha``, query-Lipschitz
``beta = alpha ||A||_2``, smoothness ``L = alpha`` and a gradient bound from
maximizing ``||(I - A) x - b||`` over the set. Because the Hessian in the
decision argument is a multiple of the identity, the round minimizer and the
follow-the-leader iterate are Euclidean projections of unconstrained
minimizers, so both are exact.
"""

import numpy as np

from .core import COLProblem
from .errors import DomainError, NonConvergenceError
from .geometry import BALL, MEMBERSHIP_TOL, DecisionSet, project_point

_MAX_VERTICES = 4096


def spectral_norm(A, rtol=1e-10, max_iter=100_000):
    """Largest singular value of ``A`` by power iteration on ``A^T A``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("spectral_norm expects a square matrix")
    M = A.T @ A
    if not np.any(M):
        return 0.0
    v = np.random.default_rng(0).standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= rtol * lam:
            return float(np.sqrt(lam))
        v = w / np.linalg.norm(w)
    raise NonConvergenceError(
        f"power iteration did not converge in {max_iter} iterations", best=v, residual=lam
    )


class QuadraticCOL(COLProblem):
    name = "quadratic"

    def __init__(self, A, b, alpha, decision_set, name=None):
        A = np.array(A, dtype=float)
        b = np.array(b, dtype=float)
        d = decision_set.dimension
        if A.shape != (d, d) or b.shape != (d,):
            raise DomainError(f"A must be {d}x{d} and b of length {d} for this decision set")
        if not alpha > 0:
            raise DomainError("alpha must be positive")
        A.setflags(write=False)
        b.setflags(write=False)
        self.A, self.b = A, b
        self.A_norm = spectral_norm(A)
        raw_g = alpha * _max_affine_norm(np.eye(d) - A, b, decision_set)
        super().__init__(
            decision_set,
            alpha=alpha,
            beta=alpha * self.A_norm,
            smoothness=alpha,
            # strict upper bound on ||grad f_x(x)|| with room for rounding
            grad_bound=raw_g * (1 + 1e-9) + 1e-12,
            name=name,
        )

    @property
    def has_mu_guarantee(self):
        return self.alpha > self.beta

    def target(self, query):
        return self.A @ query + self.b

    def loss(self, query, decision):
        r = np.asarray(decision, dtype=float) - self.target(query)
        return 0.5 * self.alpha * float(r @ r)

    def grad(self, query, decision):
        return self.alpha * (np.asarray(decision, dtype=float) - self.target(query))

    def round_minimizer(self, query):
        return project_point(self.decision_set, self.target(query))

    def ftl_init(self):
        return (np.zeros(self.dimension), 0)

    def ftl_update(self, acc, query):
        total, count = acc
        return (total + query, count + 1)

    def ftl_leader(self, acc):
        total, count = acc
        return project_point(self.decision_set, self.A @ (total / count) + self.b)

    def closed_form_equilibrium(self):
        """``(I - A)^{-1} b`` when ``||A|| < 1`` and it lies strictly inside the set."""
        if self.A_norm >= 1:
            return None
        x = np.linalg.solve(np.eye(self.dimension) - self.A, self.b)
        dset = self.decision_set
        if not dset.contains(x):
            return None
        if dset.kind == BALL:
            inside = np.linalg.norm(x - dset.center) < dset.radius - MEMBERSHIP_TOL
        elif dset.kind == "box":
            inside = np.all(x > dset.lower) and np.all(x < dset.upper)
        else:
            # relative interior of the simplex product
            inside = np.all(x > dset.eps)
        return x if inside else None


def _max_affine_norm(M, b, dset):
    """``max_{x in X} ||M x - b||``; exact on vertex sets, a valid upper bound otherwise."""
    n_vert = dset.num_vertices()
    if n_vert is not None and n_vert <= _MAX_VERTICES:
        V = dset.vertices()
        return float(np.max(np.linalg.norm(V @ M.T - b, axis=1)))
    c = dset.midpoint()
    if dset.kind == BALL:
        reach = dset.radius
    elif dset.kind == "box":
        reach = 0.5 * dset.diameter
    else:
        reach = dset.diameter
    return float(np.linalg.norm(M @ c - b) + spectral_norm(M) * reach)


def make_quadratic(A, b, alpha, decision_set, name=None):
    return QuadraticCOL(A, b, alpha, decision_set, name=name)


def unit_box(d=2):
    return DecisionSet.box(-np.ones(d), np.ones(d))


def q0():
    """``A = 0.5 I``, ``b = 0``, ``alpha = 1`` on ``[-1, 1]^2``; equilibrium at the origin."""
    return make_quadratic(0.5 * np.eye(2), np.zeros(2), 1.0, unit_box(), name="Q0")


def q1():
    """Q0 shifted by ``b = (0.2, 0.2)``; equilibrium at ``(0.4, 0.4)``."""
    return make_quadratic(0.5 * np.eye(2), np.array([0.2, 0.2]), 1.0, unit_box(), name="Q1")


def q_simplex():
    """``A = 0.5 I``, ``b = (0.3, 0.1)`` on the 2-simplex; equilibrium at ``(0.7, 0.3)``."""
    return make_quadratic(
        0.5 * np.eye(2), np.array([0.3, 0.1]), 1.0, DecisionSet.simplices(1, 2), name="QS"
    )


def random_quadratic(rng, dimension=None, set_kind=None):
    """Random instance for property checks; roughly half have ``||A|| < 1``."""
    rng = np.random.default_rng(rng)
    d = int(rng.integers(2, 6)) if dimension is None else dimension
    kind = set_kind or rng.choice(["box", "ball", "simplices"])
    if kind == "box":
        lo = -rng.uniform(0.5, 2.0, d)
        dset = DecisionSet.box(lo, lo + rng.uniform(0.5, 3.0, d))
    elif kind == "ball":
        dset = DecisionSet.ball(rng.normal(size=d), rng.uniform(0.5, 2.0))
    else:
        dset = DecisionSet.simplices(1, d, eps=rng.uniform(0, 0.5 / d))
    A = rng.normal(size=(d, d))
    A *= rng.uniform(0.1, 1.5) / np.linalg.norm(A, 2)
    return make_quadratic(A, rng.normal(scale=0.5, size=d), rng.uniform(0.5, 2.0), dset)
