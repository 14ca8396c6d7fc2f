"""The continuous online learning protocol.

A :class:`COLProblem` wraps a bifunction ``f_x(x')``: the learner plays
``x_n`` and the round loss is ``l_n = f_{x_n}``. Feedback about ``l_n`` goes
through a :class:`FeedbackOracle`, and :func:`run` drives any algorithm
against any problem, recording a :class:`RunLog`.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FeedbackError, ProjectionContractError, UnsupportedError
from .geometry import MEMBERSHIP_TOL, DecisionSet, project_point

__all__ = [
    "COLProblem",
    "DecisionSet",
    "FeedbackOracle",
    "RunLog",
    "play_round",
    "run",
    "certify_alpha",
    "certify_beta",
    "gradient_check",
]


class COLProblem:
    """Bifunction loss over a decision set, with its regularity constants.

    ``loss(query, decision)`` is ``f_query(decision)`` and ``grad`` is its
    gradient in the decision argument. ``alpha`` is the strong-convexity
    modulus of ``f_x(.)``, ``beta`` the Lipschitz modulus of
    ``x -> grad f_x(x')``, ``smoothness`` the Lipschitz modulus of
    ``grad f_x(.)`` and ``grad_bound`` a strict upper bound on
    ``||grad f_x(x)||`` over the set.

    Subclasses override :meth:`loss` and :meth:`grad` directly and may expose
    closed forms through the optional hooks at the bottom of the class.
    """

    name = "custom"

    def __init__(self, decision_set, loss=None, grad=None, *, alpha, beta, smoothness,
                 grad_bound, name=None):
        self.decision_set = decision_set
        self._loss_fn = loss
        self._grad_fn = grad
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.smoothness = float(smoothness)
        self.grad_bound = float(grad_bound)
        if name is not None:
            self.name = name
        if min(self.alpha, self.beta, self.smoothness) < 0 or not self.grad_bound > 0:
            raise DomainError("constants must satisfy alpha, beta, L >= 0 and G > 0")

    @property
    def dimension(self):
        return self.decision_set.dimension

    @property
    def mu(self):
        """Strong-monotonicity modulus guaranteed by the constants (may be <= 0)."""
        return self.alpha - self.beta

    def loss(self, query, decision):
        return float(self._loss_fn(query, decision))

    def grad(self, query, decision):
        return np.asarray(self._grad_fn(query, decision), dtype=float)

    def operator(self, x):
        """The VI map ``F(x) = grad f_x(x)``."""
        return self.grad(x, x)

    # -- optional closed forms ----------------------------------------------

    def round_minimizer(self, query):
        """Exact ``argmin_x f_query(x)`` over the set, or None if unavailable."""
        return None

    def ftl_init(self):
        raise UnsupportedError(f"{self.name} has no closed-form follow-the-leader")

    def ftl_update(self, acc, query):
        raise UnsupportedError(f"{self.name} has no closed-form follow-the-leader")

    def ftl_leader(self, acc):
        raise UnsupportedError(f"{self.name} has no closed-form follow-the-leader")

    def sample_gradient(self, x, rng):
        raise UnsupportedError(f"{self.name} has no sampling feedback model")

    def constants(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "L": self.smoothness,
            "G": self.grad_bound,
            "mu": self.mu,
            "D_X": self.decision_set.diameter,
        }


DETERMINISTIC = "deterministic"
GAUSSIAN = "gaussian"
ROLLOUT = "rollout"
FULL = "full"
ORACLE_MODES = (DETERMINISTIC, GAUSSIAN, ROLLOUT, FULL)


@dataclass
class FeedbackOracle:
    """First-order feedback channel.

    ``gaussian`` adds isotropic noise scaled so that ``E||xi||^2 = sigma^2``;
    ``rollout`` delegates to the problem's own sampler (empirical-risk
    gradients for imitation learning). ``full`` returns the exact gradient
    and signals that the learner may use the whole loss (follow-the-leader).
    """

    mode: str = DETERMINISTIC
    sigma: float = 0.0
    rng_seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ORACLE_MODES:
            raise DomainError(f"unknown oracle mode {self.mode!r}; choose from {ORACLE_MODES}")
        if self.sigma < 0:
            raise DomainError("sigma must be nonnegative")
        self.reset()

    def reset(self, seed=None):
        if seed is not None:
            self.rng_seed = int(seed)
        self._rng = np.random.default_rng(self.rng_seed)

    @property
    def stochastic(self):
        return self.mode in (GAUSSIAN, ROLLOUT)

    @property
    def noise_variance(self):
        """Recorded bound on ``E||xi||^2`` (NaN for rollout, which must be estimated)."""
        if self.mode == GAUSSIAN:
            return self.sigma ** 2
        if self.mode == ROLLOUT:
            return float("nan")
        return 0.0

    def feedback(self, problem, x):
        if self.mode == ROLLOUT:
            g = problem.sample_gradient(x, self._rng)
        else:
            g = problem.operator(x)
            if self.mode == GAUSSIAN:
                d = g.shape[0]
                g = g + (self.sigma / np.sqrt(d)) * self._rng.standard_normal(d)
        if not np.all(np.isfinite(g)):
            raise FeedbackError("oracle produced a non-finite feedback vector")
        return g


@dataclass(eq=False)
class RunLog:
    rounds: int
    decisions: np.ndarray
    losses: np.ndarray
    feedback: np.ndarray
    seed: int
    wall_clock: np.ndarray

    def identical(self, other):
        """Bitwise trajectory equality; wall-clock timings are ignored."""
        return (
            self.rounds == other.rounds
            and self.seed == other.seed
            and all(
                a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()
                for a, b in (
                    (self.decisions, other.decisions),
                    (self.losses, other.losses),
                    (self.feedback, other.feedback),
                )
            )
        )


def _require_member(dset, x, what="decision"):
    x = dset.check_dimension(x)
    if not dset.contains(x, MEMBERSHIP_TOL):
        raise DomainError(f"{what} lies outside the decision set {dset.describe()}")
    return x


def play_round(problem, oracle, x_n):
    """One protocol round: suffer ``f_{x_n}(x_n)`` and receive feedback."""
    x_n = _require_member(problem.decision_set, x_n)
    return problem.loss(x_n, x_n), oracle.feedback(problem, x_n)


def run(problem, oracle, algorithm, x1, rounds, seed=None):
    """Play ``rounds`` rounds of ``algorithm`` against ``problem``.

    The oracle generator is re-seeded first (with ``seed`` when given), so a
    fixed (seed, configuration) pair always reproduces the same log.
    """
    if rounds < 1:
        raise DomainError("need at least one round")
    dset = problem.decision_set
    x = _require_member(dset, x1, "initial decision").copy()
    oracle.reset(seed)
    algorithm.start(problem, oracle, x)

    d = dset.dimension
    decisions = np.empty((rounds, d))
    losses = np.empty(rounds)
    feedback = np.empty((rounds, d))
    clock = np.empty(rounds)
    for n in range(rounds):
        tic = time.perf_counter()
        loss, g = play_round(problem, oracle, x)
        decisions[n] = x
        losses[n] = loss
        feedback[n] = g
        if n + 1 < rounds:
            x = algorithm.step(x, g)
            if not dset.contains(x, MEMBERSHIP_TOL):
                raise ProjectionContractError(
                    f"{algorithm.name} left the decision set at round {n + 2}"
                )
        clock[n] = time.perf_counter() - tic
    return RunLog(rounds, decisions, losses, feedback, oracle.rng_seed, clock)


# ---------------------------------------------------------------------------
# Sampling-based certification of the regularity constants
# ---------------------------------------------------------------------------


def _distinct_pair(dset, rng, max_tries=1000):
    for _ in range(max_tries):
        a, b = dset.sample(rng), dset.sample(rng)
        if np.linalg.norm(a - b) >= 1e-12:
            return a, b
    raise DomainError("could not draw two distinct points; the set is (numerically) a singleton")


def _refine(problem, triple, ratio_fn, sign, steps, rng):
    """Adaptive random-search polish of the best sampled triple.

    ``sign`` is +1 to push the ratio up and -1 to push it down. Every
    accepted triple is a genuine feasible sample, so the result is still an
    observed ratio.
    """
    dset = problem.decision_set
    best = triple
    value = ratio_fn(*best)
    scale = 0.1 * max(np.linalg.norm(best[0] - best[1]), 1e-6)
    for _ in range(steps):
        cand = tuple(project_point(dset, p + scale * rng.normal(size=p.shape)) for p in best)
        if np.linalg.norm(cand[0] - cand[1]) < 1e-9:
            scale *= 0.7
            continue
        v = ratio_fn(*cand)
        if sign * (v - value) > 0:
            best, value = cand, v
            scale *= 1.5
        else:
            scale *= 0.9
        scale = min(max(scale, 1e-12), dset.diameter)
    return value


def certify_alpha(problem, num_samples=10_000, rng=None, refine=1000):
    """Smallest observed curvature ratio of ``f_x(.)`` over random triples.

    After sampling, ``refine`` local search steps try to lower the ratio
    further from the worst triple found.
    """
    if num_samples < 1:
        raise DomainError("num_samples must be positive")
    rng = np.random.default_rng(rng)
    dset = problem.decision_set

    def ratio(a, b, x):
        diff = a - b
        return float(np.dot(problem.grad(x, a) - problem.grad(x, b), diff) / np.dot(diff, diff))

    worst, arg = np.inf, None
    for _ in range(num_samples):
        x = dset.sample(rng)
        a, b = _distinct_pair(dset, rng)
        r = ratio(a, b, x)
        if r < worst:
            worst, arg = r, (a, b, x)
    if refine:
        worst = min(worst, _refine(problem, arg, ratio, -1, refine, rng))
    return float(worst)


def certify_beta(problem, num_samples=10_000, rng=None, refine=1000):
    """Largest observed Lipschitz ratio of the query-to-gradient map.

    The best sampled triple is then polished by ``refine`` local search
    steps, which matters when the worst direction is thin (d > 2).
    """
    if num_samples < 1:
        raise DomainError("num_samples must be positive")
    rng = np.random.default_rng(rng)
    dset = problem.decision_set

    def ratio(x1, x2, xp):
        return float(np.linalg.norm(problem.grad(x1, xp) - problem.grad(x2, xp)) / np.linalg.norm(x1 - x2))

    worst, arg = 0.0, None
    for _ in range(num_samples):
        xp = dset.sample(rng)
        x1, x2 = _distinct_pair(dset, rng)
        r = ratio(x1, x2, xp)
        if r > worst or arg is None:
            worst, arg = max(worst, r), (x1, x2, xp)
    if refine:
        worst = max(worst, _refine(problem, arg, ratio, +1, refine, rng))
    return float(worst)


def gradient_check(problem, num_pairs=20, step=1e-5, rng=None):
    """Worst relative error between ``grad`` and central differences of ``loss``.

    The relative error is ``||fd - g|| / max(||g||, 1e-3)``.
    """
    rng = np.random.default_rng(rng)
    dset = problem.decision_set
    worst = 0.0
    eye = np.eye(dset.dimension)
    for _ in range(num_pairs):
        x, xp = dset.sample(rng), dset.sample(rng)
        g = problem.grad(x, xp)
        fd = np.array([
            (problem.loss(x, xp + step * e) - problem.loss(x, xp - step * e)) / (2 * step)
            for e in eye
        ])
        worst = max(worst, np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-3))
    return float(worst)


def project_decision(problem, y):
    return project_point(problem.decision_set, y)
