"""Online learners: projected gradient descent, entropic mirror descent,
follow-the-leader and extragradient.

Each update exists as a pure step function on :class:`AlgorithmState`.
:class:`Learner` wraps one of them behind the ``start``/``step`` interface
that :func:`col_lab.core.run` drives.
"""

from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .errors import ConfigurationError, FeedbackError, NumericError, UnsupportedError
from .geometry import SIMPLICES, project_point

CONSTANT = "constant"
INVERSE_SQRT = "inverse_sqrt"


@dataclass(frozen=True)
class StepSize:
    """``constant``: eta_n = eta. ``inverse_sqrt``: eta_n = eta / sqrt(n)."""

    kind: str
    eta: float

    def __post_init__(self):
        if self.kind not in (CONSTANT, INVERSE_SQRT):
            raise ConfigurationError(f"unknown stepsize schedule {self.kind!r}")
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ConfigurationError("stepsize must be positive and finite")

    def __call__(self, n):
        if self.kind == CONSTANT:
            return self.eta
        return self.eta / np.sqrt(n)

    def describe(self):
        return f"{self.kind}:{self.eta!r}"

    @classmethod
    def parse(cls, text):
        kind, _, value = text.partition(":")
        try:
            return cls(kind.strip(), float(value))
        except ValueError as exc:
            raise ConfigurationError(f"bad stepsize spec {text!r}") from exc


def default_schedule(problem, stochastic):
    """Stepsize used when the configuration says ``auto``.

    Stochastic runs take 1/sqrt(n). Deterministic runs on strongly monotone
    problems take mu / (L + beta)^2, half the linear-convergence ceiling;
    otherwise D_X / (G sqrt(n)).
    """
    if stochastic:
        return StepSize(INVERSE_SQRT, 1.0)
    if problem.mu > 0:
        return StepSize(CONSTANT, problem.mu / (problem.smoothness + problem.beta) ** 2)
    scale = problem.decision_set.diameter / problem.grad_bound
    return StepSize(INVERSE_SQRT, scale if scale > 0 else 1.0)


@dataclass(frozen=True)
class AlgorithmState:
    name: str
    x: np.ndarray
    n: int
    schedule: StepSize
    acc: Any = None


def _check_finite(g):
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise FeedbackError("non-finite feedback vector")
    return g


def ogd_step(state, dset, g):
    g = _check_finite(g)
    eta = state.schedule(state.n)
    return replace(state, x=project_point(dset, state.x - eta * g), n=state.n + 1)


def mirror_descent_step(state, dset, g):
    """Entropic step on simplex products; Euclidean (projected) step elsewhere."""
    g = _check_finite(g)
    if dset.kind != SIMPLICES:
        return ogd_step(state, dset, g)
    eta = state.schedule(state.n)
    p = state.x.reshape(dset.num_blocks, dset.block_size)
    if np.any(p.sum(axis=1) <= 0) or np.any(p <= 0):
        raise NumericError("mirror descent needs a strictly positive point in every block")
    logits = np.log(p) - eta * g.reshape(p.shape)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    x = w.reshape(-1)
    if not dset.contains(x):
        x = project_point(dset, x)
    return replace(state, x=x, n=state.n + 1)


def ftl_step(state, problem):
    """Move to the exact minimizer of all losses seen so far."""
    acc = problem.ftl_update(problem.ftl_init() if state.acc is None else state.acc, state.x)
    return replace(state, x=problem.ftl_leader(acc), n=state.n + 1, acc=acc)


def extragradient_step(state, dset, operator, g=None):
    """Two-projection step; ``g`` (if given) stands in for ``operator(x_n)``."""
    eta = state.schedule(state.n)
    g = _check_finite(operator(state.x) if g is None else g)
    x_half = project_point(dset, state.x - eta * g)
    g_half = np.asarray(operator(x_half), dtype=float)
    if not np.all(np.isfinite(g_half)):
        raise NumericError("operator returned a non-finite value at the midpoint")
    return replace(state, x=project_point(dset, state.x - eta * g_half), n=state.n + 1)


ALGORITHMS = ("ogd", "mirror_descent", "ftl", "extragradient")


class Learner:
    """Binds a step rule to a problem/oracle pair for use with ``run``."""

    def __init__(self, name, schedule=None):
        if name not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
        self.name = name
        self.schedule = schedule
        self.state = None

    def start(self, problem, oracle, x1):
        self.problem = problem
        self.oracle = oracle
        schedule = self.schedule or default_schedule(problem, oracle.stochastic)
        acc = None
        if self.name == "ftl":
            # fail before the first round rather than at the first step
            acc = problem.ftl_init()
        self.state = AlgorithmState(self.name, np.array(x1, dtype=float), 1, schedule, acc)

    def step(self, x, g):
        if self.state is None:
            raise UnsupportedError("call start() before step()")
        state = replace(self.state, x=np.asarray(x, dtype=float))
        dset = self.problem.decision_set
        if self.name == "ogd":
            state = ogd_step(state, dset, g)
        elif self.name == "mirror_descent":
            state = mirror_descent_step(state, dset, g)
        elif self.name == "ftl":
            state = ftl_step(state, self.problem)
        else:
            state = extragradient_step(
                state, dset, lambda y: self.oracle.feedback(self.problem, y), g
            )
        self.state = state
        return state.x
