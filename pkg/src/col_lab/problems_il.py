"""Online imitation learning on tabular episodic MDPs as a COL problem.

The learner's decision is a row-stochastic policy table flattened over a
product of eps-floored simplices. Playing policy ``q`` produces the round
loss ``f_q(pi) = sum_s d^q(s) * 0.5 * ||pi(.|s) - pi*(.|s)||^2`` where
``d^q`` is the horizon-averaged state distribution of ``q``.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .core import COLProblem
from .errors import ConfigurationError, DomainError
from .geometry import DecisionSet, project_point

ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """Finite episodic MDP with transition tensor ``P[s, a, s']``."""

    P: np.ndarray
    d1: np.ndarray
    horizon: int
    P_cum: np.ndarray = field(init=False, repr=False)
    d1_cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        d1 = np.array(self.d1, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2] or d1.shape != (P.shape[0],):
            raise DomainError("P must have shape (S, A, S) and d1 shape (S,)")
        if self.horizon < 1:
            raise DomainError("horizon must be at least 1")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1) > ROW_TOL):
            raise DomainError("every P[s, a, :] must be a probability vector")
        if np.any(d1 < 0) or abs(d1.sum() - 1) > ROW_TOL:
            raise DomainError("initial distribution must be a probability vector")
        for name, arr in (("P", P), ("d1", d1)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "P_cum", np.cumsum(P, axis=2))
        object.__setattr__(self, "d1_cum", np.cumsum(d1))

    @property
    def num_states(self):
        return self.P.shape[0]

    @property
    def num_actions(self):
        return self.P.shape[1]


def as_table(mdp, policy):
    return np.asarray(policy, dtype=float).reshape(mdp.num_states, mdp.num_actions)


def state_distribution(mdp, policy):
    """Exact horizon-averaged state distribution ``d^pi``."""
    per_time = kernels.state_distributions(mdp.P, as_table(mdp, policy), mdp.d1, mdp.horizon)
    return per_time.mean(axis=0)


def sample_visits(mdp, policy, episodes, rng):
    """Per-episode state visit counts, shape ``(episodes, S)``."""
    table = as_table(mdp, policy)
    uniforms = rng.random((episodes, mdp.horizon, 2))
    return kernels.rollout_visits(mdp.P_cum, np.cumsum(table, axis=1), mdp.d1_cum,
                                  mdp.horizon, uniforms)


class ILProblem(COLProblem):
    """Expert-comparison loss under the learner's own state distribution.

    ``alpha`` and ``smoothness`` are certified bounds on ``min_s d^pi(s)`` and
    ``max_s d^pi(s)``: for ``t >= 2`` each ``d_t(s')`` lies between the
    smallest and largest ``P[s, a, s']``. ``beta`` is a sampled estimate
    inflated by ``beta_safety`` unless passed explicitly.
    """

    name = "imitation"

    def __init__(self, mdp, expert, eps=0.0, *, beta=None, beta_pairs=2000,
                 beta_seed=0, beta_safety=1.5, name=None):
        S, A = mdp.num_states, mdp.num_actions
        expert = np.array(expert, dtype=float).reshape(S, A)
        if np.any(expert < 0) or np.any(np.abs(expert.sum(axis=1) - 1) > ROW_TOL):
            raise DomainError("expert policy rows must be probability vectors")
        if np.any(mdp.d1 <= 0):
            raise DomainError("imitation problems need a strictly positive initial distribution")
        expert.setflags(write=False)
        self.mdp = mdp
        self.expert = expert
        self.eps = float(eps)
        dset = DecisionSet.simplices(S, A, eps)
        T = mdp.horizon
        alpha = float(np.min(mdp.d1 + (T - 1) * mdp.P.min(axis=(0, 1))) / T)
        smooth = float(min(1.0, np.max(mdp.d1 + (T - 1) * mdp.P.max(axis=(0, 1))) / T))
        self.max_block_gap = _max_block_distance(dset, expert)
        grad_bound = np.sqrt(smooth) * self.max_block_gap * (1 + 1e-9) + 1e-12
        self.beta_is_estimate = beta is None
        self.beta_raw = float("nan")
        super().__init__(dset, alpha=alpha, beta=0.0, smoothness=smooth,
                         grad_bound=grad_bound, name=name)
        if beta is None:
            self.beta_raw = _sampled_beta(self, beta_pairs, np.random.default_rng(beta_seed))
            beta = beta_safety * self.beta_raw
        self.beta = float(beta)

    @property
    def expert_flat(self):
        return self.expert.reshape(-1)

    def table(self, policy):
        return as_table(self.mdp, policy)

    def distribution(self, policy):
        return state_distribution(self.mdp, policy)

    def loss(self, query, decision):
        d = self.distribution(query)
        gap = self.table(decision) - self.expert
        return float(0.5 * np.dot(d, np.einsum("sa,sa->s", gap, gap)))

    def grad(self, query, decision):
        d = self.distribution(query)
        return (d[:, None] * (self.table(decision) - self.expert)).reshape(-1)

    def loss_and_grad(self, query, decision):
        d = self.distribution(query)
        gap = self.table(decision) - self.expert
        return (float(0.5 * np.dot(d, np.einsum("sa,sa->s", gap, gap))),
                (d[:, None] * gap).reshape(-1))

    def round_minimizer(self, query):
        # every d^q(s) > 0, so each state's block is minimized independently
        return self.projected_expert()

    def projected_expert(self):
        return project_point(self.decision_set, self.expert_flat)

    def ftl_init(self):
        return np.zeros(self.mdp.num_states)

    def ftl_update(self, acc, query):
        return acc + self.distribution(query)

    def ftl_leader(self, acc):
        # weighted per-state quadratics: any positive weight gives the same block minimizer
        if np.any(acc <= 0):
            raise DomainError("follow-the-leader weights must be positive")
        return self.projected_expert()

    def sample_gradient(self, x, rng):
        """Gradient of the one-episode empirical risk at ``x``."""
        counts = sample_visits(self.mdp, x, 1, rng)[0]
        freq = counts / self.mdp.horizon
        return (freq[:, None] * (self.table(x) - self.expert)).reshape(-1)


def _max_block_distance(dset, expert):
    """``max_s max_{p in block} ||p - pi*(.|s)||`` (attained at a block vertex)."""
    m, scale = dset.block_size, 1.0 - dset.block_size * dset.eps
    verts = dset.eps + scale * np.eye(m)
    return float(max(np.max(np.linalg.norm(verts - row, axis=1)) for row in expert))


def _sampled_beta(ilp, num_pairs, rng):
    dset = ilp.decision_set
    S, A = ilp.mdp.num_states, ilp.mdp.num_actions
    verts = dset.vertices() if dset.num_vertices() <= 4096 else None
    best = 0.0
    for i in range(num_pairs):
        p1 = dset.sample(rng)
        if i % 2:
            p2 = project_point(dset, p1 + 1e-3 * rng.standard_normal(dset.dimension))
        else:
            p2 = dset.sample(rng)
        gap = np.linalg.norm(p1 - p2)
        if gap < 1e-12:
            continue
        if verts is not None and i % 3 == 0:
            pi = verts[rng.integers(len(verts))]
        else:
            pi = dset.sample(rng)
        dd = ilp.distribution(p1) - ilp.distribution(p2)
        diff = (dd[:, None] * (pi.reshape(S, A) - ilp.expert)).reshape(-1)
        best = max(best, float(np.linalg.norm(diff)) / gap)
    return best


def il_loss(ilp, query, decision):
    """``(f_query(decision), grad)`` for the imitation loss."""
    return ilp.loss_and_grad(query, decision)


def rollout_feedback(ilp, policy, rng):
    return ilp.sample_gradient(policy, rng)


def estimate_beta(ilp, num_pairs=2000, rng=None, safety=1.5):
    """Sampled lower estimate of beta, inflated by ``safety``."""
    return safety * _sampled_beta(ilp, num_pairs, np.random.default_rng(rng))


def beta_upper_bound(ilp):
    """Crude analytic bound: max block gap * (T - 1)/2 * sqrt(A)."""
    T, A = ilp.mdp.horizon, ilp.mdp.num_actions
    return ilp.max_block_gap * 0.5 * (T - 1) * np.sqrt(A)


def estimate_noise_variance(ilp, policy, rng=None, num_rollouts=1000):
    """Empirical ``E||g - grad l(policy)||^2`` of rollout feedback."""
    rng = np.random.default_rng(rng)
    exact = ilp.operator(policy)
    gap = ilp.table(policy) - ilp.expert
    counts = sample_visits(ilp.mdp, policy, num_rollouts, rng) / ilp.mdp.horizon
    samples = (counts[:, :, None] * gap[None]).reshape(num_rollouts, -1)
    return float(np.mean(np.sum((samples - exact) ** 2, axis=1)))


# ---------------------------------------------------------------------------
# Reference instances
# ---------------------------------------------------------------------------


def deterministic_expert(num_states, num_actions, action=0):
    expert = np.zeros((num_states, num_actions))
    expert[:, action] = 1.0
    return expert


def self_loop_instance(eps=0.1, horizon=3):
    """Two states, two actions, every action keeps the state: ``d^pi = d1``."""
    P = np.zeros((2, 2, 2))
    P[0, :, 0] = 1.0
    P[1, :, 1] = 1.0
    mdp = TabularMDP(P, np.array([0.5, 0.5]), horizon)
    return ILProblem(mdp, deterministic_expert(2, 2), eps, name="il-selfloop")


def chain_instance(eps=0.1, horizon=3, stay=0.6, d1=(0.5, 0.5)):
    """Two-state chain: action 0 stays w.p. ``stay``, action 1 swaps w.p. ``stay``.

    The expert always takes action 0. With the defaults the certified
    ``alpha`` exceeds the (inflated) sampled ``beta``.
    """
    P = np.empty((2, 2, 2))
    for s in range(2):
        P[s, 0, s], P[s, 0, 1 - s] = stay, 1 - stay
        P[s, 1, 1 - s], P[s, 1, s] = stay, 1 - stay
    mdp = TabularMDP(P, np.array(d1, dtype=float), horizon)
    return ILProblem(mdp, deterministic_expert(2, 2), eps, name="il-chain")


def random_instance(rng, num_states=3, num_actions=2, horizon=3, eps=0.05, concentration=5.0):
    rng = np.random.default_rng(rng)
    P = rng.dirichlet(concentration * np.ones(num_states), size=(num_states, num_actions))
    d1 = rng.dirichlet(concentration * np.ones(num_states))
    expert = np.zeros((num_states, num_actions))
    expert[np.arange(num_states), rng.integers(num_actions, size=num_states)] = 1.0
    return ILProblem(TabularMDP(P, d1, horizon), expert, eps, name="il-random")


# ---------------------------------------------------------------------------
# Plain-text MDP specification files
# ---------------------------------------------------------------------------


def _floats(tokens, lineno, what):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ConfigurationError(f"line {lineno}: bad number in {what}") from exc


def parse_mdp_text(text):
    """Parse the MDP file grammar (see docs/formats.md).

    Returns ``(mdp, expert_table, eps)``; ``eps`` is None when absent.
    """
    header, initial, eps = {}, None, None
    transitions, expert_rows = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key in ("states", "actions", "horizon"):
            if len(rest) != 1 or not rest[0].isdigit():
                raise ConfigurationError(f"line {lineno}: '{key}' takes one positive integer")
            header[key] = int(rest[0])
        elif key == "epsilon":
            eps = _floats(rest, lineno, "epsilon")[0]
        elif key == "initial":
            initial = _floats(rest, lineno, "initial")
        elif key == "transition":
            if len(rest) < 3:
                raise ConfigurationError(f"line {lineno}: transition <s> <a> <probs...>")
            s, a = int(rest[0]), int(rest[1])
            transitions[(s, a)] = _floats(rest[2:], lineno, "transition")
        elif key == "expert":
            if len(rest) < 2:
                raise ConfigurationError(f"line {lineno}: expert <s> <probs...>")
            expert_rows[int(rest[0])] = _floats(rest[1:], lineno, "expert")
        else:
            raise ConfigurationError(f"line {lineno}: unknown keyword {key!r}")
    missing = {"states", "actions", "horizon"} - header.keys()
    if missing or initial is None:
        raise ConfigurationError(f"MDP file missing {sorted(missing) or ['initial']}")
    S, A = header["states"], header["actions"]
    if len(transitions) != S * A or len(expert_rows) != S:
        raise ConfigurationError("MDP file needs one transition row per (s, a) and one expert row per s")
    try:
        P = np.array([[transitions[(s, a)] for a in range(A)] for s in range(S)])
        expert = np.array([expert_rows[s] for s in range(S)])
        mdp = TabularMDP(P, np.array(initial), header["horizon"])
    except (KeyError, ValueError, DomainError) as exc:
        raise ConfigurationError(f"inconsistent MDP file: {exc}") from exc
    if expert.shape != (S, A):
        raise ConfigurationError("expert rows must have one entry per action")
    return mdp, expert, eps


def load_mdp_file(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"MDP file not found: {path}")
    return parse_mdp_text(path.read_text())


def format_mdp(mdp, expert, eps=None):
    lines = [
        f"states {mdp.num_states}",
        f"actions {mdp.num_actions}",
        f"horizon {mdp.horizon}",
    ]
    if eps is not None:
        lines.append(f"epsilon {eps!r}")
    lines.append("initial " + " ".join(repr(float(v)) for v in mdp.d1))
    for s in range(mdp.num_states):
        for a in range(mdp.num_actions):
            lines.append(f"transition {s} {a} " + " ".join(repr(float(v)) for v in mdp.P[s, a]))
    for s in range(mdp.num_states):
        lines.append(f"expert {s} " + " ".join(repr(float(v)) for v in expert[s]))
    return "\n".join(lines) + "\n"
