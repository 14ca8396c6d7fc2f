"""Invariant suites behind ``col-lab verify``.

Every check returns a :class:`Check` carrying the measured quantity and the
limit it was held to. ``faults`` names seeded corruptions that specific
checks apply to their own inputs; a healthy suite must fail under them.
"""

import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import problems_il as il
from . import problems_synthetic as ps
from .algorithms import INVERSE_SQRT, Learner, StepSize
from .core import (
    COLProblem,
    FeedbackOracle,
    certify_alpha,
    certify_beta,
    gradient_check,
    play_round,
    run,
)
from .equilibrium import (
    check_ep_solution,
    monotonicity_certificate,
    natural_residual,
    solve_equilibrium,
)
from .geometry import BOX, SIMPLICES, DecisionSet, project_point
from .regret import (
    compute_report,
    fit_regret_rate,
    per_round_minimizer,
    static_regret_against,
    thm2_bound_series,
)

FAULTS = (
    "core.gradient",
    "geometry.projection",
    "algorithms.iterates",
    "regret.delta",
    "problems_il.distribution",
)


@dataclass
class Check:
    module: str
    name: str
    passed: bool
    measured: float
    limit: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.module}.{self.name}  measured={self.measured:.3e} limit={self.limit:.3e}"
        return text + (f"  ({self.detail})" if self.detail else "")


def _check(module, name, measured, limit, upper=True, detail=""):
    measured = float(measured)
    passed = measured <= limit if upper else measured >= limit
    return Check(module, name, bool(passed and np.isfinite(measured)), measured, float(limit), detail)


def reference_problems():
    """Small fixed battery used across suites."""
    return [
        ps.q0(),
        ps.q1(),
        ps.q_simplex(),
        ps.random_quadratic(11, set_kind="box"),
        ps.random_quadratic(12, set_kind="ball"),
        ps.random_quadratic(13, set_kind="simplices"),
        il.chain_instance(),
        il.self_loop_instance(),
        il.random_instance(5),
    ]


def geometric_bound(problem, eta):
    lip = problem.smoothness + problem.beta
    return 1.0 + lip ** 2 * eta ** 2 - 2.0 * problem.mu * eta


def contraction_margin(problem, x1, rounds=500, rel_slack=1e-9, corrupt=None):
    """Worst ``||x_n - x*||^2 / (rho^{n-1} ||x_1 - x*||^2)`` under OGD at mu/(L+beta)^2.

    Returns ``(worst_excess, eta, rho)`` where ``worst_excess`` is
    ``max_n (lhs_n - rhs_n (1 + rel_slack))`` and must be <= 0.
    """
    x_star = solve_equilibrium(problem, 1e-13).x_star
    eta = problem.mu / (problem.smoothness + problem.beta) ** 2
    rho = geometric_bound(problem, eta)
    log = run(problem, FeedbackOracle(), Learner("ogd", StepSize("constant", eta)), x1, rounds)
    xs = log.decisions
    if corrupt is not None:
        xs = corrupt(xs)
    lhs = np.sum((xs - x_star) ** 2, axis=1)
    rhs = rho ** np.arange(rounds) * lhs[0]
    return float(np.max(lhs - rhs * (1 + rel_slack))), eta, rho


# ---------------------------------------------------------------------------
# core
# ---------------------------------------------------------------------------


class _ScaledGradient(COLProblem):
    def __init__(self, inner, factor):
        self.inner = inner
        self.factor = factor
        super().__init__(inner.decision_set, alpha=inner.alpha, beta=inner.beta,
                         smoothness=inner.smoothness, grad_bound=inner.grad_bound)

    def loss(self, query, decision):
        return self.inner.loss(query, decision)

    def grad(self, query, decision):
        return self.factor * self.inner.grad(query, decision)


def suite_core(faults=(), quick=False):
    checks = []
    worst = 0.0
    for p in reference_problems():
        target = _ScaledGradient(p, 1.001) if "core.gradient" in faults else p
        worst = max(worst, gradient_check(target, 20, 1e-5, rng=3))
    checks.append(_check("core", "gradient_consistency", worst, 1e-5))

    chain = il.chain_instance()
    x1 = chain.decision_set.sample(np.random.default_rng(0))
    runs = [run(chain, FeedbackOracle("rollout", rng_seed=7), Learner("ogd"), x1, 300) for _ in range(2)]
    q1 = ps.q1()
    runs_g = [run(q1, FeedbackOracle("gaussian", 0.3, 5), Learner("extragradient"),
                  np.array([1.0, -1.0]), 300) for _ in range(2)]
    same = runs[0].identical(runs[1]) and runs_g[0].identical(runs_g[1])
    checks.append(Check("core", "determinism", same, float(not same), 0.0,
                        "two seeded runs compared bitwise"))

    sigma = 0.5
    oracle = FeedbackOracle("gaussian", sigma, 9)
    x = np.array([0.3, -0.2])
    draws = np.array([oracle.feedback(q1, x) for _ in range(10_000)])
    dev = np.max(np.abs(draws.mean(axis=0) - q1.operator(x)))
    checks.append(_check("core", "feedback_unbiasedness", dev, 3 * sigma / 100))

    mismatch = 0.0
    for p, orc in ((q1, FeedbackOracle("gaussian", 0.3, 1)), (chain, FeedbackOracle("rollout", rng_seed=2))):
        x = p.decision_set.sample(np.random.default_rng(4))
        a, _ = play_round(p, orc, x)
        b, _ = play_round(p, orc, x)
        mismatch = max(mismatch, abs(a - b))
    checks.append(_check("core", "opponent_consistency", mismatch, 0.0))

    n = 500 if quick else 2000
    excess = 0.0
    for p in reference_problems()[:6]:
        excess = max(excess, p.alpha - 1e-8 - certify_alpha(p, n, rng=1),
                     certify_beta(p, n, rng=2) - p.beta - 1e-8)
    checks.append(_check("core", "certified_constants", excess, 0.0,
                         detail="alpha/beta sampled on synthetic problems"))
    return checks


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def _random_set(rng):
    kind = rng.integers(3)
    d = int(rng.integers(2, 5))
    if kind == 0:
        lo = rng.uniform(-2, 0, d)
        return DecisionSet.box(lo, lo + rng.uniform(0.1, 2, d))
    if kind == 1:
        return DecisionSet.ball(rng.normal(size=d), rng.uniform(0.2, 2))
    blocks = int(rng.integers(1, 3))
    size = int(rng.integers(2, 4))
    return DecisionSet.simplices(blocks, size, rng.uniform(0, 0.8 / size))


def _contains_many(dset, pts, tol=1e-12):
    if dset.kind == BOX:
        return np.all((pts >= dset.lower - tol) & (pts <= dset.upper + tol), axis=1)
    if dset.kind == SIMPLICES:
        b = pts.reshape(len(pts), dset.num_blocks, dset.block_size)
        return np.all(b >= dset.eps - tol, axis=(1, 2)) & np.all(
            np.abs(b.sum(axis=2) - 1) <= tol, axis=1)
    return np.linalg.norm(pts - dset.center, axis=1) <= dset.radius + tol


def _tangent(dset, v):
    if dset.kind != SIMPLICES:
        return v
    b = v.reshape(dset.num_blocks, dset.block_size)
    return (b - b.mean(axis=1, keepdims=True)).reshape(-1)


def projection_gap(dset, y, candidate, rng, resolution=41):
    """How much closer than ``candidate`` a feasible 2-D slice grid gets to ``y``."""
    u = _tangent(dset, y - candidate)
    if np.linalg.norm(u) < 1e-12:
        u = _tangent(dset, rng.normal(size=dset.dimension))
        if np.linalg.norm(u) < 1e-12:
            return 0.0  # the set is a single point
    u /= np.linalg.norm(u)
    v = _tangent(dset, rng.normal(size=dset.dimension))
    v -= np.dot(v, u) * u
    nv = np.linalg.norm(v)
    # one-dimensional feasible directions (a single 2-simplex) give a line
    v = v / nv if nv > 1e-9 else np.zeros_like(v)
    # feasible points are at most a diameter away from a feasible candidate
    reach = min(2 * np.linalg.norm(y - candidate), dset.diameter) + 1e-3
    ts = np.linspace(-reach, reach, resolution)
    a, b = np.meshgrid(ts, ts)
    line = np.linspace(0.0, reach, 10 * resolution)
    pts = np.vstack([candidate + a.reshape(-1, 1) * u + b.reshape(-1, 1) * v,
                     candidate + line[:, None] * u])
    pts = pts[_contains_many(dset, pts)]
    if len(pts) == 0:
        return 0.0
    best = np.min(np.linalg.norm(pts - y, axis=1))
    return float(np.linalg.norm(candidate - y) - best)


def suite_geometry(faults=(), quick=False):
    rng = np.random.default_rng(2024)
    n = 200 if quick else 1000
    worst_gap = 0.0
    worst_expand = -np.inf
    idem_ok = True
    infeasible = 0
    for _ in range(n):
        dset = _random_set(rng)
        y = dset.midpoint() + 2.0 * rng.normal(size=dset.dimension)
        p = project_point(dset, y)
        if "geometry.projection" in faults:
            p = 0.8 * p + 0.2 * dset.midpoint()
        infeasible += not dset.contains(p)
        worst_gap = max(worst_gap, projection_gap(dset, y, p, rng))
        y2 = y + rng.normal(size=dset.dimension)
        expand = np.linalg.norm(project_point(dset, y) - project_point(dset, y2)) - np.linalg.norm(y - y2)
        worst_expand = max(worst_expand, expand)
        idem_ok &= bool(np.array_equal(project_point(dset, p), p))
    checks = [
        _check("geometry", "projection_optimality", worst_gap, 1e-6,
               detail=f"{n} random sets, {infeasible} infeasible outputs"),
        _check("geometry", "nonexpansiveness", worst_expand, 1e-12),
        Check("geometry", "idempotence", idem_ok, float(not idem_ok), 0.0, "exact equality"),
    ]
    if infeasible:
        checks[0].passed = False

    err = 0.0
    for dset in (DecisionSet.box([-1, -1], [1, 1]), DecisionSet.box([0, -2, 1], [3, 2, 1.5]),
                 DecisionSet.simplices(1, 2), DecisionSet.simplices(2, 3), DecisionSet.simplices(3, 2, 0.1)):
        V = dset.vertices()
        brute = np.max(np.linalg.norm(V[:, None, :] - V[None, :, :], axis=2))
        err = max(err, abs(brute - dset.diameter))
    ball = DecisionSet.ball([1.0, 2.0], 3.0)
    err = max(err, abs(ball.diameter - 6.0))
    checks.append(_check("geometry", "closed_form_diameter", err, 1e-12))
    return checks


# ---------------------------------------------------------------------------
# algorithms
# ---------------------------------------------------------------------------


def suite_algorithms(faults=(), quick=False):
    checks = []
    problems = [ps.q0(), ps.q1(), ps.q_simplex(), il.chain_instance()]
    failures = []
    for p in problems:
        x1 = p.decision_set.sample(np.random.default_rng(1))
        for name in ("ogd", "mirror_descent", "ftl", "extragradient"):
            for orc in (FeedbackOracle(), FeedbackOracle("gaussian", 0.5, 3)):
                try:
                    run(p, orc, Learner(name), x1, 100)
                except Exception as exc:  # noqa: BLE001 - reported as a check failure
                    failures.append(f"{p.name}/{name}: {exc}")
    checks.append(Check("algorithms", "feasibility", not failures, float(len(failures)), 0.0,
                        "; ".join(failures[:3])))

    corrupt = None
    if "algorithms.iterates" in faults:
        noise = np.random.default_rng(99)
        corrupt = lambda xs: xs + 1e-3 * noise.normal(size=xs.shape)  # noqa: E731
    worst = -np.inf
    for p, x1 in ((ps.q0(), np.array([1.0, 1.0])), (il.chain_instance(), np.array([0.1, 0.9, 0.1, 0.9]))):
        margin, _, _ = contraction_margin(p, x1, corrupt=corrupt)
        worst = max(worst, margin)
    checks.append(_check("algorithms", "ogd_contraction", worst, 0.0,
                         detail="max of ||x_n-x*||^2 - rho^(n-1)||x_1-x*||^2 (1+1e-9)"))

    N = 2000 if quick else 10_000
    worst = -np.inf
    for p in problems:
        x_star = solve_equilibrium(p).x_star
        D, G = p.decision_set.diameter, p.grad_bound
        x1 = p.decision_set.vertices()[0]
        log = run(p, FeedbackOracle(), Learner("ogd", StepSize(INVERSE_SQRT, D / G)), x1, N)
        static = static_regret_against(p, log, x_star)
        bound = 1.5 * G * D * np.sqrt(np.arange(1, N + 1))
        worst = max(worst, float(np.max(static - bound)))
    checks.append(_check("algorithms", "static_regret_sanity", worst, 0.0,
                         detail=f"OGD eta_n = D/(G sqrt n), N={N}"))
    return checks


# ---------------------------------------------------------------------------
# equilibrium
# ---------------------------------------------------------------------------


def small_instances():
    box = ps.unit_box()
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    return [
        ps.q0(),
        ps.q1(),
        ps.q_simplex(),
        ps.make_quadratic(np.zeros((2, 2)), np.array([0.3, -2.0]), 1.0, box, name="A0"),
        ps.make_quadratic(0.6 * rot, np.array([0.1, 0.2]), 2.0, box, name="rotation"),
        ps.make_quadratic(np.diag([0.9, 0.1]), np.array([0.5, 0.9]), 1.0, box, name="diag"),
    ]


def suite_equilibrium(faults=(), quick=False):
    checks = []
    worst = np.inf
    for p in small_instances():
        sol = solve_equilibrium(p, 1e-10)
        _, violation = check_ep_solution(p, sol.x_star, 101)
        worst = min(worst, violation)
    checks.append(_check("equilibrium", "ep_vi_coincidence", worst, -1e-6, upper=False,
                         detail="min Phi(x*, grid) on d=2 instances"))

    excess = -np.inf
    for p in small_instances() + [il.chain_instance()]:
        for tol in (1e-2, 1e-4, 1e-6):
            far = p.decision_set.vertices()[-1]
            sol = solve_equilibrium(p, tol, x0=far)
            r = sol.natural_residual
            x = sol.x_star
            term = p.loss(x, x) - p.loss(x, per_round_minimizer(p, x))
            cap = p.grad_bound * r + (p.beta ** 2 / (2 * p.alpha)) * r ** 2
            excess = max(excess, term - cap)
    checks.append(_check("equilibrium", "residual_soundness", excess, 0.0,
                         detail="per-round dynamic regret at approximate x* minus G r + beta^2 r^2/(2 alpha)"))

    spread = 0.0
    tol = 1e-10
    for p in [ps.q1(), ps.q_simplex(), il.chain_instance(), ps.random_quadratic(3, set_kind="ball")]:
        if p.mu <= 0:
            continue
        rng = np.random.default_rng(17)
        sols = np.array([solve_equilibrium(p, tol, x0=p.decision_set.sample(rng)).x_star
                         for _ in range(10)])
        spread = max(spread, np.max(np.linalg.norm(sols - sols[0], axis=1)))
    checks.append(_check("equilibrium", "uniqueness", spread, 2 * tol))

    excess = -np.inf
    n = 2000 if quick else 10_000
    for p in small_instances() + [il.chain_instance(), il.self_loop_instance()]:
        excess = max(excess, (p.alpha - p.beta) - 1e-8 - monotonicity_certificate(p, n, rng=5))
    checks.append(_check("equilibrium", "strong_monotonicity", excess, 0.0))
    return checks


# ---------------------------------------------------------------------------
# regret
# ---------------------------------------------------------------------------


def certificate_runs(rounds=1000):
    """(problem, algorithm, report) triples for deterministic runs on Q0/Q1/QS."""
    out = []
    for p in (ps.q0(), ps.q1(), ps.q_simplex()):
        x_star = solve_equilibrium(p, 1e-12)
        x1 = np.array([1.0, 1.0]) if p.decision_set.kind == BOX else np.array([0.05, 0.95])
        for name in ("ogd", "mirror_descent", "ftl", "extragradient"):
            log = run(p, FeedbackOracle(), Learner(name), x1, rounds)
            out.append((p, name, log, compute_report(p, log, x_star, 1e-9)))
    return out


def suite_regret(faults=(), quick=False):
    runs = certificate_runs(300 if quick else 1000)
    chain = il.chain_instance()
    log = run(chain, FeedbackOracle("rollout", rng_seed=4), Learner("ogd"),
              np.array([0.1, 0.9, 0.1, 0.9]), 300 if quick else 1000)
    runs.append((chain, "ogd-rollout", log, compute_report(chain, log, solve_equilibrium(chain), 1e-9)))
    rng = np.random.default_rng(31)
    thm2 = cor1 = mono = dom = -np.inf
    for p, name, log, rep in runs:
        slack = rep.prefix_slack
        delta = rep.delta
        if "regret.delta" in faults:
            delta = delta * rng.uniform(0, 1e-2, size=delta.shape)
        bound = thm2_bound_series(rep.static_regret, delta, p.alpha, p.beta, p.grad_bound,
                                  p.decision_set.diameter)
        thm2 = max(thm2, float(np.max(rep.dynamic_regret - bound - slack)))
        if rep.cor1_bound is not None:
            cor1 = max(cor1, float(np.max(rep.dynamic_regret - rep.cor1_bound - slack)))
        terms = np.diff(np.concatenate([[0.0], rep.dynamic_regret]))
        mono = max(mono, float(-terms.min()) - rep.tol_inner)
        for comp in p.decision_set.sample(rng, 10):
            static = static_regret_against(p, log, comp)
            dom = max(dom, float(np.max(static - rep.dynamic_regret - slack)))
        dom = max(dom, float(np.max(rep.static_regret - rep.dynamic_regret - slack)))
    return [
        _check("regret", "thm2_certificate", thm2, 0.0, detail="max_N dyn - bound - N tol"),
        _check("regret", "cor1_certificate", cor1, 0.0, detail="alpha > beta runs"),
        _check("regret", "dynamic_nondecreasing", mono, 0.0),
        _check("regret", "comparator_dominance", dom, 0.0),
    ]


# ---------------------------------------------------------------------------
# problems_synthetic
# ---------------------------------------------------------------------------


def suite_problems_synthetic(faults=(), quick=False):
    n = 1000 if quick else 4000
    err = 0.0
    over = -np.inf
    for seed in range(6):
        # full-dimensional sets reach every direction, so the sampled ratios
        # can approach alpha ||A||; on simplices they stay below it
        p = ps.random_quadratic(100 + seed, set_kind=("box", "ball")[seed % 2])
        err = max(err, abs(certify_alpha(p, n, rng=seed) - p.alpha),
                  abs(certify_beta(p, n, rng=seed) - p.beta))
        s = ps.random_quadratic(200 + seed, set_kind="simplices")
        over = max(over, certify_beta(s, n // 4, rng=seed) - s.beta)
    checks = [
        _check("problems_synthetic", "analytic_constants", err, 1e-6, detail="box and ball sets"),
        _check("problems_synthetic", "simplex_beta_upper", over, 1e-8,
               detail="sampled beta never exceeds alpha ||A|| on simplices"),
    ]

    err = 0.0
    rng = np.random.default_rng(8)
    for _ in range(10):
        d = 3
        A = rng.normal(size=(d, d))
        A *= rng.uniform(0.1, 0.9) / np.linalg.norm(A, 2)
        b = rng.uniform(-0.2, 0.2, d)
        p = ps.make_quadratic(A, b, rng.uniform(0.5, 2), DecisionSet.box(-np.ones(d), np.ones(d)))
        closed = p.closed_form_equilibrium()
        if closed is None:
            continue
        tol = 1e-10
        err = max(err, np.linalg.norm(solve_equilibrium(p, tol).x_star - closed) / (10 * tol))
    checks.append(_check("problems_synthetic", "closed_form_equilibrium", err, 1.0,
                         detail="||x_solver - x_closed|| / (10 tol)"))

    dev = 0.0
    for c, alpha in ((0.5, 1.0), (0.2, 2.0), (0.9, 0.7)):
        p = ps.make_quadratic(c * np.eye(3), np.zeros(3), alpha, DecisionSet.ball(np.zeros(3), 1.0))
        ratios = monotonicity_certificate(p, 500, rng=1, return_ratios=True)
        dev = max(dev, float(np.max(np.abs(ratios - alpha * (1 - c)))), abs(p.mu - alpha * (1 - c)))
    checks.append(_check("problems_synthetic", "monotonicity_tightness", dev, 1e-12))
    return checks


# ---------------------------------------------------------------------------
# problems_il
# ---------------------------------------------------------------------------


def mc_distribution_z(mdp, policy, episodes, rng, shift=None):
    """Largest |MC frequency - d^pi| in units of its standard error."""
    visits = il.sample_visits(mdp, policy, episodes, rng) / mdp.horizon
    exact = il.state_distribution(mdp, policy)
    if shift is not None:
        exact = exact + shift
    se = visits.std(axis=0, ddof=1) / np.sqrt(episodes)
    gap = np.abs(visits.mean(axis=0) - exact)
    # zero-variance states must match exactly (up to rounding)
    z = np.where(se > 0, gap / np.where(se > 0, se, 1.0), np.where(gap > 1e-12, np.inf, 0.0))
    return float(z.max())


def self_consistent_policy(problem, starts=5, tol=1e-12, seed=0):
    rng = np.random.default_rng(seed)
    sols = np.array([solve_equilibrium(problem, tol, x0=problem.decision_set.sample(rng)).x_star
                     for _ in range(starts)])
    spread = float(np.max(np.linalg.norm(sols - sols[0], axis=1)))
    fixed = float(np.linalg.norm(per_round_minimizer(problem, sols[0]) - sols[0]))
    return sols[0], spread, fixed


def suite_problems_il(faults=(), quick=False):
    chain = il.chain_instance()
    checks = []
    _, spread, fixed = self_consistent_policy(chain)
    checks.append(_check("problems_il", "unique_self_consistent_policy", max(spread / 1e-6, fixed / 1e-8), 1.0,
                         detail=f"spread={spread:.2e} (<=1e-6), fixed-point gap={fixed:.2e} (<=1e-8)"))
    margin, _, _ = contraction_margin(chain, np.array([0.1, 0.9, 0.1, 0.9]))
    checks.append(_check("problems_il", "linear_convergence", margin, 0.0))
    worst = max(gradient_check(p, 20, 1e-5, rng=6)
                for p in (chain, il.self_loop_instance(), il.random_instance(2)))
    checks.append(_check("problems_il", "gradient_consistency", worst, 1e-5))

    episodes = 20_000 if quick else 100_000
    z = 0.0
    rng = np.random.default_rng(12)
    for p in (chain, il.self_loop_instance(), il.random_instance(3, num_states=4, horizon=5)):
        policy = p.decision_set.sample(rng)
        shift = None
        if "problems_il.distribution" in faults:
            shift = np.zeros(p.mdp.num_states)
            shift[0], shift[1] = 0.01, -0.01
        z = max(z, mc_distribution_z(p.mdp, policy, episodes, rng, shift))
    checks.append(_check("problems_il", "monte_carlo_distribution", z, 3.0,
                         detail=f"{episodes} episodes, standard errors"))

    P = np.random.default_rng(1).dirichlet(np.ones(3), size=(3, 2))
    trivial = max(il.self_loop_instance().beta,
                  il.ILProblem(il.TabularMDP(P, np.ones(3) / 3, 1), il.deterministic_expert(3, 2), 0.1).beta)
    checks.append(_check("problems_il", "trivial_beta", trivial, 0.0,
                         detail="policy-independent dynamics give beta_hat = 0"))
    checks.append(_check("problems_il", "certified_alpha_exceeds_beta", chain.mu, 0.0, upper=False,
                         detail=f"alpha={chain.alpha:.4f}, beta_hat={chain.beta:.4f} (estimated)"))
    return checks


# ---------------------------------------------------------------------------
# harness
# ---------------------------------------------------------------------------

_HARNESS_CONFIG = """
[problem]
kind = preset
name = {name}

[algorithm]
name = {alg}

[oracle]
mode = {mode}
sigma = 0.2

[run]
rounds = 60
seeds = 3 4
x1 = random
"""


def suite_harness(faults=(), quick=False):
    from .config import parse_config
    from .experiment import ROUND_COLUMNS, execute_seed, read_round_csv, round_csv, run_experiment

    checks = []
    worst = 0.0
    identical = True
    with tempfile.TemporaryDirectory() as tmp:
        for name, alg, mode in (("Q1", "ogd", "gaussian"), ("il-chain", "ogd", "rollout")):
            cfg = parse_config(_HARNESS_CONFIG.format(name=name, alg=alg, mode=mode))
            out_a, out_b = Path(tmp, name, "a"), Path(tmp, name, "b")
            run_experiment(cfg, out_a)
            run_experiment(cfg, out_b)
            for f in sorted(out_a.iterdir()):
                identical &= f.read_bytes() == (out_b / f.name).read_bytes()
            # round trip against a freshly computed report
            _, report, _ = execute_seed(cfg, 3)
            parsed = read_round_csv(out_a / "rounds_seed3.csv")
            text_again = round_csv(report)
            identical &= text_again == (out_a / "rounds_seed3.csv").read_text()
            pairs = {
                "loss": report.losses, "dyn_regret": report.dynamic_regret,
                "static_regret": report.static_regret, "delta_n": report.delta,
                "thm2_bound": report.thm2_bound, "residual": report.residual,
            }
            if report.cor1_bound is not None:
                pairs["cor1_bound"] = report.cor1_bound
            for key, series in pairs.items():
                if not np.array_equal(parsed[key], series):
                    worst = max(worst, float(np.max(np.abs(parsed[key] - series))) or np.inf)
            identical &= tuple(parsed) == ROUND_COLUMNS
    checks.append(_check("harness", "csv_roundtrip", worst, 0.0, detail="exact float equality"))
    checks.append(Check("harness", "config_determinism", identical, float(not identical), 0.0,
                        "byte-identical outputs for equal (config, seed)"))
    if not faults:
        detected = []
        for fault in FAULTS:
            module = fault.split(".")[0]
            results = SUITES[module](faults=(fault,), quick=True)
            detected.append(not all(c.passed for c in results))
        missed = [f for f, d in zip(FAULTS, detected) if not d]
        checks.append(Check("harness", "negative_controls", not missed, float(len(missed)), 0.0,
                            "undetected: " + ", ".join(missed) if missed else f"{len(FAULTS)} faults detected"))
    return checks


SUITES = {
    "core": suite_core,
    "geometry": suite_geometry,
    "algorithms": suite_algorithms,
    "equilibrium": suite_equilibrium,
    "regret": suite_regret,
    "problems_synthetic": suite_problems_synthetic,
    "problems_il": suite_problems_il,
    "harness": suite_harness,
}


def verify(scope="all", faults=(), quick=False, echo=print):
    """Run the selected suites, echo one line per check, return all checks."""
    names = list(SUITES) if scope == "all" else [scope]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown verification scope {unknown[0]!r}; choose from all, {', '.join(SUITES)}")
    checks = []
    for name in names:
        tic = time.perf_counter()
        results = SUITES[name](faults=tuple(faults), quick=quick)
        for c in results:
            echo(c.line())
        echo(f"-- {name}: {sum(c.passed for c in results)}/{len(results)} passed "
             f"in {time.perf_counter() - tic:.1f}s")
        checks.extend(results)
    return checks

