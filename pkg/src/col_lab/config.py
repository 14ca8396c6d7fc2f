"""Experiment configuration files.

Configs are INI files (sections of ``key = value`` lines); the grammar is
documented in ``docs/formats.md``. Any key can be overridden from the
command line as ``section.key=value``.
"""

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import problems_il, problems_synthetic
from .algorithms import ALGORITHMS, StepSize
from .core import ORACLE_MODES, FeedbackOracle
from .errors import ConfigurationError, DomainError
from .geometry import DecisionSet

PRESETS = {
    "Q0": problems_synthetic.q0,
    "Q1": problems_synthetic.q1,
    "QS": problems_synthetic.q_simplex,
    "il-chain": problems_il.chain_instance,
    "il-selfloop": problems_il.self_loop_instance,
}

DEFAULTS = {
    "algorithm": {"name": "ogd", "stepsize": "auto"},
    "oracle": {"mode": "deterministic", "sigma": "0.0"},
    "run": {
        "rounds": "500",
        "seeds": "0",
        "tol_inner": "1e-9",
        "equilibrium_tol": "1e-10",
        "equilibrium_max_iter": "1000000",
        "x1": "random",
        "out": "results",
    },
    "sweep": {"stepsizes": "", "sigmas": ""},
}


def _vector(text, what):
    try:
        return np.array([float(t) for t in text.replace(",", " ").split()], dtype=float)
    except ValueError as exc:
        raise ConfigurationError(f"{what}: expected numbers, got {text!r}") from exc


def _float(section, key, default=None):
    raw = section.get(key, default)
    if raw is None:
        raise ConfigurationError(f"[{section.name}] missing key {key!r}")
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"[{section.name}] {key}: not a number: {raw!r}") from exc


def _int(section, key, default=None):
    value = _float(section, key, default)
    if value != int(value):
        raise ConfigurationError(f"[{section.name}] {key}: expected an integer")
    return int(value)


@dataclass
class ExperimentConfig:
    problem: dict
    algorithm: str
    stepsize: Optional[StepSize]
    oracle_mode: str
    sigma: float
    rounds: int
    seeds: list
    tol_inner: float
    equilibrium_tol: float
    equilibrium_max_iter: int
    x1: str
    out: Path
    base_dir: Path = field(default_factory=Path.cwd)
    sweep_stepsizes: list = field(default_factory=list)
    sweep_sigmas: list = field(default_factory=list)
    source_text: str = ""

    def oracle(self, seed):
        return FeedbackOracle(self.oracle_mode, self.sigma, int(seed))


def read_config(path, overrides=(), *, seed=None, rounds=None, out=None):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    return parse_config(path.read_text(), overrides, base_dir=path.parent,
                        seed=seed, rounds=rounds, out=out)


def parse_config(text, overrides=(), *, base_dir=None, seed=None, rounds=None, out=None):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.read_dict(DEFAULTS)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot or not option:
            raise ConfigurationError(f"override must look like section.key=value, got {item!r}")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value.strip())
    if not parser.has_section("problem"):
        raise ConfigurationError("config needs a [problem] section")

    run = parser["run"]
    alg = parser["algorithm"]
    orc = parser["oracle"]
    name = alg.get("name").strip()
    if name not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
    mode = orc.get("mode").strip()
    if mode not in ORACLE_MODES:
        raise ConfigurationError(f"unknown oracle mode {mode!r}; choose from {ORACLE_MODES}")
    step_text = alg.get("stepsize").strip()
    stepsize = None if step_text == "auto" else StepSize.parse(step_text)

    seeds = [seed] if seed is not None else [int(s) for s in _vector(run.get("seeds"), "seeds")]
    n_rounds = rounds if rounds is not None else _int(run, "rounds")
    if n_rounds < 1:
        raise ConfigurationError("rounds must be at least 1")
    if not seeds:
        raise ConfigurationError("seeds list is empty")
    if _float(run, "equilibrium_tol") <= 0 or _int(run, "equilibrium_max_iter") < 1:
        raise ConfigurationError("equilibrium_tol must be positive and equilibrium_max_iter at least 1")
    if _float(run, "tol_inner") <= 0:
        raise ConfigurationError("tol_inner must be positive")
    sigma = _float(orc, "sigma")
    if sigma < 0:
        raise ConfigurationError("sigma must be nonnegative")

    base = Path(base_dir) if base_dir is not None else Path.cwd()
    problem = dict(parser["problem"])
    if problem.get("kind", "").strip() == "il" and "mdp" in problem:
        mdp_path = Path(problem["mdp"].strip())
        if not mdp_path.is_absolute():
            mdp_path = base / mdp_path
        if not mdp_path.is_file():
            raise ConfigurationError(f"MDP file not found: {mdp_path}")
        problem["mdp"] = str(mdp_path)

    sweep = parser["sweep"]
    sweep_steps = [StepSize.parse(t) for t in sweep.get("stepsizes").split()]
    sweep_sigmas = [float(t) for t in _vector(sweep.get("sigmas"), "sweep sigmas")]

    resolved = configparser.ConfigParser(interpolation=None)
    resolved.read_dict(parser)
    return ExperimentConfig(
        problem=problem,
        algorithm=name,
        stepsize=stepsize,
        oracle_mode=mode,
        sigma=sigma,
        rounds=n_rounds,
        seeds=seeds,
        tol_inner=_float(run, "tol_inner"),
        equilibrium_tol=_float(run, "equilibrium_tol"),
        equilibrium_max_iter=_int(run, "equilibrium_max_iter"),
        x1=run.get("x1").strip(),
        out=Path(out) if out is not None else Path(run.get("out").strip()),
        base_dir=base,
        sweep_stepsizes=sweep_steps,
        sweep_sigmas=sweep_sigmas,
        source_text=_dump(resolved),
    )


def _dump(parser):
    lines = []
    for section in parser.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in parser[section].items())
        lines.append("")
    return "\n".join(lines)


def _matrix(spec, dim):
    kind, _, body = spec.partition(":")
    kind = kind.strip()
    if kind == "scaled_identity":
        return float(body) * np.eye(dim)
    if kind == "diagonal":
        diag = _vector(body, "A diagonal")
        if diag.size != dim:
            raise ConfigurationError("A diagonal length must match the dimension")
        return np.diag(diag)
    if kind == "rows":
        rows = [_vector(r, "A rows") for r in body.split(";")]
        try:
            return np.array(rows, dtype=float)
        except ValueError as exc:
            raise ConfigurationError("A rows have unequal lengths") from exc
    raise ConfigurationError(f"unknown matrix spec {spec!r}")


def _decision_set(section, dim):
    kind = section.get("set", "box").strip()
    if kind == "box":
        lower = _vector(section.get("lower", "-1"), "lower")
        upper = _vector(section.get("upper", "1"), "upper")
        return DecisionSet.box(lower, upper, dimension=dim if lower.size == 1 else None)
    if kind == "ball":
        center = _vector(section.get("center", "0"), "center")
        if center.size == 1:
            center = np.full(dim, center[0])
        return DecisionSet.ball(center, float(section.get("radius", "1")))
    if kind == "simplices":
        blocks = int(section.get("blocks", "1"))
        size = int(section.get("block_size", str(dim // blocks)))
        return DecisionSet.simplices(blocks, size, float(section.get("epsilon", "0")))
    raise ConfigurationError(f"unknown set kind {kind!r}")


def build_problem(spec):
    """Instantiate the problem described by a ``[problem]`` mapping."""
    kind = spec.get("kind", "").strip()
    try:
        if kind == "preset":
            name = spec.get("name", "").strip()
            if name not in PRESETS:
                raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
            return PRESETS[name]()
        if kind == "quadratic":
            dim = int(spec.get("dimension", "0")) or None
            b = _vector(spec.get("b", "0"), "b")
            if dim is None:
                dim = b.size if b.size > 1 else None
            A_spec = spec.get("a", "scaled_identity:0.5")
            if dim is None:
                if A_spec.strip().startswith("scaled_identity"):
                    raise ConfigurationError("quadratic problems need 'dimension' or a full b")
                dim = _matrix(A_spec, 1).shape[0]
            if b.size == 1:
                b = np.full(dim, b[0])
            dset = _decision_set(spec, dim)
            return problems_synthetic.make_quadratic(
                _matrix(A_spec, dim), b, float(spec.get("alpha", "1")), dset,
                name=spec.get("label", "quadratic"),
            )
        if kind == "il":
            if "mdp" not in spec:
                raise ConfigurationError("[problem] kind = il needs an 'mdp' path")
            mdp, expert, file_eps = problems_il.load_mdp_file(spec["mdp"])
            eps = float(spec.get("epsilon", file_eps if file_eps is not None else 0.0))
            beta_text = spec.get("beta", "auto").strip()
            return problems_il.ILProblem(
                mdp, expert, eps,
                beta=None if beta_text == "auto" else float(beta_text),
                beta_pairs=int(spec.get("beta_pairs", "2000")),
                beta_seed=int(spec.get("beta_seed", "0")),
                name=spec.get("label", "imitation"),
            )
    except (DomainError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid problem specification: {exc}") from exc
    raise ConfigurationError(f"unknown problem kind {kind!r} (quadratic, il or preset)")


def initial_point(problem, spec, seed):
    dset = problem.decision_set
    if spec == "center":
        return dset.midpoint()
    if spec == "random":
        return dset.sample(np.random.default_rng([int(seed), 1]))
    if spec == "vertex":
        verts = dset.vertices()
        if verts is None:
            return dset.center + dset.radius * np.eye(dset.dimension)[0]
        return verts[-1]
    x = _vector(spec, "x1")
    if x.shape != (dset.dimension,) or not dset.contains(x):
        raise ConfigurationError(f"x1 = {spec!r} is not a point of the decision set")
    return x
