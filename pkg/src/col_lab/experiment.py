"""Multi-seed experiment execution and CSV emission."""

import csv
import io
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .algorithms import Learner
from .config import build_problem, initial_point
from .core import ROLLOUT, run
from .equilibrium import solve_equilibrium
from .errors import NonConvergenceError, RateUndefinedError
from .problems_il import estimate_noise_variance
from .regret import certificate_margins, compute_report, fit_regret_rate

log = logging.getLogger(__name__)

ROUND_COLUMNS = (
    "round", "loss", "dyn_regret", "static_regret", "delta_n", "thm2_bound", "cor1_bound", "residual",
)
SUMMARY_COLUMNS = (
    "seed", "rounds", "final_loss", "final_dyn_regret", "final_static_regret", "final_delta",
    "rate", "converged", "thm2_margin", "thm2_pass", "cor1_margin", "cor1_pass", "beta_estimated",
    "noise_variance",
)
CURVE_COLUMNS = ("round", "mean_dyn_regret", "std_dyn_regret", "mean_static_regret", "mean_delta")
CONVERGED_RESIDUAL = 1e-6
NOISE_ROLLOUTS = 1000


def fmt(value):
    """Shortest round-trip text for floats; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if np.isnan(value):
        return ""
    return repr(value)


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[fmt(v) for v in row] for row in rows])
    return buf.getvalue()


def round_rows(report):
    cols = [
        report.losses,
        report.dynamic_regret,
        report.static_regret,
        report.delta,
        report.thm2_bound,
        report.cor1_bound,
        report.residual,
    ]
    return [
        [n + 1] + [None if c is None else c[n] for c in cols] for n in range(report.rounds)
    ]


def round_csv(report):
    return _csv_text(ROUND_COLUMNS, round_rows(report))


def read_round_csv(path):
    """Parse a per-round CSV back into float columns (NaN where empty)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return {
        name: np.array([float(r[i]) if r[i] else np.nan for r in rows])
        for i, name in enumerate(header)
    }


def equilibrium_for(problem, tol, max_iter=10**6):
    """x* for the bound certificates, or None when no mu-guarantee and no convergence."""
    try:
        return solve_equilibrium(problem, tol, max_iter=max_iter)
    except NonConvergenceError:
        if problem.mu > 0:
            raise
        log.warning("no equilibrium found for %s (mu <= 0); bounds left empty", problem.name)
        return None


def execute_seed(config, seed, problem=None, x_star=None):
    """Run one seed; returns ``(run_log, report, summary_row)``."""
    problem = problem or build_problem(config.problem)
    if x_star is None:
        x_star = equilibrium_for(problem, config.equilibrium_tol, config.equilibrium_max_iter)
    x1 = initial_point(problem, config.x1, seed)
    run_log = run(problem, config.oracle(seed), Learner(config.algorithm, config.stepsize),
                  x1, config.rounds)
    report = compute_report(problem, run_log, x_star, config.tol_inner, bounds=x_star is not None)
    row = summarize(report, seed)
    row["noise_variance"] = noise_variance(problem, config, x1, seed)
    return run_log, report, row


def noise_variance(problem, config, x1, seed):
    """Recorded ``E||xi||^2``: sigma^2 for Gaussian noise, estimated at x_1 for rollouts."""
    oracle = config.oracle(seed)
    if oracle.mode != ROLLOUT:
        return oracle.noise_variance
    return estimate_noise_variance(problem, x1, np.random.default_rng([int(seed), 2]),
                                   NOISE_ROLLOUTS)


def summarize(report, seed):
    margins = certificate_margins(report) if report.thm2_bound is not None else {}
    rate = None
    if report.rounds >= 20:
        try:
            rate = fit_regret_rate(report)
        except RateUndefinedError:
            rate = None
    thm2 = margins.get("thm2")
    cor1 = margins.get("cor1")
    return {
        "seed": seed,
        "rounds": report.rounds,
        "final_loss": report.losses[-1],
        "final_dyn_regret": report.dynamic_regret[-1],
        "final_static_regret": report.static_regret[-1],
        "final_delta": report.delta[-1],
        "rate": rate,
        "converged": bool(report.residual[-1] <= CONVERGED_RESIDUAL),
        "thm2_margin": thm2,
        "thm2_pass": None if thm2 is None else thm2 <= 0,
        "cor1_margin": cor1,
        "cor1_pass": None if cor1 is None else cor1 <= 0,
        "beta_estimated": report.beta_is_estimate,
        "noise_variance": None,
    }


def _mean_row(rows):
    out = {"seed": "mean", "rounds": rows[0]["rounds"]}
    for key in SUMMARY_COLUMNS[2:]:
        vals = [r[key] for r in rows if r[key] is not None]
        if key in ("thm2_pass", "cor1_pass", "converged"):
            out[key] = None if not vals else sum(bool(v) for v in vals)
        elif key == "beta_estimated":
            out[key] = rows[0][key]
        else:
            out[key] = float(np.mean(vals)) if vals else None
    return out


def _seed_job(args):
    config, seed = args
    _, report, row = execute_seed(config, seed)
    return seed, report, row


def _thread_cap():
    try:
        return max(1, int(os.environ.get("COL_LAB_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(config, out_dir=None):
    """Run every seed and write per-round, mean-curve and summary CSVs.

    Returns the list of per-seed summary rows (mean row last).
    """
    out = Path(out_dir or config.out)
    workers = min(_thread_cap(), len(config.seeds))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_seed_job, [(config, s) for s in config.seeds]))
    else:
        problem = build_problem(config.problem)
        x_star = equilibrium_for(problem, config.equilibrium_tol, config.equilibrium_max_iter)
        results = []
        for s in config.seeds:
            _, report, row = execute_seed(config, s, problem, x_star)
            results.append((s, report, row))

    rows = []
    dyn = []
    for seed, report, row in results:
        atomic_write(out / f"rounds_seed{seed}.csv", round_csv(report))
        rows.append(row)
        dyn.append((report.dynamic_regret, report.static_regret, report.delta))
    rows.append(_mean_row(rows))
    atomic_write(out / "summary.csv",
                 _csv_text(SUMMARY_COLUMNS, [[r[k] for k in SUMMARY_COLUMNS] for r in rows]))
    d = np.array([x[0] for x in dyn])
    s = np.array([x[1] for x in dyn])
    delta = np.array([x[2] for x in dyn])
    curve = [
        [n + 1, d[:, n].mean(), d[:, n].std(), s[:, n].mean(), delta[:, n].mean()]
        for n in range(d.shape[1])
    ]
    atomic_write(out / "mean_curve.csv", _csv_text(CURVE_COLUMNS, curve))
    atomic_write(out / "config_resolved.ini", config.source_text)
    return rows


def run_sweep(config, out_dir=None):
    """Grid over the [sweep] stepsizes and sigmas; one sub-directory per cell."""
    out = Path(out_dir or config.out)
    steps = config.sweep_stepsizes or [config.stepsize]
    sigmas = config.sweep_sigmas or [config.sigma]
    table = []
    for step in steps:
        for sigma in sigmas:
            tag = f"eta={'auto' if step is None else step.describe()}_sigma={sigma!r}"
            cell = replace(config, stepsize=step, sigma=sigma)
            mean = run_experiment(cell, out / tag)[-1]
            table.append([
                "auto" if step is None else step.describe(), sigma,
                mean["final_dyn_regret"], mean["rate"], mean["thm2_pass"], len(config.seeds),
            ])
    atomic_write(
        out / "sweep.csv",
        _csv_text(("stepsize", "sigma", "mean_final_dyn_regret", "mean_rate", "thm2_pass", "seeds"),
                  table),
    )
    return table
