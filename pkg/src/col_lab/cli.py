"""Command line entry point: ``col-lab {run,verify,solve-eq,sweep}``.

Exit codes: 0 success, 1 failed verification checks, 2 configuration
errors, 3 numeric failure or solver non-convergence.
"""

import argparse
import logging
import sys

import numpy as np

from .config import build_problem, read_config
from .equilibrium import MAX_EP_DIMENSION, check_ep_solution
from .errors import ConfigurationError, DomainError, NonConvergenceError, NumericError
from .experiment import run_experiment, run_sweep

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SOLVE_TOLERANCE = 1e-10


def _add_common(p):
    p.add_argument("--config", required=True, metavar="PATH", help="INI experiment config")
    p.add_argument("--seed", type=int, help="run this single seed instead of [run] seeds")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides [run] out)")
    p.add_argument("--rounds", type=int, help="number of rounds N (overrides [run] rounds)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VAL",
                   help="set section.key=value; repeatable")


def build_parser():
    from .verification import FAULTS, SUITES

    parser = argparse.ArgumentParser(prog="col-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write CSVs")
    _add_common(run_p)

    sweep_p = sub.add_parser("sweep", help="grid over [sweep] stepsizes and sigmas")
    _add_common(sweep_p)

    eq_p = sub.add_parser("solve-eq", help="solve for the equilibrium x* of a problem")
    _add_common(eq_p)

    ver = sub.add_parser("verify", help="run the invariant suites")
    ver.add_argument("scope", nargs="?", default="all", choices=["all", *SUITES])
    ver.add_argument("--inject-fault", action="append", default=[], choices=FAULTS,
                     help="corrupt one input on purpose; the suite should then fail")
    ver.add_argument("--quick", action="store_true", help="smaller sample sizes")
    return parser


def _load(args):
    return read_config(args.config, args.override, seed=args.seed, rounds=args.rounds, out=args.out)


def _cmd_run(args):
    config = _load(args)
    rows = run_experiment(config)
    mean = rows[-1]
    print(f"wrote {len(config.seeds)} seed(s) x {config.rounds} rounds to {config.out}")
    print(f"mean final dynamic regret {mean['final_dyn_regret']!r}")
    if mean["thm2_pass"] is not None:
        print(f"thm2 certificate held for {mean['thm2_pass']}/{len(config.seeds)} seeds")
    return EXIT_OK


def _cmd_sweep(args):
    config = _load(args)
    table = run_sweep(config)
    print(f"wrote {len(table)} sweep cells to {config.out}")
    return EXIT_OK


def _cmd_solve_eq(args):
    from .equilibrium import solve_equilibrium

    config = _load(args)
    problem = build_problem(config.problem)
    sol = solve_equilibrium(problem, SOLVE_TOLERANCE, max_iter=config.equilibrium_max_iter)
    with np.printoptions(precision=12, floatmode="maxprec"):
        print(f"problem     {problem.name}")
        print(f"x*          {sol.x_star}")
    print(f"residual    {sol.natural_residual:.3e}")
    print(f"iterations  {sol.iterations}")
    if problem.dimension <= min(2, MAX_EP_DIMENSION):
        ok, worst = check_ep_solution(problem, sol.x_star, 101)
        print(f"ep_check    worst_violation={worst:.3e} ({'pass' if ok else 'FAIL'})")
    return EXIT_OK


def _cmd_verify(args):
    from .verification import verify

    checks = verify(args.scope, args.inject_fault, quick=args.quick)
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "solve-eq": _cmd_solve_eq, "verify": _cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, DomainError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc} (best residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
