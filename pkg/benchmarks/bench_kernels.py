"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and problem size with the median wall time of
each flavour and the speedup. The numba timings exclude compilation (one
warm-up call is made first).
"""

import argparse
import statistics
import time

import numpy as np

from col_lab import kernels


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        tic = time.perf_counter()
        fn()
        times.append(time.perf_counter() - tic)
    return statistics.median(times)


def cases(rng):
    for blocks, size in ((4, 3), (64, 8), (512, 16)):
        y = rng.normal(size=blocks * size)
        yield "project_simplex_blocks", f"{blocks}x{size}", (y, blocks, size, 0.01), 200

    for S, A, T in ((2, 2, 3), (20, 4, 30), (100, 10, 50)):
        P = rng.dirichlet(np.ones(S), size=(S, A))
        pi = rng.dirichlet(np.ones(A), size=S)
        d1 = rng.dirichlet(np.ones(S))
        yield "state_distributions", f"S={S} A={A} T={T}", (P, pi, d1, T), 200

    for S, A, T, E in ((2, 2, 3, 1000), (10, 3, 20, 10_000), (50, 5, 50, 20_000)):
        P_cum = np.cumsum(rng.dirichlet(np.ones(S), size=(S, A)), axis=2)
        pi_cum = np.cumsum(rng.dirichlet(np.ones(A), size=S), axis=1)
        d1_cum = np.cumsum(rng.dirichlet(np.ones(S)))
        u = rng.random((E, T, 2))
        yield "rollout_visits", f"S={S} T={T} E={E}", (P_cum, pi_cum, d1_cum, T, u), 5


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'size':<22}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    for name, size, call_args, inner in cases(rng):
        np_fn = getattr(kernels, f"{name}_numpy")
        nb_fn = getattr(kernels, f"{name}_numba")
        nb_fn(*call_args)

        def loop(fn):
            return lambda: [fn(*call_args) for _ in range(inner)]

        t_np = _median_time(loop(np_fn), args.repeat) / inner
        t_nb = _median_time(loop(nb_fn), args.repeat) / inner
        print(f"{name:<24}{size:<22}{t_np:>12.2e}{t_nb:>12.2e}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
