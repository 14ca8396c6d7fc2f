"""Reference implementations that share no code with the package.

They are slow and simple on purpose: bisection instead of sorting for the
simplex projection, explicit trajectory enumeration instead of the forward
recursion for state distributions.
"""

import itertools

import numpy as np


def project_floored_simplex_bisect(y, eps=0.0, iters=200):
    """argmin ||p - y|| over {p >= eps, sum p = 1} by bisection on the shift."""
    y = np.asarray(y, dtype=float)
    lo, hi = y.min() - 1.0 - abs(eps), y.max() + 1.0

    def mass(tau):
        return np.maximum(y - tau, eps).sum()

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mass(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return np.maximum(y - 0.5 * (lo + hi), eps)


def project_box(y, lower, upper):
    return np.minimum(np.maximum(y, lower), upper)


def project_ball(y, center, radius):
    v = np.asarray(y, dtype=float) - center
    n = np.linalg.norm(v)
    return y if n <= radius else center + radius * v / n


def state_distribution_enumerated(P, pi, d1, T):
    """Average state distribution by summing over every trajectory."""
    S, A = pi.shape
    d = np.zeros(S)
    for states in itertools.product(range(S), repeat=T):
        for actions in itertools.product(range(A), repeat=T - 1):
            prob = d1[states[0]]
            for t in range(T - 1):
                prob *= pi[states[t], actions[t]] * P[states[t], actions[t], states[t + 1]]
                if prob == 0.0:
                    break
            if prob == 0.0:
                continue
            for s in states:
                d[s] += prob / T
    return d


def quadratic_fixed_point(A, b):
    """Unconstrained x* = (I - A)^{-1} b."""
    A = np.asarray(A, dtype=float)
    return np.linalg.solve(np.eye(A.shape[0]) - A, b)


def quadratic_loss(A, b, alpha, x, xp):
    r = np.asarray(xp) - A @ np.asarray(x) - b
    return 0.5 * alpha * float(r @ r)
