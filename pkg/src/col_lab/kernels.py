"""Hot inner loops, each in a numba-compiled and a vectorized numpy flavour.

The public names (``project_simplex_blocks``, ``state_distributions``,
``rollout_visits``) dispatch to the numba version unless the backend was
disabled through ``COL_LAB_NUMBA=0``. Both flavours are importable directly
so the test-suite and the benchmark can compare them.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit

# ---------------------------------------------------------------------------
# Euclidean projection onto a product of eps-floored simplices
# ---------------------------------------------------------------------------


def _project_simplex_blocks_loop(y, num_blocks, block_size, eps):
    # p = eps + q with q the projection of y - eps onto {q >= 0, sum q = radius};
    # no division by radius, which can be a few ulps when block_size * eps ~ 1
    out = np.empty(num_blocks * block_size)
    radius = 1.0 - block_size * eps
    for b in range(num_blocks):
        lo = b * block_size
        if radius <= 0.0:
            for i in range(block_size):
                out[lo + i] = eps
            continue
        z = np.empty(block_size)
        for i in range(block_size):
            z[i] = y[lo + i] - eps
        # stable sort on -z: ties resolved by coordinate index
        order = np.argsort(-z, kind="mergesort")
        # the top entry is always in the support; testing it could fail when
        # z - radius rounds back to z
        css = z[order[0]]
        tau = css - radius
        for j in range(1, block_size):
            css += z[order[j]]
            t = (css - radius) / (j + 1.0)
            if z[order[j]] - t > 0.0:
                tau = t
        for i in range(block_size):
            q = z[i] - tau
            if q < 0.0:
                q = 0.0
            out[lo + i] = eps + q
    return out


_project_simplex_blocks_jit = njit(_project_simplex_blocks_loop)


def project_simplex_blocks_numpy(y, num_blocks, block_size, eps):
    """Vectorized block projection; same arithmetic order as the loop version."""
    radius = 1.0 - block_size * eps
    if radius <= 0.0:
        return np.full(num_blocks * block_size, float(eps))
    z = np.asarray(y, dtype=float).reshape(num_blocks, block_size) - eps
    u = -np.sort(-z, axis=1, kind="stable")
    css = np.cumsum(u, axis=1)
    ks = np.arange(1, block_size + 1, dtype=float)
    thresholds = (css - radius) / ks
    active = u - thresholds > 0.0
    # last active index per row; the first entry is active by construction
    active[:, 0] = True
    rho = block_size - 1 - np.argmax(active[:, ::-1], axis=1)
    tau = thresholds[np.arange(num_blocks), rho]
    q = np.maximum(z - tau[:, None], 0.0)
    return (eps + q).reshape(-1)


def project_simplex_blocks_numba(y, num_blocks, block_size, eps):
    return _project_simplex_blocks_jit(
        np.ascontiguousarray(y, dtype=np.float64), int(num_blocks), int(block_size), float(eps)
    )


# ---------------------------------------------------------------------------
# Per-time state distributions of a tabular episodic MDP
# ---------------------------------------------------------------------------


def _state_distributions_loop(P, pi, d1, horizon):
    S = P.shape[0]
    A = P.shape[1]
    # policy-induced transition matrix, rows renormalised so that
    # policy-independent rows (e.g. self loops) come out exactly
    P_pi = np.zeros((S, S))
    for s in range(S):
        total = 0.0
        for s2 in range(S):
            acc = 0.0
            for a in range(A):
                acc += pi[s, a] * P[s, a, s2]
            P_pi[s, s2] = acc
            total += acc
        for s2 in range(S):
            P_pi[s, s2] /= total
    out = np.zeros((horizon, S))
    for s in range(S):
        out[0, s] = d1[s]
    for t in range(1, horizon):
        for s in range(S):
            w = out[t - 1, s]
            if w == 0.0:
                continue
            for s2 in range(S):
                out[t, s2] += w * P_pi[s, s2]
    return out


_state_distributions_jit = njit(_state_distributions_loop)


def state_distributions_numpy(P, pi, d1, horizon):
    P_pi = np.einsum("sa,sat->st", pi, P)
    P_pi /= P_pi.sum(axis=1, keepdims=True)
    out = np.empty((horizon, P.shape[0]))
    out[0] = d1
    for t in range(1, horizon):
        out[t] = out[t - 1] @ P_pi
    return out


def state_distributions_numba(P, pi, d1, horizon):
    return _state_distributions_jit(
        np.ascontiguousarray(P, dtype=np.float64),
        np.ascontiguousarray(pi, dtype=np.float64),
        np.ascontiguousarray(d1, dtype=np.float64),
        int(horizon),
    )


# ---------------------------------------------------------------------------
# Episode rollouts driven by pre-drawn uniforms
# ---------------------------------------------------------------------------
# uniforms has shape (episodes, horizon, 2): [t, 0] picks s_t, [t, 1] picks a_t.
# Sampling rule for a cumulative row c and uniform u: index = #{k : c[k] <= u},
# clamped to the last index. Both flavours apply it identically, so they
# produce bitwise-equal visit counts from the same uniforms.


def _rollout_visits_loop(P_cum, pi_cum, d1_cum, horizon, uniforms):
    episodes = uniforms.shape[0]
    S = d1_cum.shape[0]
    A = pi_cum.shape[1]
    counts = np.zeros((episodes, S))
    for e in range(episodes):
        u = uniforms[e, 0, 0]
        s = 0
        while s < S - 1 and d1_cum[s] <= u:
            s += 1
        counts[e, s] += 1.0
        for t in range(1, horizon):
            u = uniforms[e, t - 1, 1]
            a = 0
            while a < A - 1 and pi_cum[s, a] <= u:
                a += 1
            u = uniforms[e, t, 0]
            s2 = 0
            while s2 < S - 1 and P_cum[s, a, s2] <= u:
                s2 += 1
            s = s2
            counts[e, s] += 1.0
    return counts


_rollout_visits_jit = njit(_rollout_visits_loop)


def _pick(cum_rows, u):
    last = cum_rows.shape[-1] - 1
    return np.minimum((cum_rows <= u[:, None]).sum(axis=1), last)


def rollout_visits_numpy(P_cum, pi_cum, d1_cum, horizon, uniforms):
    episodes = uniforms.shape[0]
    S = d1_cum.shape[0]
    counts = np.zeros((episodes, S))
    rows = np.arange(episodes)
    s = _pick(np.broadcast_to(d1_cum, (episodes, S)), uniforms[:, 0, 0])
    counts[rows, s] += 1.0
    for t in range(1, horizon):
        a = _pick(pi_cum[s], uniforms[:, t - 1, 1])
        s = _pick(P_cum[s, a], uniforms[:, t, 0])
        counts[rows, s] += 1.0
    return counts


def rollout_visits_numba(P_cum, pi_cum, d1_cum, horizon, uniforms):
    return _rollout_visits_jit(
        np.ascontiguousarray(P_cum, dtype=np.float64),
        np.ascontiguousarray(pi_cum, dtype=np.float64),
        np.ascontiguousarray(d1_cum, dtype=np.float64),
        int(horizon),
        np.ascontiguousarray(uniforms, dtype=np.float64),
    )


if NUMBA_ENABLED:
    project_simplex_blocks = project_simplex_blocks_numba
    state_distributions = state_distributions_numba
    rollout_visits = rollout_visits_numba
else:
    project_simplex_blocks = project_simplex_blocks_numpy
    state_distributions = state_distributions_numpy
    rollout_visits = rollout_visits_numpy
