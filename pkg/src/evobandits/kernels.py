"""Fused, allocation-free evolution-step kernel.

The numpy formulas in grad.py are the readable reference; at populations of
10^5+ agents their temporaries dominate the step time, so the engine runs
this compiled kernel instead. A step is two data-parallel passes:

  1. softmax every agent's preference row once (sequential reads);
  2. per mirrored row, evaluate the ego agent's own rule against its
     opponent's policy and write the updated preference row.

Rows never share state and are never reduced together, so the result is
independent of the worker count, and identical (up to last-ulp exp
differences) to the per-pair numpy reference path. No fastmath anywhere:
float ops must stay IEEE-ordered for reproducibility.
"""

import numpy as np
from numba import njit, prange

KIND_PG = 0
KIND_LOLA = 1

# scratch vector slots per worker chunk
_SLOTS = 6


@njit(cache=True, parallel=True)
def softmax_kernel(theta, P):
    """Row-wise max-subtracted softmax of theta into P."""
    N, n = theta.shape
    for r in prange(N):
        m = theta[r, 0]
        for i in range(1, n):
            m = max(m, theta[r, i])
        s = 0.0
        for i in range(n):
            v = np.exp(theta[r, i] - m)
            P[r, i] = v
            s += v
        for i in range(n):
            P[r, i] /= s


@njit(cache=True)
def _grad_row(P, e, o, A, kind, eta, S, g):
    """Gradient of ego agent e against opponent o from the policy matrix P,
    written into g. S is an (_SLOTS, n) scratch block owned by the caller."""
    n = A.shape[0]
    p1 = P[e]
    p2 = P[o]

    Ap2 = S[0]
    v1 = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * p2[j]
        Ap2[i] = acc
        v1 += p1[i] * acc

    if kind == KIND_PG:
        for i in range(n):
            g[i] = p1[i] * (Ap2[i] - v1)
        return

    Ap1 = S[1]
    ATp1 = S[2]
    ATp2 = S[3]
    v2 = 0.0
    for i in range(n):
        a = 0.0
        b = 0.0
        c = 0.0
        for j in range(n):
            a += A[i, j] * p1[j]
            b += A[j, i] * p1[j]
            c += A[j, i] * p2[j]
        Ap1[i] = a
        ATp1[i] = b
        ATp2[i] = c
        v2 += p2[i] * a

    # y = p2 * (d v2 / d theta2); second-order term with M = A
    y = S[4]
    sy = 0.0
    ay = 0.0
    for i in range(n):
        y[i] = p2[i] * (p2[i] * (Ap1[i] - v2))
        sy += y[i]
        ay += ATp1[i] * y[i]
    My = S[5]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * y[j]
        My[i] = acc
    for i in range(n):
        g[i] = p1[i] * (Ap2[i] - v1) \
            + eta * (p1[i] * (My[i] - ay - Ap2[i] * sy + v1 * sy))

    # y = p2 * (d v1 / d theta2); second-order term with M = A^T
    sy = 0.0
    ay = 0.0
    for i in range(n):
        y[i] = p2[i] * (p2[i] * (ATp1[i] - v1))
        sy += y[i]
        ay += Ap1[i] * y[i]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += A[j, i] * y[j]
        My[i] = acc
    for i in range(n):
        g[i] += eta * (p1[i] * (My[i] - ay - ATp2[i] * sy + v2 * sy))


@njit(cache=True, parallel=True)
def update_kernel(theta, P, ego, opp, kinds, etas, A, lr, out):
    """One evolution step over all mirrored rows: out[ego[b]] is the updated
    preference row of agent ego[b]. Every agent appears exactly once as ego,
    so `out` is fully written; theta and P are read-only (simultaneous
    updates from pre-update parameters)."""
    N = ego.shape[0]
    n = A.shape[0]
    nchunks = min(256, max(1, N // 512))
    chunk = (N + nchunks - 1) // nchunks
    scratch = np.empty((nchunks, _SLOTS, n), dtype=theta.dtype)
    g_all = np.empty((nchunks, n), dtype=theta.dtype)
    for c in prange(nchunks):
        S = scratch[c]
        g = g_all[c]
        hi = min((c + 1) * chunk, N)
        for b in range(c * chunk, hi):
            e = ego[b]
            _grad_row(P, e, opp[b], A, kinds[e], etas[e], S, g)
            for i in range(n):
                out[e, i] = theta[e, i] + lr * g[i]


def step_kernel(theta, ego, opp, kinds, etas, A, lr, out):
    P = np.empty_like(theta)
    softmax_kernel(theta, P)
    update_kernel(theta, P, ego, opp, kinds, etas, A, lr, out)
