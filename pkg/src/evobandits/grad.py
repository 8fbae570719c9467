"""Exact value and gradient formulas for softmax policies in symmetric
matrix games, plus finite-difference oracles used to verify them.

Notation for a pair (ego = 1, opponent = 2) with policies p1, p2 and payoff
matrix A: v1 = p1.A.p2, X1 = I - 1 p1^T, X2 = I - 1 p2^T, T = p2 p1^T.

    own gradient      d v1 / d theta1 = p1 * (A p2 - v1)
    cross gradient    d v1 / d theta2 = p2 * (A^T p1 - v1)
    cross curvature   d2 v2 / d theta2 d theta1 = T * (X2 A X1^T)
    look-ahead update = own + eta [T^T * X1 A X2^T] (p2 * X2 A p1)
                            + eta [T^T * X1 A^T X2^T] (p2 * X2 A^T p1)

The row-batched kernels below evaluate these for B independent pairs at
once. They use only broadcasting and fixed-order reductions over the action
axis (never matmul), so a row's result is bit-identical whether it is
computed alone or inside any larger batch -- the batched engine and the
per-pair reference path must agree exactly.
"""

from __future__ import annotations

import numpy as np

from .policy import softmax

FD_STEP_GRAD = 1e-5   # central differences, first order
FD_STEP_HESS = 1e-4   # nested central differences, second order


def _mat_rows(M: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Row-wise M @ p[b] for p of shape (B, n), without BLAS."""
    return (M[None, :, :] * p[:, None, :]).sum(axis=-1)


def _rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a * b).sum(axis=-1)


def values_rows(p1: np.ndarray, p2: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Ego expected payoffs v1[b] = p1[b] . A p2[b]."""
    return _rowdot(p1, _mat_rows(A, p2))


def pg_grad_rows(p1: np.ndarray, p2: np.ndarray, A: np.ndarray) -> np.ndarray:
    """d v1 / d theta1 for B pairs: p1 * (A p2 - v1)."""
    Ap2 = _mat_rows(A, p2)
    v1 = _rowdot(p1, Ap2)
    return p1 * (Ap2 - v1[:, None])


def lola_grad_rows(p1: np.ndarray, p2: np.ndarray, A: np.ndarray,
                   eta: float) -> np.ndarray:
    """Look-ahead gradient for B pairs.

    The two second-order terms (T^T * X1 M X2^T) z are contracted as
    p1 * (M y - (p1^T M y) - (sum y) M p2 + v_M (sum y)) with y = p2 * z,
    which avoids materialising any (B, n, n) product.
    """
    if eta < 0:
        raise ValueError(f"look-ahead rate must be >= 0, got {eta}")
    Ap2 = _mat_rows(A, p2)
    Ap1 = _mat_rows(A, p1)
    ATp1 = _mat_rows(A.T, p1)
    ATp2 = _mat_rows(A.T, p2)
    v1 = _rowdot(p1, Ap2)
    v2 = _rowdot(p2, Ap1)

    g11 = p1 * (Ap2 - v1[:, None])    # d v1 / d theta1
    g22 = p2 * (Ap1 - v2[:, None])    # d v2 / d theta2
    g21 = p2 * (ATp1 - v1[:, None])   # d v1 / d theta2

    y = p2 * g22
    sy = y.sum(axis=-1)
    t2 = p1 * (_mat_rows(A, y) - _rowdot(ATp1, y)[:, None]
               - Ap2 * sy[:, None] + (v1 * sy)[:, None])

    y = p2 * g21
    sy = y.sum(axis=-1)
    t3 = p1 * (_mat_rows(A.T, y) - _rowdot(Ap1, y)[:, None]
               - ATp2 * sy[:, None] + (v2 * sy)[:, None])

    return g11 + eta * t2 + eta * t3


# ---------------------------------------------------------------------------
# single-pair API
# ---------------------------------------------------------------------------

def value(p1: np.ndarray, p2: np.ndarray, A: np.ndarray) -> float:
    """Ego expected payoff p1 . A p2 (the opponent's is value(p2, p1, A))."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != (A.shape[0],) or p2.shape != (A.shape[1],):
        raise ValueError(f"policy/matrix shape mismatch: {p1.shape}, {p2.shape}, {A.shape}")
    return float(values_rows(p1[None, :], p2[None, :], A)[0])


def pg_grad(theta1: np.ndarray, p2: np.ndarray, A: np.ndarray) -> np.ndarray:
    """d v1 / d theta1 at preferences theta1 against opponent policy p2."""
    p1 = softmax(np.asarray(theta1, dtype=np.float64))
    return pg_grad_rows(p1[None, :], np.asarray(p2, dtype=np.float64)[None, :], A)[0]


def cross_grad(p2: np.ndarray, p1: np.ndarray, A: np.ndarray) -> np.ndarray:
    """d v1 / d theta2: p2 * (A^T p1 - v1)."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    ATp1 = A.T @ p1
    v1 = p2 @ ATp1  # p2.A^T.p1 == p1.A.p2
    return p2 * (ATp1 - v1)


def cross_hessian(p1: np.ndarray, p2: np.ndarray, A: np.ndarray) -> np.ndarray:
    """d2 v2 / d theta2 d theta1 (rows = theta2, cols = theta1):
    T * (X2 A X1^T) with T = p2 p1^T.

    The companion d2 v1 / d theta2 d theta1 is this with A^T in place of A.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    n = A.shape[0]
    ones = np.ones(n)
    X1 = np.eye(n) - np.outer(ones, p1)
    X2 = np.eye(n) - np.outer(ones, p2)
    T = np.outer(p2, p1)
    return T * (X2 @ A @ X1.T)


def lola_grad(theta1: np.ndarray, theta2: np.ndarray, A: np.ndarray,
              eta: float) -> np.ndarray:
    """Look-ahead gradient of the ego agent's value, anticipating one naive
    opponent learning step of rate eta. eta = 0 reduces to pg_grad."""
    p1 = softmax(np.asarray(theta1, dtype=np.float64))
    p2 = softmax(np.asarray(theta2, dtype=np.float64))
    return lola_grad_rows(p1[None, :], p2[None, :], A, eta)[0]


# ---------------------------------------------------------------------------
# finite-difference oracles (verification only; independent of the formulas)
# ---------------------------------------------------------------------------

def fd_grad_oracle(f, theta: np.ndarray, step: float = FD_STEP_GRAD) -> np.ndarray:
    """Central-difference gradient of a scalar function of theta."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    theta = np.asarray(theta, dtype=np.float64)
    g = np.zeros_like(theta)
    for i in range(theta.size):
        hi = theta.copy()
        lo = theta.copy()
        hi[i] += step
        lo[i] -= step
        g[i] = (f(hi) - f(lo)) / (2.0 * step)
    return g


def fd_cross_hessian_oracle(v, theta1: np.ndarray, theta2: np.ndarray,
                            step: float = FD_STEP_HESS) -> np.ndarray:
    """Nested central differences of v(theta1, theta2): entry [i, j] is
    d2 v / d theta2_i d theta1_j, matching the cross_hessian layout."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    theta1 = np.asarray(theta1, dtype=np.float64)
    theta2 = np.asarray(theta2, dtype=np.float64)
    n1, n2 = theta1.size, theta2.size
    H = np.zeros((n2, n1))
    for j in range(n1):
        hi = theta1.copy()
        lo = theta1.copy()
        hi[j] += step
        lo[j] -= step
        g_hi = fd_grad_oracle(lambda t2: v(hi, t2), theta2, step)
        g_lo = fd_grad_oracle(lambda t2: v(lo, t2), theta2, step)
        H[:, j] = (g_hi - g_lo) / (2.0 * step)
    return H
