"""Two-agent self-play trajectories and the population-share (replicator)
reference integrator.

The replicator right-hand side doubles as an oracle: the own-value gradient
of a softmax agent equals the replicator update applied to its policy
vector, which ties the learning rules back to classic population dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grad
from .games import GameSpec
from .policy import PG, RuleTag, softmax

SIMPLEX_TOL = 1e-9


@dataclass
class SelfPlayTrajectory:
    rule1: RuleTag
    rule2: RuleTag
    theta1: np.ndarray   # (steps+1, n)
    theta2: np.ndarray
    p1: np.ndarray       # (steps+1, n)
    p2: np.ndarray
    v1: np.ndarray       # (steps+1,)
    v2: np.ndarray

    @property
    def steps(self) -> int:
        return self.theta1.shape[0] - 1


def _rule_grad(rule: RuleTag, theta_own, theta_other, p_other, A):
    if rule.kind == PG:
        return grad.pg_grad(theta_own, p_other, A)
    return grad.lola_grad(theta_own, theta_other, A, rule.eta)


def selfplay_run(theta1, theta2, rule1: RuleTag, rule2: RuleTag, g: GameSpec,
                 lr: float = 1.0, steps: int = 1000) -> SelfPlayTrajectory:
    """Let two persistent agents learn against each other; both update
    simultaneously from the other's pre-update parameters."""
    t1 = np.asarray(theta1, dtype=np.float64).copy()
    t2 = np.asarray(theta2, dtype=np.float64).copy()
    A = g.A
    n = g.n
    th1 = np.empty((steps + 1, n))
    th2 = np.empty((steps + 1, n))
    pr1 = np.empty((steps + 1, n))
    pr2 = np.empty((steps + 1, n))
    val1 = np.empty(steps + 1)
    val2 = np.empty(steps + 1)
    for k in range(steps + 1):
        p1, p2 = softmax(t1), softmax(t2)
        th1[k], th2[k], pr1[k], pr2[k] = t1, t2, p1, p2
        val1[k] = grad.value(p1, p2, A)
        val2[k] = grad.value(p2, p1, A)
        if k == steps:
            break
        g1 = _rule_grad(rule1, t1, t2, p2, A)
        g2 = _rule_grad(rule2, t2, t1, p1, A)
        t1 += lr * g1
        t2 += lr * g2
    return SelfPlayTrajectory(rule1, rule2, th1, th2, pr1, pr2, val1, val2)


def replicator_rhs(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Share growth P * (Q - mean fitness); tangent to the simplex."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    return P * (Q - (P * Q).sum())


@dataclass
class ReplicatorTrajectory:
    states: np.ndarray   # (steps+1, n) population shares
    renorm: np.ndarray   # (steps,) per-step renormalisation factors


def replicator_run(P0, g: GameSpec, dt: float, steps: int) -> ReplicatorTrajectory:
    """Explicit-Euler integration of the share dynamics with self-play
    fitness Q = A P, renormalising each step to cancel Euler drift."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    P = np.asarray(P0, dtype=np.float64).copy()
    if np.any(P < -SIMPLEX_TOL) or abs(P.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError("initial state must lie on the probability simplex")
    states = np.empty((steps + 1, P.size))
    renorm = np.empty(steps)
    states[0] = P
    for k in range(steps):
        Q = g.A @ P
        P = P + dt * replicator_rhs(P, Q)
        if np.any(P < -SIMPLEX_TOL) or np.any(P > 1.0 + SIMPLEX_TOL):
            raise ValueError(
                f"step {k}: Euler step left the simplex (min {P.min():.3g}, "
                f"max {P.max():.3g}); use a smaller dt")
        s = P.sum()
        renorm[k] = s
        P = P / s
        states[k + 1] = P
    return ReplicatorTrajectory(states, renorm)


def nash_distance(p: np.ndarray, target: np.ndarray) -> float:
    """Total-variation distance (1/2) sum |p_i - t_i|, in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if p.shape != target.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {target.shape}")
    return 0.5 * float(np.abs(p - target).sum())
