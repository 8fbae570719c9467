"""Oracle suite: checks every analytical gradient identity against
independent finite-difference and algebraic references.

Used by the `check` CLI subcommand and by the acceptance tests. Each check
reports the maximum absolute deviation over randomized preference pairs
(entries uniform in [-5, 5]) together with its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grad
from .dynamics import replicator_rhs
from .games import build_game
from .policy import softmax

THETA_RANGE = 5.0

TOL_FD_GRAD = 1e-5
TOL_FD_HESS = 1e-5
TOL_TAYLOR = 1e-5
TOL_FACTORIZATION = 1e-12
TOL_REPLICATOR = 1e-12


@dataclass
class CheckResult:
    game: str
    identity: str
    max_dev: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_dev <= self.tol


def default_games():
    return [build_game("stag_hunt", {"s": 1.8}),
            build_game("hawk_dove", {"f": -2.0}),
            build_game("rps")]


def taylor_assembled_lola(theta1, theta2, A, eta,
                          step_grad=grad.FD_STEP_GRAD,
                          step_hess=grad.FD_STEP_HESS) -> np.ndarray:
    """Assemble the look-ahead gradient entirely from finite differences:
    own gradient plus eta times both transposed cross-curvature terms."""
    def v1(t1, t2):
        return grad.value(softmax(t1), softmax(t2), A)

    def v2(t1, t2):
        return grad.value(softmax(t2), softmax(t1), A)

    g1 = grad.fd_grad_oracle(lambda t: v1(t, theta2), theta1, step_grad)
    g22 = grad.fd_grad_oracle(lambda t: v2(theta1, t), theta2, step_grad)
    g21 = grad.fd_grad_oracle(lambda t: v1(theta1, t), theta2, step_grad)
    H1 = grad.fd_cross_hessian_oracle(v1, theta1, theta2, step_hess)
    H2 = grad.fd_cross_hessian_oracle(v2, theta1, theta2, step_hess)
    return g1 + eta * (H1.T @ g22) + eta * (H2.T @ g21)


def unfactored_cross_hessian(p1, p2, A) -> np.ndarray:
    """The cross-curvature without the Hadamard factorization:
    (diag(p2) - p2 p2^T) A (diag(p1) - p1 p1^T)."""
    J1 = np.diag(p1) - np.outer(p1, p1)
    J2 = np.diag(p2) - np.outer(p2, p2)
    return J2 @ A @ J1


def oracle_report(games=None, trials: int = 1000, seed: int = 0,
                  eta: float = 1.0) -> list[CheckResult]:
    """Run every identity check `trials` times per game and report the
    maximum deviations."""
    if games is None:
        games = default_games()
    rng = np.random.default_rng(seed)
    results = []
    for g in games:
        A = g.A
        n = g.n
        dev = {"pg_vs_fd": 0.0, "lola_vs_taylor": 0.0, "hessian_vs_fd": 0.0,
               "factorization": 0.0, "replicator_identity": 0.0}

        def v2_fn(t1, t2):
            return grad.value(softmax(t2), softmax(t1), A)

        for _ in range(trials):
            theta1 = rng.uniform(-THETA_RANGE, THETA_RANGE, n)
            theta2 = rng.uniform(-THETA_RANGE, THETA_RANGE, n)
            p1, p2 = softmax(theta1), softmax(theta2)

            g_pg = grad.pg_grad(theta1, p2, A)
            g_fd = grad.fd_grad_oracle(
                lambda t: grad.value(softmax(t), p2, A), theta1)
            dev["pg_vs_fd"] = max(dev["pg_vs_fd"], np.abs(g_pg - g_fd).max())

            g_lola = grad.lola_grad(theta1, theta2, A, eta)
            g_tay = taylor_assembled_lola(theta1, theta2, A, eta)
            dev["lola_vs_taylor"] = max(dev["lola_vs_taylor"],
                                        np.abs(g_lola - g_tay).max())

            H = grad.cross_hessian(p1, p2, A)
            H_fd = grad.fd_cross_hessian_oracle(v2_fn, theta1, theta2)
            dev["hessian_vs_fd"] = max(dev["hessian_vs_fd"],
                                       np.abs(H - H_fd).max())

            H_raw = unfactored_cross_hessian(p1, p2, A)
            dev["factorization"] = max(dev["factorization"],
                                       np.abs(H - H_raw).max())

            rhs = replicator_rhs(p1, A @ p2)
            dev["replicator_identity"] = max(dev["replicator_identity"],
                                             np.abs(g_pg - rhs).max())

        tols = {"pg_vs_fd": TOL_FD_GRAD, "lola_vs_taylor": TOL_TAYLOR,
                "hessian_vs_fd": TOL_FD_HESS, "factorization": TOL_FACTORIZATION,
                "replicator_identity": TOL_REPLICATOR}
        for name, d in dev.items():
            results.append(CheckResult(g.name, name, float(d), tols[name]))
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = [f"{'game':<12} {'identity':<22} {'max deviation':>14} {'tolerance':>10}  status"]
    for r in results:
        status = "ok" if r.ok else "FAIL"
        lines.append(f"{r.game:<12} {r.identity:<22} {r.max_dev:>14.3e} "
                     f"{r.tol:>10.0e}  {status}")
    return "\n".join(lines)
