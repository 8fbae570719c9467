"""Symmetric normal-form games: Stag Hunt, Hawk-Dove, Rock-Paper-Scissors, custom.

A game is stored as the single payoff matrix A seen from the ego seat
(row = own action, column = opponent's action). In a symmetric game the
opponent's payoffs are A.T, so one matrix covers both seats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GAME_KINDS = ("stag_hunt", "hawk_dove", "rps", "custom")

ZERO_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GameSpec:
    name: str
    n: int
    A: np.ndarray
    action_labels: tuple[str, ...]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        A = self.A
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"payoff matrix must be square, got shape {A.shape}")
        if A.shape[0] != self.n:
            raise ValueError(f"matrix is {A.shape[0]}x{A.shape[0]} but n={self.n}")
        if self.n < 2:
            raise ValueError(f"need at least 2 actions, got n={self.n}")
        if not np.all(np.isfinite(A)):
            raise ValueError("payoff matrix contains non-finite entries")
        if len(self.action_labels) != self.n:
            raise ValueError("need one label per action")
        A.flags.writeable = False  # shared read-only across workers


def build_game(kind: str, params: dict | None = None,
               matrix: np.ndarray | None = None) -> GameSpec:
    """Construct a game by kind.

    stag_hunt needs s > 1, hawk_dove needs f < 0, rps takes no parameters,
    custom needs an explicit square matrix.
    """
    params = dict(params or {})
    if kind == "stag_hunt":
        s = _require_param(params, "s", kind)
        if s <= 1:
            raise ValueError(f"stag_hunt requires s > 1, got s={s}")
        A = np.array([[s, 0.0], [1.0, 1.0]])
        return GameSpec("stag_hunt", 2, A, ("Stag", "Hare"), {"s": s})
    if kind == "hawk_dove":
        f = _require_param(params, "f", kind)
        if f >= 0:
            raise ValueError(f"hawk_dove requires f < 0, got f={f}")
        A = np.array([[f, 2.0], [0.0, 1.0]])
        return GameSpec("hawk_dove", 2, A, ("Hawk", "Dove"), {"f": f})
    if kind == "rps":
        A = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
        return GameSpec("rps", 3, A, ("Rock", "Paper", "Scissors"), {})
    if kind == "custom":
        if matrix is None:
            raise ValueError("custom game requires an explicit payoff matrix")
        A = np.array(matrix, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"custom matrix must be square, got shape {A.shape}")
        n = A.shape[0]
        labels = tuple(f"a{i}" for i in range(n))
        return GameSpec("custom", n, A, labels, {})
    raise ValueError(f"unknown game kind {kind!r}, expected one of {GAME_KINDS}")


def _require_param(params: dict, key: str, kind: str) -> float:
    # CLI passes the positional --param under the generic key "param"
    if key in params:
        return float(params[key])
    if "param" in params:
        return float(params["param"])
    raise ValueError(f"{kind} requires parameter {key!r}")


def game_properties(g: GameSpec) -> dict:
    """Zero-sum test and row/column sums of the payoff matrix."""
    asym = np.abs(g.A + g.A.T).max()
    return {
        "is_zero_sum": bool(asym <= ZERO_SUM_TOL),
        "row_sums": g.A.sum(axis=1),
        "col_sums": g.A.sum(axis=0),
    }


def load_matrix_csv(path) -> np.ndarray:
    """Load an n x n payoff matrix from CSV (n rows of n comma-separated floats)."""
    A = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{path}: matrix must be square, got shape {A.shape}")
    return A
