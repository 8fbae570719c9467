"""Softmax bandit policies and the population container.

Each agent is a preference vector theta in R^n; its policy is softmax(theta).
A population is an N x n matrix of preferences plus a learning-rule tag per
agent and a seeded RNG stream that drives all pairing randomness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PG = "pg"
LOLA = "lola"

MIX_SUM_TOL = 1e-9


@dataclass(frozen=True)
class RuleTag:
    """Learning rule of one agent: plain policy gradient, or gradient with a
    one-step look-ahead on the opponent's own learning (rate eta)."""

    kind: str
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in (PG, LOLA):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == LOLA:
            if self.eta is None:
                raise ValueError("lola rule requires a look-ahead rate eta")
            if self.eta < 0:
                raise ValueError(f"look-ahead rate must be >= 0, got {self.eta}")
        elif self.eta is not None:
            raise ValueError("pg rule takes no look-ahead rate")

    def label(self) -> str:
        return self.kind


def softmax(theta: np.ndarray) -> np.ndarray:
    """Map preferences to probabilities, row-wise for 2-D input.

    Max-subtraction keeps exp() finite for any finite theta; probabilities
    approach but never reach 0/1, so no clamping is applied anywhere.
    """
    theta = np.asarray(theta)
    if not np.all(np.isfinite(theta)):
        raise ValueError("softmax input must be finite")
    shifted = theta - theta.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_jacobian(p: np.ndarray) -> np.ndarray:
    """d softmax / d theta at probabilities p: diag(p) - p p^T (symmetric,
    rows sum to zero)."""
    p = np.asarray(p, dtype=np.float64)
    return np.diag(p) - np.outer(p, p)


@dataclass
class Population:
    """N agents: preference rows, per-agent rule tags (as parallel arrays),
    and the RNG stream used for pairing."""

    theta: np.ndarray        # (N, n) preferences
    kinds: np.ndarray        # (N,) uint8: 0 = pg, 1 = lola
    etas: np.ndarray         # (N,) look-ahead rates; 0 where kind is pg
    seed: int
    rng: np.random.Generator
    step: int = 0

    KIND_CODES = {PG: 0, LOLA: 1}
    KIND_NAMES = {0: PG, 1: LOLA}

    @property
    def n_agents(self) -> int:
        return self.theta.shape[0]

    @property
    def n_actions(self) -> int:
        return self.theta.shape[1]

    def rule_tag(self, i: int) -> RuleTag:
        if self.kinds[i] == 0:
            return RuleTag(PG)
        return RuleTag(LOLA, float(self.etas[i]))

    def rule_labels(self) -> np.ndarray:
        names = np.array([PG, LOLA])
        return names[self.kinds]

    def policies(self) -> np.ndarray:
        return softmax(self.theta)

    def is_mixed(self) -> bool:
        return len(np.unique(self.kinds)) > 1

    def copy(self) -> "Population":
        return Population(self.theta.copy(), self.kinds.copy(), self.etas.copy(),
                          self.seed, _clone_rng(self.rng), self.step)


def _clone_rng(rng: np.random.Generator) -> np.random.Generator:
    clone = np.random.Generator(type(rng.bit_generator)())
    clone.bit_generator.state = rng.bit_generator.state
    return clone


def init_population(N: int, n: int, sigma: float, rule_mix: dict, seed: int) -> Population:
    """Draw N preference rows i.i.d. from Normal(0, sigma^2) and assign rule
    tags in the proportions of `rule_mix`.

    rule_mix maps RuleTag -> fraction; fractions must sum to 1. Counts are
    rounded half-up, with the rounding remainder absorbed by the first-listed
    rule, then shuffled. Everything is deterministic in (N, n, sigma,
    rule_mix, seed): theta is drawn first, then the tag shuffle.
    """
    if N % 2 != 0 or N < 2:
        raise ValueError(f"population size must be even and >= 2, got {N}")
    if sigma < 0:
        raise ValueError(f"init std-dev must be >= 0, got {sigma}")
    tags = list(rule_mix.keys())
    if not tags:
        raise ValueError("rule_mix must name at least one rule")
    fractions = np.array([float(rule_mix[t]) for t in tags])
    if abs(fractions.sum() - 1.0) > MIX_SUM_TOL:
        raise ValueError(f"rule_mix fractions sum to {fractions.sum()}, expected 1")
    if np.any(fractions < 0):
        raise ValueError("rule_mix fractions must be >= 0")

    counts = np.floor(fractions * N + 0.5).astype(int)  # half-up
    counts[0] += N - counts.sum()
    if counts[0] < 0:
        raise ValueError("rule_mix rounding left a negative count for the first rule")

    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, sigma, size=(N, n))

    kinds = np.empty(N, dtype=np.uint8)
    etas = np.zeros(N, dtype=np.float64)
    pos = 0
    for tag, c in zip(tags, counts):
        kinds[pos:pos + c] = Population.KIND_CODES[tag.kind]
        if tag.kind == LOLA:
            etas[pos:pos + c] = tag.eta
        pos += c
    perm = rng.permutation(N)
    kinds = kinds[perm]
    etas = etas[perm]

    return Population(theta, kinds, etas, seed, rng)


def mean_policy(pop: Population) -> np.ndarray:
    """Arithmetic mean of all agents' policies (fixed summation order, so the
    result is independent of any worker count)."""
    return pop.policies().mean(axis=0)


def vertex_fractions(probs: np.ndarray, tv_tol: float = 0.1) -> np.ndarray:
    """Fraction of agents within total-variation distance tv_tol of each pure
    strategy. For a point mass e_k, TV(p, e_k) = 1 - p_k."""
    return (probs >= 1.0 - tv_tol).mean(axis=0)


def simplex_histogram(pop: Population, bins: int) -> np.ndarray:
    """Histogram of agent policies over the simplex.

    n=2: `bins` equal-width cells over P(action 0) in [0, 1].
    n=3: the triangle subdivided into bins^2 up/down sub-triangles, returned
    as a flat count vector (see tri_cell_index for the cell layout).
    Counts always sum to N.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    probs = pop.policies()
    n = pop.n_actions
    if n == 2:
        counts, _ = np.histogram(probs[:, 0], bins=bins, range=(0.0, 1.0))
        return counts
    if n == 3:
        cells = tri_cell_index(probs, bins)
        return np.bincount(cells, minlength=bins * bins)
    raise ValueError(f"simplex histogram supports n in (2, 3), got n={n} "
                     "(export raw snapshots instead)")


def tri_cell_index(probs: np.ndarray, bins: int) -> np.ndarray:
    """Map points of the 2-simplex to cells of its bins^2 triangular grid.

    Scaling by `bins` and flooring each barycentric coordinate leaves a
    residual r = bins - floor sum of 1 (upward sub-triangle) or 2 (downward).
    Cells are numbered row by row in floor(p_2), alternating up/down, which
    yields exactly bins^2 cells.
    """
    f = np.floor(probs * bins).astype(np.int64)
    np.clip(f, 0, bins - 1, out=f)  # p_i == 1.0 lands in the last cell
    # points on a lattice vertex floor to sum == bins; nudge them into the
    # adjacent up triangle along their largest coordinate
    over = f.sum(axis=1) == bins
    if np.any(over):
        rows = np.nonzero(over)[0]
        f[rows, f[rows].argmax(axis=1)] -= 1
    r = bins - f.sum(axis=1)  # 1 = up, 2 = down
    j = f[:, 2]
    row_start = j * (2 * bins - j)  # sum of row lengths 2(bins-j')-1 for j' < j
    return row_start + 2 * f[:, 1] + (r - 1)
