"""Evolution loop: seeded shuffle into disjoint mirrored pairs, then one
batched learning update of the whole population per step.

Mirroring means every pair (i, j) appears twice in the ego/opponent index
arrays, once per seat, so a single batched kernel updates all N agents. All
gradients in a step are computed from pre-update parameters (simultaneous
updates); each agent's row is written exactly once per step, so the result
does not depend on pair enumeration order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grad, kernels
from .games import GameSpec
from .policy import LOLA, PG, Population, softmax, vertex_fractions
from .records import SnapshotRecord, SummaryRecord


@dataclass
class PairingPlan:
    """A permutation read as N/2 disjoint pairs, plus its mirrored views."""

    perm: np.ndarray   # permutation of [0..N)
    ego: np.ndarray    # == perm
    opp: np.ndarray    # perm with each adjacent pair (2k, 2k+1) swapped

    @classmethod
    def from_perm(cls, perm: np.ndarray) -> "PairingPlan":
        if perm.size % 2 != 0:
            raise ValueError(f"population size must be even, got {perm.size}")
        opp = np.empty_like(perm)
        opp[0::2] = perm[1::2]
        opp[1::2] = perm[0::2]
        return cls(perm, perm, opp)

    @property
    def n_agents(self) -> int:
        return self.perm.size


def draw_pairing(N: int, rng: np.random.Generator) -> PairingPlan:
    """Uniform random pairing via a seeded Fisher-Yates shuffle of [0..N)."""
    if N % 2 != 0:
        raise ValueError(f"population size must be even, got {N}")
    return PairingPlan.from_perm(rng.permutation(N))


@dataclass
class EvolutionConfig:
    steps: int
    lr: float = 1.0
    record_every: int = 1
    seed: int | None = None       # reseeds the pairing stream when set
    snapshot_agents: int = 0      # 0 disables per-agent snapshots

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")


def evolution_step(pop: Population, game: GameSpec, cfg: EvolutionConfig,
                   plan: PairingPlan | None = None) -> Population:
    """Advance the population by one step: pair everyone, batch-update all
    N mirrored rows in one fused kernel call.

    Heterogeneous rules are dispatched per row inside the kernel from the
    agent's own tag; all gradients read pre-update parameters."""
    if plan is None:
        plan = draw_pairing(pop.n_agents, pop.rng)
    A = np.array(game.A, dtype=pop.theta.dtype)
    out = np.empty_like(pop.theta)
    kernels.step_kernel(pop.theta, plan.ego, plan.opp, pop.kinds, pop.etas,
                        A, pop.theta.dtype.type(cfg.lr), out)
    pop.theta = out
    pop.step += 1
    return pop


def iterative_reference_step(pop: Population, game: GameSpec,
                             cfg: EvolutionConfig, plan: PairingPlan) -> Population:
    """Sequential per-pair version of evolution_step: loop over the N/2
    pairs, evaluating each agent's rule through the plain single-pair
    gradient API. Exists solely for equivalence testing and benchmarking;
    given the same PairingPlan it reproduces the batched update (same math,
    different schedule)."""
    A = game.A
    lr = cfg.lr
    theta = pop.theta
    for k in range(pop.n_agents // 2):
        i = int(plan.perm[2 * k])
        j = int(plan.perm[2 * k + 1])
        gi = _pair_grad(pop, i, j, A)
        gj = _pair_grad(pop, j, i, A)
        theta[i] += lr * gi
        theta[j] += lr * gj
    pop.step += 1
    return pop


def _pair_grad(pop: Population, i: int, j: int, A: np.ndarray) -> np.ndarray:
    if pop.kinds[i] == Population.KIND_CODES[PG]:
        return grad.pg_grad(pop.theta[i], softmax(pop.theta[j]), A)
    return grad.lola_grad(pop.theta[i], pop.theta[j], A, float(pop.etas[i]))


def summarize(pop: Population, game: GameSpec) -> SummaryRecord:
    probs = softmax(pop.theta)
    mp = probs.mean(axis=0)
    mv = float(mp @ game.A @ mp)  # expected payoff of a random matchup
    rule_means = None
    if pop.is_mixed():
        rule_means = {}
        for name in (PG, LOLA):
            mask = pop.kinds == Population.KIND_CODES[name]
            if mask.any():
                rule_means[name] = probs[mask].mean(axis=0)
    return SummaryRecord(pop.step, mp, vertex_fractions(probs), mv, rule_means)


def take_snapshot(pop: Population, agent_ids: np.ndarray) -> SnapshotRecord:
    probs = softmax(pop.theta[agent_ids])
    return SnapshotRecord(pop.step, agent_ids, pop.rule_labels()[agent_ids], probs)


def snapshot_ids(N: int, k: int) -> np.ndarray | None:
    """Deterministic evenly-spaced subsample of agent ids (None if disabled)."""
    if k <= 0:
        return None
    if k >= N:
        return np.arange(N)
    return np.floor(np.arange(k) * (N / k)).astype(np.int64)


def run_evolution(pop: Population, game: GameSpec, cfg: EvolutionConfig,
                  summary_sink=None, snapshot_sink=None):
    """Run cfg.steps evolution steps, recording summaries (and optional
    per-agent snapshots) at step 0 and every record_every steps thereafter.

    Returns (pop, summaries, snapshots). Sinks, when given, receive each
    record as it is produced; snapshots are accumulated in memory only when
    no snapshot sink is streaming them out.
    """
    if cfg.seed is not None:
        pop.rng = np.random.default_rng(cfg.seed)
    ids = snapshot_ids(pop.n_agents, cfg.snapshot_agents)
    summaries: list[SummaryRecord] = []
    snapshots: list[SnapshotRecord] = []

    def emit():
        rec = summarize(pop, game)
        summaries.append(rec)
        snap = take_snapshot(pop, ids) if ids is not None else None
        if snap is not None and snapshot_sink is None:
            snapshots.append(snap)
        try:
            if summary_sink is not None:
                summary_sink(rec)
            if snap is not None and snapshot_sink is not None:
                snapshot_sink(snap)
        except OSError as e:
            raise OSError(f"record sink failed at step {pop.step}: {e}") from e

    emit()
    for k in range(cfg.steps):
        evolution_step(pop, game, cfg)
        if pop.step % cfg.record_every == 0 or k == cfg.steps - 1:
            emit()
    return pop, summaries, snapshots
