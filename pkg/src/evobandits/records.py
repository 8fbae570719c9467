"""Record types shared by the engine and the CSV writers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SummaryRecord:
    """Per-step aggregate statistics over the whole population."""

    step: int
    mean_policy: np.ndarray       # (n,) mean of all agents' policies
    pure_fractions: np.ndarray    # (n,) fraction within TV 0.1 of each pure strategy
    mean_value: float             # expected payoff of a uniformly random matchup
    rule_means: dict | None = None  # rule label -> mean policy, mixed runs only


@dataclass
class SnapshotRecord:
    """Policies of a fixed subsample of agents at one step."""

    step: int
    agent_ids: np.ndarray
    rules: np.ndarray             # rule label per sampled agent
    probs: np.ndarray             # (k, n) policies
