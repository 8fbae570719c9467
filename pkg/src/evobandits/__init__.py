"""Evolutionary-scale simulations of learning agents in symmetric matrix games."""

from .dynamics import (SelfPlayTrajectory, nash_distance, replicator_rhs,
                       replicator_run, selfplay_run)
from .engine import (EvolutionConfig, PairingPlan, draw_pairing, evolution_step,
                     iterative_reference_step, run_evolution)
from .games import GameSpec, build_game, game_properties, load_matrix_csv
from .grad import (cross_grad, cross_hessian, fd_cross_hessian_oracle,
                   fd_grad_oracle, lola_grad, pg_grad, value)
from .policy import (LOLA, PG, Population, RuleTag, init_population, mean_policy,
                     simplex_histogram, softmax, softmax_jacobian)
from .records import SnapshotRecord, SummaryRecord

__version__ = "0.1.0"
