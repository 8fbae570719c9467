import numpy as np
import pytest

from evobandits.engine import (EvolutionConfig, PairingPlan, draw_pairing,
                               evolution_step, iterative_reference_step,
                               run_evolution, snapshot_ids, summarize)
from evobandits.games import build_game
from evobandits.policy import LOLA, PG, Population, RuleTag, init_population

SH = build_game("stag_hunt", {"s": 1.8})
RPS = build_game("rps")

MIX5050 = {RuleTag(PG): 0.5, RuleTag(LOLA, 1.0): 0.5}


def make_pop(theta, kinds, etas=None, seed=0):
    theta = np.asarray(theta, dtype=np.float64)
    kinds = np.asarray(kinds, dtype=np.uint8)
    if etas is None:
        etas = np.zeros(len(kinds))
    return Population(theta, kinds, np.asarray(etas, dtype=np.float64),
                      seed, np.random.default_rng(seed))


def test_draw_pairing_minimal():
    plan = draw_pairing(2, np.random.default_rng(0))
    assert sorted(plan.perm.tolist()) == [0, 1]
    assert plan.ego.tolist() in ([0, 1], [1, 0])
    assert plan.opp.tolist() == plan.ego[::-1].tolist()


def test_draw_pairing_deterministic():
    a = draw_pairing(6, np.random.default_rng(3))
    b = draw_pairing(6, np.random.default_rng(3))
    assert np.array_equal(a.perm, b.perm)


def test_draw_pairing_bijection_and_involution():
    plan = draw_pairing(10_000, np.random.default_rng(1))
    assert np.array_equal(np.sort(plan.ego), np.arange(10_000))
    assert np.array_equal(np.sort(plan.opp), np.arange(10_000))
    # the opponent relation is symmetric: partner[partner[a]] == a
    partner = np.empty(10_000, dtype=np.int64)
    partner[plan.ego] = plan.opp
    assert np.array_equal(partner[partner], np.arange(10_000))
    assert np.all(partner != np.arange(10_000))


def test_draw_pairing_rejects_odd():
    with pytest.raises(ValueError, match="even"):
        draw_pairing(7, np.random.default_rng(0))
    with pytest.raises(ValueError, match="even"):
        PairingPlan.from_perm(np.arange(5))


def test_config_validation():
    with pytest.raises(ValueError, match="steps"):
        EvolutionConfig(steps=-1)
    with pytest.raises(ValueError, match="learning rate"):
        EvolutionConfig(steps=1, lr=0.0)
    with pytest.raises(ValueError, match="record_every"):
        EvolutionConfig(steps=1, record_every=0)


def test_two_agent_pg_step_matches_hand_value():
    pop = make_pop(np.zeros((2, 2)), [0, 0])
    evolution_step(pop, SH, EvolutionConfig(steps=1, lr=1.0))
    expected = np.array([[-0.025, 0.025], [-0.025, 0.025]])
    assert np.allclose(pop.theta, expected, atol=1e-15)
    assert pop.step == 1


def test_lola_eta_zero_equals_pg_step():
    rng = np.random.default_rng(2)
    theta = rng.normal(0, 1, (8, 2))
    pop_pg = make_pop(theta.copy(), np.zeros(8))
    pop_l0 = make_pop(theta.copy(), np.ones(8), np.zeros(8))
    plan = draw_pairing(8, np.random.default_rng(5))
    cfg = EvolutionConfig(steps=1)
    evolution_step(pop_pg, SH, cfg, plan)
    evolution_step(pop_l0, SH, cfg, plan)
    assert np.array_equal(pop_pg.theta, pop_l0.theta)


def test_preference_sum_conserved():
    pop = init_population(200, 3, 0.8, MIX5050, seed=3)
    sums0 = pop.theta.sum(axis=1).copy()
    cfg = EvolutionConfig(steps=500, lr=1.0, record_every=500)
    run_evolution(pop, RPS, cfg)
    assert np.abs(pop.theta.sum(axis=1) - sums0).max() < 1e-9


def test_pair_order_independence():
    # same pairing, pairs enumerated in a different order -> identical update
    pop1 = init_population(100, 2, 0.5, MIX5050, seed=4)
    pop2 = pop1.copy()
    plan = draw_pairing(100, np.random.default_rng(0))
    perm2 = np.concatenate([plan.perm[50:], plan.perm[:50]])  # swap pair blocks
    plan2 = PairingPlan.from_perm(perm2)
    cfg = EvolutionConfig(steps=1)
    evolution_step(pop1, SH, cfg, plan)
    evolution_step(pop2, SH, cfg, plan2)
    assert pop1.theta.tobytes() == pop2.theta.tobytes()


def test_batched_matches_iterative_on_same_plans():
    pop_b = init_population(200, 3, 0.5, MIX5050, seed=6)
    pop_i = pop_b.copy()
    rng = np.random.default_rng(9)
    cfg = EvolutionConfig(steps=1)
    for _ in range(20):
        plan = draw_pairing(200, rng)
        evolution_step(pop_b, RPS, cfg, plan)
        iterative_reference_step(pop_i, RPS, cfg, plan)
    assert np.abs(pop_b.theta - pop_i.theta).max() <= 1e-12


def test_step_determinism_same_seed():
    a = init_population(300, 2, 0.5, MIX5050, seed=7)
    b = init_population(300, 2, 0.5, MIX5050, seed=7)
    cfg = EvolutionConfig(steps=50)
    run_evolution(a, SH, cfg)
    run_evolution(b, SH, cfg)
    assert a.theta.tobytes() == b.theta.tobytes()


def test_run_evolution_zero_steps():
    pop = init_population(10, 2, 0.5, {RuleTag(PG): 1.0}, seed=1)
    theta0 = pop.theta.copy()
    pop, summaries, snaps = run_evolution(pop, SH, EvolutionConfig(steps=0))
    assert np.array_equal(pop.theta, theta0)
    assert len(summaries) == 1
    assert summaries[0].step == 0


def test_run_evolution_record_cadence():
    pop = init_population(10, 2, 0.5, {RuleTag(PG): 1.0}, seed=1)
    _, summaries, _ = run_evolution(pop, SH, EvolutionConfig(steps=100, record_every=10))
    assert [r.step for r in summaries] == list(range(0, 101, 10))
    # a non-divisible cadence still records the final step
    pop = init_population(10, 2, 0.5, {RuleTag(PG): 1.0}, seed=1)
    _, summaries, _ = run_evolution(pop, SH, EvolutionConfig(steps=25, record_every=10))
    assert [r.step for r in summaries] == [0, 10, 20, 25]


def test_summary_contents():
    pop = init_population(100, 2, 0.0, MIX5050, seed=2)
    rec = summarize(pop, SH)
    assert np.allclose(rec.mean_policy, [0.5, 0.5])
    assert np.allclose(rec.pure_fractions, [0.0, 0.0])
    assert rec.mean_value == pytest.approx(0.95)
    assert set(rec.rule_means) == {PG, LOLA}
    pop_single = init_population(10, 2, 0.0, {RuleTag(PG): 1.0}, seed=2)
    assert summarize(pop_single, SH).rule_means is None


def test_snapshot_ids():
    assert snapshot_ids(10, 0) is None
    assert np.array_equal(snapshot_ids(10, 20), np.arange(10))
    ids = snapshot_ids(1000, 100)
    assert ids.size == 100
    assert np.unique(ids).size == 100
    assert ids[0] == 0 and ids[-1] < 1000


def test_snapshot_records():
    pop = init_population(50, 2, 0.5, MIX5050, seed=8)
    cfg = EvolutionConfig(steps=4, record_every=2, snapshot_agents=10)
    _, summaries, snaps = run_evolution(pop, SH, cfg)
    assert len(snaps) == len(summaries) == 3
    assert snaps[0].probs.shape == (10, 2)
    assert set(snaps[0].rules) <= {PG, LOLA}


def test_engine_reseed_overrides_pairing_stream():
    a = init_population(100, 2, 0.5, {RuleTag(PG): 1.0}, seed=1)
    b = init_population(100, 2, 0.5, {RuleTag(PG): 1.0}, seed=1)
    run_evolution(a, SH, EvolutionConfig(steps=20, seed=123))
    run_evolution(b, SH, EvolutionConfig(steps=20, seed=123))
    c = init_population(100, 2, 0.5, {RuleTag(PG): 1.0}, seed=1)
    run_evolution(c, SH, EvolutionConfig(steps=20, seed=456))
    assert a.theta.tobytes() == b.theta.tobytes()
    assert a.theta.tobytes() != c.theta.tobytes()


def test_float32_mode_runs():
    pop = init_population(64, 3, 0.5, {RuleTag(LOLA, 1.0): 1.0}, seed=3)
    pop.theta = pop.theta.astype(np.float32)
    evolution_step(pop, RPS, EvolutionConfig(steps=1))
    assert pop.theta.dtype == np.float32
    assert np.all(np.isfinite(pop.theta))
