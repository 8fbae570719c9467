"""Command-line entry point.

Subcommands:
    simulate   evolve a population and write summary/snapshot CSVs
    selfplay   two persistent agents learning against each other, over a
               grid of initial conditions
    sweep      repeat simulate across a payoff-parameter range
    bench      time batched vs. per-pair-iterative evolution steps
    check      run the gradient oracle suite and report max deviations

Exit codes: 0 success, 1 configuration/usage error, 2 runtime error,
3 oracle check failure. All randomness is controlled by --seed.
"""

from __future__ import annotations

import argparse
import multiprocessing
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, engine, io, verify
from .games import build_game, load_matrix_csv
from .policy import LOLA, PG, init_population


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p):
    p.add_argument("--config", help="config file (flat TOML subset); flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="parallel sweep cells")


def _add_game(p):
    p.add_argument("--game", choices=["stag_hunt", "hawk_dove", "rps", "custom"])
    p.add_argument("--param", type=float, help="s for stag_hunt, f for hawk_dove")
    p.add_argument("--matrix-file", dest="matrix_file", help="CSV payoff matrix for custom games")


def _add_learning(p):
    p.add_argument("--rule", choices=[PG, LOLA])
    p.add_argument("--mix", help="rule mix, e.g. 'lola=0.86,pg=0.14'")
    p.add_argument("--lr", type=float)
    p.add_argument("--lookahead-eta", dest="lookahead_eta", type=float)
    p.add_argument("--steps", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evobandits", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("simulate", help="evolve a population")
    _add_common(p)
    _add_game(p)
    _add_learning(p)
    p.add_argument("--n", type=int, help="population size (even)")
    p.add_argument("--init-sigma", dest="init_sigma", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--snapshot-agents", dest="snapshot_agents", type=int,
                   help="per-agent snapshot subsample size (0 disables)")

    p = sub.add_parser("selfplay", help="two-agent self-play grid")
    _add_common(p)
    _add_game(p)
    _add_learning(p)

    p = sub.add_parser("sweep", help="simulate across a parameter range")
    _add_common(p)
    _add_game(p)
    _add_learning(p)
    p.add_argument("--n", type=int)
    p.add_argument("--init-sigma", dest="init_sigma", type=float)
    p.add_argument("--param-range", dest="param_range",
                   help="start:stop:step, endpoints inclusive")

    p = sub.add_parser("bench", help="time batched vs iterative steps")
    _add_common(p)
    _add_game(p)
    _add_learning(p)
    p.add_argument("--sizes", help="comma-separated population sizes")
    p.add_argument("--f32", action="store_const", const=True, default=None,
                   help="32-bit floats (bench only)")

    p = sub.add_parser("check", help="gradient oracle suite")
    _add_common(p)
    p.add_argument("--trials", type=int, default=1000)

    return parser


def _resolve(args) -> io.RunConfig:
    file_values = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_values = io.parse_config_text(fh.read())
    overrides = {k: v for k, v in vars(args).items()
                 if k in io.CONFIG_KEYS and v is not None}
    if getattr(args, "mix", None) is not None:
        overrides["mix"] = io.parse_mix_flag(args.mix)
    overrides["mode"] = args.mode
    return io.resolve_config(file_values, overrides)


def _make_game(cfg: io.RunConfig):
    if cfg.game is None:
        raise io.ConfigError("key 'game': a game is required for this mode")
    if cfg.game == "custom":
        if cfg.matrix_file is None:
            raise io.ConfigError("key 'matrix_file': custom games need a matrix file")
        return build_game("custom", matrix=load_matrix_csv(cfg.matrix_file))
    params = {} if cfg.param is None else {"param": cfg.param}
    try:
        return build_game(cfg.game, params)
    except ValueError as e:
        raise io.ConfigError(f"key 'param': {e}")


def _outdir(cfg: io.RunConfig) -> Path:
    if cfg.out is None:
        raise io.ConfigError("key 'out': an output directory is required for this mode")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_resolved_config(cfg, out / "config.resolved.toml")
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: io.RunConfig) -> int:
    game = _make_game(cfg)
    mix = io.resolve_rule_mix(cfg)
    out = _outdir(cfg)
    pop = init_population(cfg.n, game.n, cfg.init_sigma, mix, cfg.seed)
    ecfg = engine.EvolutionConfig(cfg.steps, cfg.lr, cfg.record_every,
                                  snapshot_agents=cfg.snapshot_agents)
    rule_labels = tuple(sorted({PG, LOLA} if pop.is_mixed() else ()))
    with io.summary_sink(out / "summary.csv", game.n, rule_labels) as ssink:
        if cfg.snapshot_agents > 0:
            with io.snapshot_sink(out / "snapshots.csv", game.n) as psink:
                pop, summaries, _ = engine.run_evolution(pop, game, ecfg, ssink, psink)
        else:
            pop, summaries, _ = engine.run_evolution(pop, game, ecfg, ssink)
    mp = summaries[-1].mean_policy
    print(f"simulate: {game.name} N={cfg.n} steps={cfg.steps} "
          f"final mean policy ({', '.join(f'{x:.4f}' for x in mp)})")
    return 0


def _selfplay_starts(game, seed: int):
    """Initial-condition grid: 21 evenly spaced interior points for 2-action
    games, 20 seeded random interior points otherwise."""
    if game.n == 2:
        qs = np.linspace(1 / 22, 21 / 22, 21)
        return [np.array([np.log(q), np.log1p(-q)]) for q in qs]
    rng = np.random.default_rng(seed)
    return [rng.normal(0.0, 0.5, game.n) for _ in range(20)]


def cmd_selfplay(cfg: io.RunConfig) -> int:
    game = _make_game(cfg)
    mix = io.resolve_rule_mix(cfg)
    if len(mix) != 1:
        raise io.ConfigError("key 'mix': selfplay uses a single rule for both agents")
    rule = next(iter(mix))
    out = _outdir(cfg)
    trajectories = []
    for theta0 in _selfplay_starts(game, cfg.seed):
        trajectories.append(dynamics.selfplay_run(
            theta0, theta0.copy(), rule, rule, game, cfg.lr, cfg.steps))
    io.write_selfplay(trajectories, out / "selfplay.csv")
    print(f"selfplay: {game.name} rule={rule.label()} runs={len(trajectories)} "
          f"steps={cfg.steps}")
    return 0


def _sweep_cell(cell_cfg: io.RunConfig):
    game = _make_game(cell_cfg)
    mix = io.resolve_rule_mix(cell_cfg)
    pop = init_population(cell_cfg.n, game.n, cell_cfg.init_sigma, mix, cell_cfg.seed)
    ecfg = engine.EvolutionConfig(cell_cfg.steps, cell_cfg.lr,
                                  record_every=max(1, cell_cfg.steps))
    _, summaries, _ = engine.run_evolution(pop, game, ecfg)
    return {"param": cell_cfg.param, "rule": cell_cfg.rule or "mix",
            "seed": cell_cfg.seed, "steps": cell_cfg.steps,
            "final_mean_policy": summaries[-1].mean_policy}


def cmd_sweep(cfg: io.RunConfig) -> int:
    if cfg.param_range is None:
        raise io.ConfigError("key 'param_range': required for sweep mode")
    values = io.parse_param_range(cfg.param_range)
    out = _outdir(cfg)
    cells = []
    for i, v in enumerate(values):
        cell = io.RunConfig(**{**vars(cfg), "param": v, "seed": cfg.seed + i,
                               "mode": "simulate"})
        cells.append(cell)
    if cfg.threads > 1:
        # spawn (not fork): the compiled kernels hold OpenMP state that is
        # not fork-safe; results are identical either way
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=cfg.threads, mp_context=ctx) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    game_n = rows[0]["final_mean_policy"].size
    io.write_sweep(rows, out / "sweep.csv", game_n)
    print(f"sweep: {cfg.game} over {len(values)} values of the payoff parameter")
    return 0


def _time_step(step_fn, pop, game, ecfg, plans, reps: int) -> float:
    """Median wall-clock duration of reps steps after one warm-up step."""
    times = []
    for r in range(reps + 1):
        t0 = time.perf_counter()
        step_fn(pop, game, ecfg, plans[r])
        dt = time.perf_counter() - t0
        if r > 0:  # discard warm-up
            times.append(dt)
    return float(np.median(times))


def cmd_bench(cfg: io.RunConfig) -> int:
    game = _make_game(cfg)
    if cfg.rule is None:
        cfg.rule = LOLA
    mix = io.resolve_rule_mix(cfg)
    out = _outdir(cfg)
    sizes = io.parse_sizes(cfg.sizes)
    reps = 5
    dtype = "float32" if cfg.f32 else "float64"
    rows = []
    for N in sizes:
        rng = np.random.default_rng(cfg.seed)
        plans = [engine.draw_pairing(N, rng) for _ in range(reps + 1)]
        for mode, step_fn in (("batched", engine.evolution_step),
                              ("iterative", engine.iterative_reference_step)):
            pop = init_population(N, game.n, cfg.init_sigma, mix, cfg.seed)
            if cfg.f32:
                pop.theta = pop.theta.astype(np.float32)
            ecfg = engine.EvolutionConfig(steps=reps + 1, lr=cfg.lr)
            med = _time_step(step_fn, pop, game, ecfg, plans, reps)
            rows.append({"n_agents": N, "mode": mode, "rule": cfg.rule,
                         "median_step_seconds": med, "reps": reps,
                         "threads": cfg.threads, "dtype": dtype})
            print(f"bench: N={N} {mode:<9} median step {med:.4f}s ({dtype})")
    io.write_bench(rows, out / "bench.csv")
    return 0


def cmd_check(cfg: io.RunConfig, trials: int) -> int:
    results = verify.oracle_report(trials=trials, seed=cfg.seed)
    print(verify.format_report(results))
    if all(r.ok for r in results):
        print("check: all identities within tolerance")
        return 0
    print("check: TOLERANCE BREACH")
    return 3


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = _resolve(args)
    except (io.ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        if cfg.mode == "simulate":
            return cmd_simulate(cfg)
        if cfg.mode == "selfplay":
            return cmd_selfplay(cfg)
        if cfg.mode == "sweep":
            return cmd_sweep(cfg)
        if cfg.mode == "bench":
            return cmd_bench(cfg)
        if cfg.mode == "check":
            return cmd_check(cfg, args.trials)
        raise io.ConfigError(f"key 'mode': unknown mode '{cfg.mode}'")
    except io.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime failures -> exit 2 with context
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
