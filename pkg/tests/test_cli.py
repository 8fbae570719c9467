import subprocess
import sys

from evobandits.cli import run_cli
from evobandits.io import read_snapshots, read_summary


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run1"
    rc = run_cli(["simulate", "--game", "stag_hunt", "--param", "1.8",
                  "--rule", "lola", "--n", "50", "--steps", "20",
                  "--record-every", "5", "--seed", "42", "--out", str(out)])
    assert rc == 0
    assert (out / "config.resolved.toml").exists()
    summaries = read_summary(out / "summary.csv")
    assert [r.step for r in summaries] == [0, 5, 10, 15, 20]
    snaps = read_snapshots(out / "snapshots.csv")
    assert snaps[0].probs.shape == (50, 2)


def test_simulate_deterministic_bytes(tmp_path):
    args = ["simulate", "--game", "hawk_dove", "--param", "-2", "--rule", "pg",
            "--n", "40", "--steps", "10", "--seed", "7"]
    rc1 = run_cli(args + ["--out", str(tmp_path / "a")])
    rc2 = run_cli(args + ["--out", str(tmp_path / "b")])
    rc3 = run_cli(args + ["--out", str(tmp_path / "c"), "--threads", "4"])
    assert rc1 == rc2 == rc3 == 0
    a = (tmp_path / "a/summary.csv").read_bytes()
    assert a == (tmp_path / "b/summary.csv").read_bytes()
    assert a == (tmp_path / "c/summary.csv").read_bytes()


def test_simulate_from_config_file(tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text('game = "stag_hunt"\nparam = 1.8\nrule = "pg"\n'
                       'n = 20\nsteps = 5\nseed = 1\n')
    out = tmp_path / "run"
    rc = run_cli(["simulate", "--config", str(cfgfile), "--steps", "8",
                  "--out", str(out)])
    assert rc == 0
    summaries = read_summary(out / "summary.csv")
    assert summaries[-1].step == 8  # flag overrides file


def test_simulate_mixed_rule_columns(tmp_path):
    out = tmp_path / "mix"
    rc = run_cli(["simulate", "--game", "stag_hunt", "--param", "1.8",
                  "--mix", "lola=0.5,pg=0.5", "--n", "20", "--steps", "4",
                  "--seed", "2", "--out", str(out)])
    assert rc == 0
    header = (out / "summary.csv").read_text().splitlines()[0]
    assert "lola_mean_p_0" in header and "pg_mean_p_0" in header


def test_custom_game_matrix_file(tmp_path):
    mfile = tmp_path / "m.csv"
    mfile.write_text("0,2\n2,0\n")
    out = tmp_path / "run"
    rc = run_cli(["simulate", "--game", "custom", "--matrix-file", str(mfile),
                  "--rule", "pg", "--n", "10", "--steps", "3", "--seed", "0",
                  "--out", str(out)])
    assert rc == 0


def test_selfplay_grid(tmp_path):
    out = tmp_path / "sp"
    rc = run_cli(["selfplay", "--game", "hawk_dove", "--param", "-2",
                  "--rule", "pg", "--steps", "50", "--seed", "0",
                  "--out", str(out)])
    assert rc == 0
    lines = (out / "selfplay.csv").read_text().splitlines()
    assert lines[0] == "run,step,p1_0,p1_1,p2_0,p2_1,v1,v2"
    assert len(lines) == 1 + 21 * 51  # 21 starts, steps+1 records each


def test_sweep_rows_and_thread_determinism(tmp_path):
    # leading space (or --param-range=...) keeps argparse from reading the
    # negative start as a flag
    base = ["sweep", "--game", "hawk_dove", "--param-range", " -3:-1:1",
            "--rule", "pg", "--n", "30", "--steps", "10", "--seed", "3"]
    rc1 = run_cli(base + ["--out", str(tmp_path / "s1")])
    rc2 = run_cli(base + ["--out", str(tmp_path / "s2"), "--threads", "2"])
    assert rc1 == rc2 == 0
    s1 = (tmp_path / "s1/sweep.csv").read_bytes()
    assert s1 == (tmp_path / "s2/sweep.csv").read_bytes()
    lines = s1.decode().splitlines()
    assert lines[0].startswith("param,rule,seed,steps,final_mean_p_0")
    assert len(lines) == 4  # header + f in {-3,-2,-1}


def test_bench_writes_rows(tmp_path):
    out = tmp_path / "bench"
    rc = run_cli(["bench", "--game", "rps", "--rule", "lola", "--sizes", "10,20",
                  "--steps", "2", "--seed", "0", "--out", str(out)])
    assert rc == 0
    lines = (out / "bench.csv").read_text().splitlines()
    assert lines[0] == "n_agents,mode,rule,median_step_seconds,reps,threads,dtype"
    assert len(lines) == 5  # 2 sizes x (batched, iterative)
    assert "float64" in lines[1]


def test_bench_f32(tmp_path):
    out = tmp_path / "bench32"
    rc = run_cli(["bench", "--game", "rps", "--sizes", "10", "--f32",
                  "--seed", "0", "--out", str(out)])
    assert rc == 0
    assert "float32" in (out / "bench.csv").read_text()


def test_check_passes():
    rc = run_cli(["check", "--trials", "3", "--seed", "0"])
    assert rc == 0


def test_exit_code_usage_error():
    assert run_cli(["frobnicate"]) == 1
    assert run_cli(["simulate", "--bogus-flag", "1"]) == 1


def test_exit_code_config_error(tmp_path):
    # parameter outside its domain
    rc = run_cli(["simulate", "--game", "stag_hunt", "--param", "0.5",
                  "--rule", "pg", "--n", "10", "--steps", "1",
                  "--out", str(tmp_path / "x")])
    assert rc == 1
    # missing required game
    rc = run_cli(["simulate", "--rule", "pg", "--n", "10", "--steps", "1",
                  "--out", str(tmp_path / "y")])
    assert rc == 1
    # odd population size
    rc = run_cli(["simulate", "--game", "rps", "--rule", "pg", "--n", "11",
                  "--steps", "1", "--out", str(tmp_path / "z")])
    assert rc == 1
    # bad config file
    badcfg = tmp_path / "bad.toml"
    badcfg.write_text("bogus = 1\n")
    rc = run_cli(["simulate", "--config", str(badcfg), "--out", str(tmp_path / "w")])
    assert rc == 1


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "evobandits.cli", "check",
                           "--trials", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "replicator_identity" in proc.stdout
