import numpy as np
import pytest

from plotkit import PlotJob, SchemaError, render
from plotkit.bins import (density_timeline, project_barycentric, tri_cell_index,
                          tri_cell_vertices, tri_density)
from plotkit.cli import run_cli


# ---------------------------------------------------------------------------
# synthetic CSVs in the simulator's documented schemas
# ---------------------------------------------------------------------------

def write_snapshots2(path, steps=(0, 50, 100), k=200, drift=0.004):
    rng = np.random.default_rng(1)
    with open(path, "w") as fh:
        fh.write("step,agent_id,rule,p_0,p_1\n")
        for s in steps:
            center = min(0.5 + drift * s, 0.98)
            spread = 0.05 / (1.0 + 0.02 * s)  # the branch tightens as it saturates
            p0 = np.clip(rng.normal(center, spread, k), 0.01, 0.99)
            for a in range(k):
                fh.write(f"{s},{a},pg,{p0[a]:.6f},{1 - p0[a]:.6f}\n")


def write_snapshots3(path, steps=(0, 10), k=150):
    rng = np.random.default_rng(2)
    with open(path, "w") as fh:
        fh.write("step,agent_id,rule,p_0,p_1,p_2\n")
        for s in steps:
            probs = rng.dirichlet((2.0, 2.0, 2.0), size=k)
            for a in range(k):
                fh.write(f"{s},{a},lola," + ",".join(f"{x:.6f}" for x in probs[a]) + "\n")


def write_selfplay(path, n=2, runs=3, steps=30):
    cols = [f"p1_{i}" for i in range(n)] + [f"p2_{i}" for i in range(n)]
    with open(path, "w") as fh:
        fh.write("run,step," + ",".join(cols) + ",v1,v2\n")
        for r in range(runs):
            q0 = (r + 1) / (runs + 1)
            for s in range(steps + 1):
                q = min(0.99, q0 + 0.01 * s)
                if n == 2:
                    p = [q, 1 - q, q, 1 - q]
                else:
                    p = [q / 2, q / 2, 1 - q] * 2
                fh.write(f"{r},{s}," + ",".join(f"{x:.6f}" for x in p) + ",0.5,0.5\n")


def write_sweep(path, rule="pg"):
    with open(path, "w") as fh:
        fh.write("param,rule,seed,steps,final_mean_p_0,final_mean_p_1\n")
        for k in range(5):
            f = -4 + k
            p = 1 / (1 - f)
            fh.write(f"{f:.6f},{rule},3,100,{p:.6f},{1 - p:.6f}\n")


def write_bench(path):
    with open(path, "w") as fh:
        fh.write("n_agents,mode,rule,median_step_seconds,reps,threads,dtype\n")
        for N in (1000, 10000, 100000):
            fh.write(f"{N},batched,lola,{N * 1e-7:.6f},5,2,float64\n")
            fh.write(f"{N},iterative,lola,{N * 5e-5:.6f},5,2,float64\n")


# ---------------------------------------------------------------------------

def test_density_timeline_row_sums(tmp_path):
    snap = tmp_path / "snapshots.csv"
    write_snapshots2(snap, k=123)
    out = tmp_path / "d.png"
    res = render(PlotJob("density", [str(snap)], str(out), bins=40))
    assert out.exists() and out.stat().st_size > 0
    assert res.data["grid"].shape == (3, 40)
    assert np.all(res.data["grid"].sum(axis=1) == 123)


def test_density_collapse_detectable(tmp_path):
    # a run drifting to P(action0) ~ 1 concentrates the final row's mass
    snap = tmp_path / "snapshots.csv"
    write_snapshots2(snap, steps=(0, 500, 1000), drift=0.004)
    res = render(PlotJob("density", [str(snap)], str(tmp_path / "d.png"), bins=10))
    final = res.data["grid"][-1]
    assert final[-1] / final.sum() > 0.9


def test_density_with_mean_track(tmp_path):
    snap = tmp_path / "snapshots.csv"
    write_snapshots2(snap)
    summ = tmp_path / "summary.csv"
    summ.write_text("step,mean_p_0,mean_p_1,frac_pure_0,frac_pure_1,mean_value\n"
                    "0,0.500000,0.500000,0.0,0.0,0.95\n"
                    "100,0.900000,0.100000,0.5,0.0,1.2\n")
    out = tmp_path / "d2.png"
    res = render(PlotJob("density", [str(snap), str(summ)], str(out)))
    assert out.exists()


def test_density_rejects_three_actions(tmp_path):
    snap = tmp_path / "snap3.csv"
    write_snapshots3(snap)
    with pytest.raises(SchemaError, match="2-action"):
        render(PlotJob("density", [str(snap)], str(tmp_path / "x.png")))


def test_density_schema_error_names_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("step,agent_id,p_0,p_1\n0,0,0.5,0.5\n")  # no rule column
    with pytest.raises(SchemaError, match="rule"):
        render(PlotJob("density", [str(bad)], str(tmp_path / "x.png")))


def test_simplex_stack(tmp_path):
    snap = tmp_path / "snap3.csv"
    write_snapshots3(snap, steps=(0, 5, 10, 15))
    out = tmp_path / "s.png"
    res = render(PlotJob("simplex", [str(snap)], str(out), bins=12))
    assert out.exists()
    for s, counts in res.data["grids"].items():
        assert counts.sum() == 150
        assert counts.size == 12 * 12


def test_simplex_single_step_and_frames(tmp_path):
    snap = tmp_path / "snap3.csv"
    write_snapshots3(snap, steps=(0, 10))
    out = tmp_path / "s.png"
    frames = tmp_path / "frames"
    res = render(PlotJob("simplex", [str(snap)], str(out), bins=10,
                         step=10, frames=str(frames)))
    assert list(res.data["grids"]) == [10]
    assert sorted(p.name for p in frames.iterdir()) == ["step_000000.png",
                                                        "step_000010.png"]
    with pytest.raises(ValueError, match="not in snapshot"):
        render(PlotJob("simplex", [str(snap)], str(out), step=7))


def test_simplex_rejects_two_actions(tmp_path):
    snap = tmp_path / "snap2.csv"
    write_snapshots2(snap)
    with pytest.raises(SchemaError, match="3-action"):
        render(PlotJob("simplex", [str(snap)], str(tmp_path / "x.png")))


def test_selfplay_two_and_three_actions(tmp_path):
    sp2 = tmp_path / "sp2.csv"
    write_selfplay(sp2, n=2)
    res = render(PlotJob("selfplay", [str(sp2)], str(tmp_path / "sp2.png")))
    assert len(res.data["runs"]) == 3
    sp3 = tmp_path / "sp3.csv"
    write_selfplay(sp3, n=3)
    render(PlotJob("selfplay", [str(sp3)], str(tmp_path / "sp3.png")))


def test_sweep_two_files_overlay(tmp_path):
    s1, s2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    write_sweep(s1, "pg")
    write_sweep(s2, "lola")
    res = render(PlotJob("sweep", [str(s1), str(s2)], str(tmp_path / "sw.png")))
    assert set(res.data["curves"]) == {"pg", "lola"}


def test_bench_curves(tmp_path):
    b = tmp_path / "bench.csv"
    write_bench(b)
    res = render(PlotJob("bench", [str(b)], str(tmp_path / "b.png")))
    assert set(res.data["curves"]) == {"batched", "iterative"}
    n, t = res.data["curves"]["batched"]
    assert np.all(np.diff(n) > 0)


def test_render_deterministic_bytes(tmp_path):
    snap = tmp_path / "snapshots.csv"
    write_snapshots2(snap)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(PlotJob("density", [str(snap)], str(a), bins=30))
    render(PlotJob("density", [str(snap)], str(b), bins=30))
    assert a.read_bytes() == b.read_bytes()


def test_job_validation(tmp_path):
    with pytest.raises(ValueError, match="unknown plot kind"):
        PlotJob("pie", ["x.csv"], "y.png")
    with pytest.raises(FileNotFoundError):
        PlotJob("density", [str(tmp_path / "missing.csv")], "y.png")
    with pytest.raises(ValueError, match="input"):
        PlotJob("density", [], "y.png")


def test_tri_cells_cover_and_match_vertices():
    bins = 9
    rng = np.random.default_rng(3)
    probs = rng.dirichlet((1, 1, 1), size=4000)
    cells = tri_cell_index(probs, bins)
    assert cells.min() >= 0 and cells.max() < bins * bins
    assert tri_density(probs, bins).sum() == 4000
    verts = tri_cell_vertices(bins)
    assert verts.shape == (bins * bins, 3, 2)
    # every point must fall inside (or on) its assigned cell triangle
    xy = project_barycentric(probs)
    for k in rng.choice(4000, 200, replace=False):
        tri = verts[cells[k]]
        # barycentric sign test with tolerance for boundary points
        def side(a, b, p):
            return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        s = [side(tri[i], tri[(i + 1) % 3], xy[k]) for i in range(3)]
        assert min(s) > -1e-9 or max(s) < 1e-9


def test_cli_density(tmp_path):
    snap = tmp_path / "snapshots.csv"
    write_snapshots2(snap)
    out = tmp_path / "out.png"
    rc = run_cli(["density", "--in", str(snap), "--out", str(out), "--bins", "20"])
    assert rc == 0 and out.exists()


def test_cli_errors(tmp_path):
    assert run_cli(["pie", "--in", "x", "--out", "y"]) == 1
    assert run_cli(["density", "--in", str(tmp_path / "nope.csv"),
                    "--out", str(tmp_path / "o.png")]) == 1
