"""The five figure kinds rendered from simulator CSVs.

    density   policy-density timeline of a 2-action population run
              (snapshots.csv; optional summary.csv overlays the mean track)
    simplex   barycentric triangle densities of a 3-action run, stacked
              over time, as one frame (--step) or a frame sequence
    selfplay  learning trajectories of two persistent agents over a grid
              of starts (selfplay.csv)
    sweep     final mean policy against the payoff parameter (sweep.csv,
              optionally two files to compare rules)
    bench     step-duration scaling curves (bench.csv)

Rendering is read-only over inputs and deterministic: identical inputs and
options produce identical PNG bytes for a pinned matplotlib version.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection
from matplotlib.colors import LogNorm

from . import bins, schemas

KINDS = ("density", "simplex", "selfplay", "sweep", "bench")

DENSITY_BINS = 60
TRI_BINS = 80      # cells per triangle edge
STACK_FRAMES = 6   # triangle slices in a stacked timeline


@dataclass
class PlotJob:
    kind: str
    inputs: list
    out: str
    bins: int | None = None
    log: bool = True
    step: int | None = None     # simplex: render this step only
    frames: str | None = None   # simplex: directory for a frame sequence

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}, expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        for p in self.inputs:
            if not Path(p).exists():
                raise FileNotFoundError(f"input not found: {p}")


@dataclass
class RenderResult:
    kind: str
    out: str
    data: dict = field(default_factory=dict)


def render(job: PlotJob) -> RenderResult:
    fn = {"density": _render_density, "simplex": _render_simplex,
          "selfplay": _render_selfplay, "sweep": _render_sweep,
          "bench": _render_bench}[job.kind]
    return fn(job)


def _save(fig, out):
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------

def _render_density(job: PlotJob) -> RenderResult:
    df, pcols = schemas.load_snapshots(job.inputs[0])
    if len(pcols) != 2:
        raise schemas.SchemaError(
            f"density timeline needs a 2-action run, got {len(pcols)} actions "
            "(use the simplex kind for 3 actions)")
    nbins = job.bins or DENSITY_BINS
    steps, grid = bins.density_timeline(df, "p_0", nbins)

    fig, ax = plt.subplots(figsize=(7, 4))
    shown = np.ma.masked_equal(grid.T, 0)
    norm = LogNorm(vmin=1, vmax=max(grid.max(), 1)) if job.log else None
    ax.imshow(shown, origin="lower", aspect="auto", cmap="Blues", norm=norm,
              extent=(steps[0], steps[-1] if steps.size > 1 else steps[0] + 1, 0.0, 1.0),
              interpolation="nearest")
    if len(job.inputs) > 1:
        sdf, scols = schemas.load_summary(job.inputs[1])
        ax.plot(sdf["step"], sdf[scols[0]], "k.", markersize=3, label="population mean")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("evolution step")
    ax.set_ylabel("P(action 0)")
    ax.set_ylim(0, 1)
    _save(fig, job.out)
    return RenderResult("density", job.out, {"steps": steps, "grid": grid})


def _render_simplex(job: PlotJob) -> RenderResult:
    df, pcols = schemas.load_snapshots(job.inputs[0])
    if len(pcols) != 3:
        raise schemas.SchemaError(
            f"simplex rendering needs a 3-action run, got {len(pcols)} actions")
    nbins = job.bins or TRI_BINS
    steps = np.sort(df["step"].unique())

    def frame_counts(s):
        probs = df.loc[df["step"] == s, pcols].to_numpy()
        return bins.tri_density(probs, nbins)

    if job.frames:
        outdir = Path(job.frames)
        outdir.mkdir(parents=True, exist_ok=True)
        for s in steps:
            fig, ax = plt.subplots(figsize=(4, 3.6))
            _draw_triangle(ax, frame_counts(s), nbins, job.log)
            ax.set_title(f"step {s}")
            _save(fig, outdir / f"step_{s:06d}.png")

    if job.step is not None:
        if job.step not in steps:
            raise ValueError(f"step {job.step} not in snapshot file "
                             f"(recorded steps: {steps.min()}..{steps.max()})")
        chosen = np.array([job.step])
    else:
        idx = np.unique(np.linspace(0, steps.size - 1, min(STACK_FRAMES, steps.size)).astype(int))
        chosen = steps[idx]

    fig, axes = plt.subplots(len(chosen), 1, figsize=(4, 3.4 * len(chosen)))
    axes = np.atleast_1d(axes)
    grids = {}
    # stacked bottom-to-top: evolution step grows upward
    for ax, s in zip(axes[::-1], chosen):
        counts = frame_counts(s)
        grids[int(s)] = counts
        _draw_triangle(ax, counts, nbins, job.log)
        ax.set_title(f"step {s}", fontsize=9)
    _save(fig, job.out)
    return RenderResult("simplex", job.out, {"steps": chosen, "grids": grids})


def _draw_triangle(ax, counts, nbins, log):
    verts = bins.tri_cell_vertices(nbins)
    vals = np.asarray(counts, dtype=float)
    if log:
        vals = np.log1p(vals)
    coll = PolyCollection(verts, array=vals, cmap="Blues", edgecolors="none")
    ax.add_collection(coll)
    corners = np.array([[0, 0], [1, 0], [0.5, bins.SQRT3_2], [0, 0]])
    ax.plot(corners[:, 0], corners[:, 1], "k-", linewidth=0.6)
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, bins.SQRT3_2 + 0.05)
    ax.set_aspect("equal")
    ax.axis("off")


def _render_selfplay(job: PlotJob) -> RenderResult:
    df, pcols = schemas.load_selfplay(job.inputs[0])
    runs = np.sort(df["run"].unique())
    fig, ax = plt.subplots(figsize=(6, 4))
    cmap = plt.get_cmap("viridis")
    if len(pcols) == 2:
        for r in runs:
            sub = df[df["run"] == r]
            start = sub["p1_0"].iloc[0]
            ax.plot(sub["step"], sub["p1_0"], color=cmap(start), linewidth=0.9)
        ax.set_xlabel("learning step")
        ax.set_ylabel("P(action 0)")
        ax.set_ylim(0, 1)
    else:
        for k, r in enumerate(runs):
            sub = df[df["run"] == r]
            xy = bins.project_barycentric(sub[["p1_0", "p1_1", "p1_2"]].to_numpy())
            ax.plot(xy[:, 0], xy[:, 1], color=cmap(k / max(len(runs) - 1, 1)),
                    linewidth=0.8)
        corners = np.array([[0, 0], [1, 0], [0.5, bins.SQRT3_2], [0, 0]])
        ax.plot(corners[:, 0], corners[:, 1], "k-", linewidth=0.6)
        ax.set_aspect("equal")
        ax.axis("off")
    _save(fig, job.out)
    return RenderResult("selfplay", job.out, {"runs": runs})


def _render_sweep(job: PlotJob) -> RenderResult:
    fig, ax = plt.subplots(figsize=(6, 4))
    curves = {}
    for path in job.inputs:
        df, pcols = schemas.load_sweep(path)
        for rule in df["rule"].unique():
            sub = df[df["rule"] == rule].sort_values("param")
            label = str(rule)
            ax.plot(sub["param"], sub[pcols[0]], "o-", label=label, markersize=4)
            curves[label] = (sub["param"].to_numpy(), sub[pcols[0]].to_numpy())
    ax.set_xlabel("payoff parameter")
    ax.set_ylabel("final mean P(action 0)")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    _save(fig, job.out)
    return RenderResult("sweep", job.out, {"curves": curves})


def _render_bench(job: PlotJob) -> RenderResult:
    df = schemas.load_bench(job.inputs[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    curves = {}
    for mode in df["mode"].unique():
        sub = df[df["mode"] == mode].sort_values("n_agents")
        ax.loglog(sub["n_agents"], sub["median_step_seconds"], "o-", label=str(mode))
        curves[str(mode)] = (sub["n_agents"].to_numpy(),
                             sub["median_step_seconds"].to_numpy())
    ax.set_xlabel("population size")
    ax.set_ylabel("step duration [s] (lower is better)")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, job.out)
    return RenderResult("bench", job.out, {"curves": curves})
