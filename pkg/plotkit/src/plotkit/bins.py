"""Binning helpers: policy-density timelines and barycentric triangle grids."""

from __future__ import annotations

import numpy as np

SQRT3_2 = np.sqrt(3.0) / 2.0


def density_timeline(df, pcol: str, bins: int):
    """Bin P(action) per recorded step: rows = steps, cols = bins over [0, 1].

    Row sums equal the per-step snapshot size.
    """
    steps = np.sort(df["step"].unique())
    grid = np.zeros((steps.size, bins), dtype=np.int64)
    for k, s in enumerate(steps):
        vals = df.loc[df["step"] == s, pcol].to_numpy()
        grid[k], _ = np.histogram(vals, bins=bins, range=(0.0, 1.0))
    return steps, grid


def tri_cell_index(probs: np.ndarray, bins: int) -> np.ndarray:
    """Cell id on the triangular grid with bins^2 up/down cells (rows by the
    third coordinate, alternating up/down within a row)."""
    f = np.floor(probs * bins).astype(np.int64)
    np.clip(f, 0, bins - 1, out=f)
    over = f.sum(axis=1) == bins
    if np.any(over):
        rows = np.nonzero(over)[0]
        f[rows, f[rows].argmax(axis=1)] -= 1
    r = bins - f.sum(axis=1)
    j = f[:, 2]
    return j * (2 * bins - j) + 2 * f[:, 1] + (r - 1)


def tri_cell_vertices(bins: int) -> np.ndarray:
    """2-D vertex triples of every grid cell, in cell-id order.

    Barycentric (p0, p1, p2) projects to x = p1 + p2/2, y = p2 * sqrt(3)/2;
    the triangle has corners a0=(0,0), a1=(1,0), a2=(1/2, sqrt(3)/2).
    """
    def xy(i, j):
        # lattice node with p1 = i/bins, p2 = j/bins
        return np.array([(i + 0.5 * j) / bins, SQRT3_2 * j / bins])

    verts = []
    for j in range(bins):
        for i in range(bins - j):
            verts.append([xy(i, j), xy(i + 1, j), xy(i, j + 1)])        # up
            if i < bins - j - 1:
                verts.append([xy(i + 1, j), xy(i + 1, j + 1), xy(i, j + 1)])  # down
    return np.array(verts)


def tri_density(probs: np.ndarray, bins: int) -> np.ndarray:
    """Counts per triangular cell; sums to the number of points."""
    cells = tri_cell_index(probs, bins)
    return np.bincount(cells, minlength=bins * bins)


def project_barycentric(probs: np.ndarray) -> np.ndarray:
    """(N, 3) simplex points -> (N, 2) triangle coordinates."""
    x = probs[:, 1] + 0.5 * probs[:, 2]
    y = SQRT3_2 * probs[:, 2]
    return np.column_stack([x, y])
