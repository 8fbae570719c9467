"""CSV schema checks and loaders for the simulator's output files."""

from __future__ import annotations

import pandas as pd


class SchemaError(ValueError):
    pass


def load_csv(path, required: tuple = (), prefixes: tuple = ()) -> pd.DataFrame:
    df = pd.read_csv(path)
    for col in required:
        if col not in df.columns:
            raise SchemaError(f"{path}: missing column '{col}'")
    for pre in prefixes:
        if not any(c.startswith(pre) for c in df.columns):
            raise SchemaError(f"{path}: no '{pre}*' columns")
    return df


def prob_columns(df: pd.DataFrame, prefix: str) -> list[str]:
    cols = []
    i = 0
    while f"{prefix}{i}" in df.columns:
        cols.append(f"{prefix}{i}")
        i += 1
    return cols


def load_snapshots(path):
    df = load_csv(path, required=("step", "agent_id", "rule"), prefixes=("p_",))
    return df, prob_columns(df, "p_")


def load_summary(path):
    df = load_csv(path, required=("step", "mean_value"), prefixes=("mean_p_",))
    return df, prob_columns(df, "mean_p_")


def load_selfplay(path):
    df = load_csv(path, required=("run", "step", "v1", "v2"), prefixes=("p1_", "p2_"))
    return df, prob_columns(df, "p1_")


def load_sweep(path):
    df = load_csv(path, required=("param", "rule"), prefixes=("final_mean_p_",))
    return df, prob_columns(df, "final_mean_p_")


def load_bench(path):
    return load_csv(path, required=("n_agents", "mode", "median_step_seconds"))
