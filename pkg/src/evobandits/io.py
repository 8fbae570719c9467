"""Run configuration and deterministic CSV serialization.

Config files are a flat TOML-compatible subset: `key = value` lines with
string/int/float/bool scalars, plus one inline-table form for the rule mix
(`mix = {lola = 0.86, pg = 0.14}`). Unknown keys are rejected (fail-closed)
and every rejection names the offending key and line. CLI flags override
file values.

All CSV output uses a fixed column order, fixed-point 6-decimal floats, one
header line and LF endings, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields

import numpy as np

from .policy import LOLA, PG, RuleTag
from .records import SnapshotRecord, SummaryRecord


class ConfigError(ValueError):
    pass


MODES = ("simulate", "selfplay", "sweep", "bench", "check")

# key -> expected python type (int promotes to float where float is expected)
CONFIG_KEYS = {
    "mode": str,
    "game": str,
    "param": float,
    "matrix_file": str,
    "rule": str,
    "mix": dict,
    "lookahead_eta": float,
    "n": int,
    "steps": int,
    "lr": float,
    "init_sigma": float,
    "seed": int,
    "record_every": int,
    "snapshot_agents": int,
    "out": str,
    "param_range": str,
    "sizes": str,
    "threads": int,
    "f32": bool,
}


@dataclass
class RunConfig:
    mode: str = "simulate"
    game: str | None = None
    param: float | None = None
    matrix_file: str | None = None
    rule: str | None = None
    mix: dict | None = None            # rule label -> fraction, order kept
    lookahead_eta: float | None = None  # None: defaults to lr
    n: int = 10000
    steps: int = 1000
    lr: float = 1.0
    init_sigma: float = 0.5
    seed: int = 0
    record_every: int = 10
    snapshot_agents: int = 20000
    out: str | None = None
    param_range: str | None = None
    sizes: str = "2000,10000,50000"
    threads: int = 1
    f32: bool = False


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _parse_scalar(text: str, key: str, lineno: int):
    text = text.strip()
    if not text:
        raise ConfigError(f"line {lineno}: empty value for key '{key}'")
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {text!r} for key '{key}'")


def _parse_inline_table(text: str, key: str, lineno: int) -> dict:
    body = text.strip()[1:-1].strip()
    table = {}
    if not body:
        return table
    for item in body.split(","):
        if "=" not in item:
            raise ConfigError(f"line {lineno}: bad entry {item.strip()!r} in table '{key}'")
        k, v = item.split("=", 1)
        k = k.strip()
        if not _KEY_RE.match(k):
            raise ConfigError(f"line {lineno}: bad table key {k!r} in '{key}'")
        if k in table:
            raise ConfigError(f"line {lineno}: duplicate table key '{k}' in '{key}'")
        table[k] = _parse_scalar(v, f"{key}.{k}", lineno)
    return table


def _strip_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line


def parse_config_text(text: str) -> dict:
    """Parse config text into a key -> value dict, validating keys and types."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, rhs = line.split("=", 1)
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        rhs = rhs.strip()
        if rhs.startswith("{"):
            if not rhs.endswith("}"):
                raise ConfigError(f"line {lineno}: unterminated table for key '{key}'")
            value = _parse_inline_table(rhs, key, lineno)
        else:
            value = _parse_scalar(rhs, key, lineno)
        values[key] = _coerce(key, value, lineno)
    return values


def _coerce(key: str, value, lineno: int):
    want = CONFIG_KEYS[key]
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if want is not bool and isinstance(value, bool):
        raise ConfigError(f"line {lineno}: key '{key}' expects {want.__name__}, got bool")
    if not isinstance(value, want):
        raise ConfigError(
            f"line {lineno}: key '{key}' expects {want.__name__}, "
            f"got {type(value).__name__}")
    return value


def load_config(path) -> RunConfig:
    """Load a config file into a RunConfig, applying documented defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        values = parse_config_text(fh.read())
    return resolve_config(values)


def resolve_config(values: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from file values plus (non-None) flag overrides."""
    merged = dict(values)
    for k, v in (overrides or {}).items():
        if v is not None:
            if k not in CONFIG_KEYS:
                raise ConfigError(f"unknown key '{k}'")
            merged[k] = v
    cfg = RunConfig(**merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError(f"key 'mode': unknown mode '{cfg.mode}'")
    if cfg.n % 2 != 0 or cfg.n < 2:
        raise ConfigError(f"key 'n': population size must be even and >= 2, got {cfg.n}")
    if cfg.steps < 0:
        raise ConfigError(f"key 'steps': must be >= 0, got {cfg.steps}")
    if cfg.lr <= 0:
        raise ConfigError(f"key 'lr': must be > 0, got {cfg.lr}")
    if cfg.init_sigma < 0:
        raise ConfigError(f"key 'init_sigma': must be >= 0, got {cfg.init_sigma}")
    if cfg.record_every < 1:
        raise ConfigError(f"key 'record_every': must be >= 1, got {cfg.record_every}")
    if cfg.snapshot_agents < 0:
        raise ConfigError(f"key 'snapshot_agents': must be >= 0, got {cfg.snapshot_agents}")
    if cfg.threads < 1:
        raise ConfigError(f"key 'threads': must be >= 1, got {cfg.threads}")
    if cfg.lookahead_eta is not None and cfg.lookahead_eta < 0:
        raise ConfigError(f"key 'lookahead_eta': must be >= 0, got {cfg.lookahead_eta}")
    if cfg.mix is not None:
        for k in cfg.mix:
            if k not in (PG, LOLA):
                raise ConfigError(f"key 'mix': unknown rule '{k}'")


def resolve_rule_mix(cfg: RunConfig) -> dict:
    """Turn cfg.rule / cfg.mix into a RuleTag -> fraction map. The look-ahead
    rate defaults to the learning rate when not given."""
    eta = cfg.lr if cfg.lookahead_eta is None else cfg.lookahead_eta
    if cfg.mix is not None:
        mix = {}
        for label, frac in cfg.mix.items():
            tag = RuleTag(LOLA, eta) if label == LOLA else RuleTag(PG)
            mix[tag] = float(frac)
        return mix
    if cfg.rule is None:
        raise ConfigError("key 'rule': a rule (or mix) is required for this mode")
    if cfg.rule == PG:
        return {RuleTag(PG): 1.0}
    if cfg.rule == LOLA:
        return {RuleTag(LOLA, eta): 1.0}
    raise ConfigError(f"key 'rule': unknown rule '{cfg.rule}'")


def parse_mix_flag(text: str) -> dict:
    """Parse the --mix flag, e.g. 'lola=0.86,pg=0.14'."""
    mix = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"key 'mix': bad entry {item.strip()!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k in mix:
            raise ConfigError(f"key 'mix': duplicate rule '{k}'")
        try:
            mix[k] = float(v)
        except ValueError:
            raise ConfigError(f"key 'mix': bad fraction {v.strip()!r} for rule '{k}'")
    return mix


def parse_param_range(text: str) -> list[float]:
    """Parse 'start:stop:step' into an inclusive list of values."""
    parts = [p.strip() for p in text.strip().split(":")]
    if len(parts) != 3:
        raise ConfigError(f"key 'param_range': expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"key 'param_range': non-numeric bound in {text!r}")
    if step == 0:
        raise ConfigError("key 'param_range': step must be nonzero")
    count = int(round((stop - start) / step)) + 1
    if count < 1:
        raise ConfigError(f"key 'param_range': empty range {text!r}")
    return [round(start + k * step, 12) for k in range(count)]


def parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"key 'sizes': expected comma-separated integers, got {text!r}")
    if not sizes:
        raise ConfigError("key 'sizes': no sizes given")
    return sizes


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _prob_cols(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(n)]


def summary_header(n: int, rule_labels: tuple = ()) -> list[str]:
    cols = ["step"] + _prob_cols("mean_p_", n) + _prob_cols("frac_pure_", n)
    cols.append("mean_value")
    for label in rule_labels:
        cols += _prob_cols(f"{label}_mean_p_", n)
    return cols


def _summary_row(rec: SummaryRecord, rule_labels: tuple) -> str:
    row = [str(rec.step)]
    row += [_fmt(x) for x in rec.mean_policy]
    row += [_fmt(x) for x in rec.pure_fractions]
    row.append(_fmt(rec.mean_value))
    for label in rule_labels:
        row += [_fmt(x) for x in rec.rule_means[label]]
    return ",".join(row)


def _snapshot_rows(rec: SnapshotRecord):
    step = str(rec.step)
    for aid, rule, p in zip(rec.agent_ids, rec.rules, rec.probs):
        yield ",".join([step, str(int(aid)), str(rule)] + [_fmt(x) for x in p])


class CsvSink:
    """Streaming record writer: one file, one writer, ordered records,
    flushed every `flush_every` records and on close."""

    def __init__(self, path, header: list[str], row_fn, flush_every: int = 100):
        self._fh = open(path, "w", encoding="utf-8", newline="")
        self._fh.write(",".join(header) + "\n")
        self._row_fn = row_fn
        self._flush_every = flush_every
        self._pending = 0

    def __call__(self, record) -> None:
        for line in self._row_fn(record):
            self._fh.write(line + "\n")
        self._pending += 1
        if self._pending >= self._flush_every:
            self._fh.flush()
            self._pending = 0

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def summary_sink(path, n: int, rule_labels: tuple = ()) -> CsvSink:
    return CsvSink(path, summary_header(n, rule_labels),
                   lambda rec: [_summary_row(rec, rule_labels)])


def snapshot_sink(path, n: int) -> CsvSink:
    return CsvSink(path, ["step", "agent_id", "rule"] + _prob_cols("p_", n),
                   _snapshot_rows)


def write_summary(records: list[SummaryRecord], path, n_actions: int | None = None) -> None:
    if records:
        n = records[0].mean_policy.size
    elif n_actions is not None:
        n = n_actions
    else:
        raise ValueError("empty record list needs an explicit n_actions for the header")
    rule_labels = ()
    if records and records[0].rule_means:
        rule_labels = tuple(sorted(records[0].rule_means))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(summary_header(n, rule_labels)) + "\n")
        for rec in records:
            fh.write(_summary_row(rec, rule_labels) + "\n")


def read_summary(path) -> list[SummaryRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        n = sum(1 for c in header if c.startswith("mean_p_"))
        rule_labels = []
        for c in header:
            if c.endswith("_mean_p_0") and not c.startswith("mean_p_"):
                rule_labels.append(c[:-len("_mean_p_0")])
        records = []
        for line in fh:
            vals = line.strip().split(",")
            step = int(vals[0])
            mp = np.array([float(x) for x in vals[1:1 + n]])
            fr = np.array([float(x) for x in vals[1 + n:1 + 2 * n]])
            mv = float(vals[1 + 2 * n])
            rm = None
            if rule_labels:
                rm = {}
                pos = 2 + 2 * n
                for label in rule_labels:
                    rm[label] = np.array([float(x) for x in vals[pos:pos + n]])
                    pos += n
            records.append(SummaryRecord(step, mp, fr, mv, rm))
    return records


def write_snapshots(records: list[SnapshotRecord], path, n_actions: int | None = None) -> None:
    if records:
        n = records[0].probs.shape[1]
    elif n_actions is not None:
        n = n_actions
    else:
        raise ValueError("empty record list needs an explicit n_actions for the header")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["step", "agent_id", "rule"] + _prob_cols("p_", n)) + "\n")
        for rec in records:
            for line in _snapshot_rows(rec):
                fh.write(line + "\n")


def read_snapshots(path) -> list[SnapshotRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        n = sum(1 for c in header if c.startswith("p_"))
        by_step: dict[int, list] = {}
        order: list[int] = []
        for line in fh:
            vals = line.strip().split(",")
            step = int(vals[0])
            if step not in by_step:
                by_step[step] = []
                order.append(step)
            by_step[step].append((int(vals[1]), vals[2],
                                  [float(x) for x in vals[3:3 + n]]))
    records = []
    for step in order:
        rows = by_step[step]
        records.append(SnapshotRecord(
            step,
            np.array([r[0] for r in rows]),
            np.array([r[1] for r in rows]),
            np.array([r[2] for r in rows])))
    return records


def write_selfplay(trajectories: list, path) -> None:
    """Write self-play trajectories; a leading `run` column separates the
    initial conditions of a grid."""
    if not trajectories:
        raise ValueError("no trajectories to write")
    n = trajectories[0].p1.shape[1]
    cols = (["run", "step"] + _prob_cols("p1_", n) + _prob_cols("p2_", n)
            + ["v1", "v2"])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for run, traj in enumerate(trajectories):
            for k in range(traj.p1.shape[0]):
                row = [str(run), str(k)]
                row += [_fmt(x) for x in traj.p1[k]]
                row += [_fmt(x) for x in traj.p2[k]]
                row += [_fmt(traj.v1[k]), _fmt(traj.v2[k])]
                fh.write(",".join(row) + "\n")


def write_sweep(rows: list[dict], path, n_actions: int) -> None:
    cols = ["param", "rule", "seed", "steps"] + _prob_cols("final_mean_p_", n_actions)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            out = [_fmt(r["param"]), str(r["rule"]), str(r["seed"]), str(r["steps"])]
            out += [_fmt(x) for x in r["final_mean_policy"]]
            fh.write(",".join(out) + "\n")


def write_bench(rows: list[dict], path) -> None:
    cols = ["n_agents", "mode", "rule", "median_step_seconds", "reps", "threads", "dtype"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join([str(r["n_agents"]), r["mode"], r["rule"],
                               _fmt(r["median_step_seconds"]), str(r["reps"]),
                               str(r["threads"]), r["dtype"]]) + "\n")


def write_resolved_config(cfg: RunConfig, path) -> None:
    """Dump the fully resolved configuration as the flat TOML subset."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for f in fields(cfg):
            v = getattr(cfg, f.name)
            if v is None:
                continue
            if isinstance(v, bool):
                fh.write(f"{f.name} = {'true' if v else 'false'}\n")
            elif isinstance(v, (int, float)):
                fh.write(f"{f.name} = {v}\n")
            elif isinstance(v, dict):
                body = ", ".join(f"{k} = {val}" for k, val in v.items())
                fh.write(f"{f.name} = {{{body}}}\n")
            else:
                fh.write(f'{f.name} = "{v}"\n')
