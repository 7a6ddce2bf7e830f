"""Experiment harness: configs, sweeps over T and K, CSV emission,
aggregation, and log-log slope fitting.

Seeds are derived as base_seed XOR splitmix64(grid value, repetition), so
the episode seed — and therefore the environment realization — depends only
on (grid point, repetition), never on which policies are in the config.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import envgen, policies, simulate

EPISODE_HEADER = (
    "experiment,policy,schedule,k,t,s_declared,v_declared,s_realized,"
    "v_realized,seed,rep,regret_kind,benchmark,total,row_part,column_part"
)
AGGREGATE_HEADER = "experiment,policy,k,t,s,v,regret_kind,benchmark,mean,std,n"

GRID_AXES = ("T", "K")

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Raised for invalid experiment configs, with the offending field path."""


def splitmix64(x: int) -> int:
    """The splitmix64 finalizer; a stable 64-bit bijective mixer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def episode_seed(base_seed: int, grid_value: int, rep: int) -> int:
    return (base_seed ^ splitmix64(splitmix64(grid_value) ^ rep)) & _MASK64


@dataclass
class ExperimentConfig:
    name: str
    env: dict
    policies: list[dict]
    grid_axis: str
    grid_values: list[int]
    output: str
    repetitions: int = 10
    base_seed: int = 0
    benchmarks: tuple[str, ...] = ("best_fixed",)
    regret_kinds: tuple[str, ...] = ("static",)
    delta: float = 0.1

    def __post_init__(self):
        if self.grid_axis not in GRID_AXES:
            raise ConfigError(f"grid.axis: must be one of {GRID_AXES}")
        if not self.grid_values:
            raise ConfigError("grid.values: must be non-empty")
        if any(v <= 0 for v in self.grid_values):
            raise ConfigError("grid.values: values must be positive")
        if any(
            self.grid_values[i] >= self.grid_values[i + 1]
            for i in range(len(self.grid_values) - 1)
        ):
            raise ConfigError("grid.values: values must be strictly increasing")
        if self.repetitions < 1:
            raise ConfigError("repetitions: must be >= 1")
        if not self.policies:
            raise ConfigError("policies: must be non-empty")
        for b in self.benchmarks:
            if b not in simulate.BENCHMARKS:
                raise ConfigError(f"benchmarks: unknown benchmark {b!r}")
        for kd in self.regret_kinds:
            if kd not in simulate.REGRET_KINDS:
                raise ConfigError(f"regret_kinds: unknown kind {kd!r}")

    @staticmethod
    def from_json(doc: dict | str) -> "ExperimentConfig":
        if isinstance(doc, str):
            doc = json.loads(doc)
        allowed = {
            "name", "env", "policies", "grid", "repetitions", "base_seed",
            "benchmarks", "regret_kinds", "output", "delta",
        }
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for required in ("name", "env", "policies", "grid", "output"):
            if required not in doc:
                raise ConfigError(f"{required}: missing required field")
        grid = doc["grid"]
        if not isinstance(grid, dict) or set(grid) - {"axis", "values"}:
            raise ConfigError("grid: must be an object with fields axis, values")
        if "axis" not in grid or "values" not in grid:
            raise ConfigError("grid: needs both axis and values")
        return ExperimentConfig(
            name=doc["name"],
            env=doc["env"],
            policies=doc["policies"],
            grid_axis=grid["axis"],
            grid_values=list(grid["values"]),
            output=doc["output"],
            repetitions=doc.get("repetitions", 10),
            base_seed=doc.get("base_seed", 0),
            benchmarks=tuple(doc.get("benchmarks", ("best_fixed",))),
            regret_kinds=tuple(doc.get("regret_kinds", ("static",))),
            delta=doc.get("delta", 0.1),
        )


def _env_spec_for(config: ExperimentConfig, grid_value: int) -> envgen.EnvSpec:
    doc = dict(config.env)
    doc.setdefault("seed", 0)  # replaced per episode by the environment stream
    if config.grid_axis == "T":
        doc["t_horizon"] = int(grid_value)
    else:
        doc["k"] = int(grid_value)
        if "t_horizon" not in doc:
            raise ConfigError("env.t_horizon: required when sweeping K")
    try:
        return envgen.EnvSpec.from_json(doc)
    except envgen.EnvSpecError as e:
        raise ConfigError(f"env: {e}") from e


def _policy_config_for(config: ExperimentConfig, policy: dict, spec: envgen.EnvSpec) -> dict:
    pc = dict(policy)
    # Schedules that need the non-stationarity budget read it off the env.
    if pc.get("schedule") in ("switching_known", "borda") and "s_switches" not in pc:
        if spec.s_switches is not None:
            pc["s_switches"] = spec.s_switches
    if pc.get("schedule") == "continuous" and "v_budget" not in pc:
        if spec.v_budget is not None:
            pc["v_budget"] = spec.v_budget
    if "delta" not in pc and pc.get("schedule") not in (None, "manual"):
        pc["delta"] = config.delta
    return pc


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class _Task:
    grid_value: int
    policy_index: int
    rep: int
    env_doc: dict
    policy_config: dict
    seed: int
    benchmarks: tuple[str, ...]
    regret_kinds: tuple[str, ...]


def _run_task(task: _Task) -> tuple[int, int, int, simulate.EpisodeResult]:
    spec = envgen.EnvSpec.from_json(task.env_doc)
    result = simulate.run_episode(
        spec,
        task.policy_config,
        task.seed,
        benchmarks=task.benchmarks,
        regret_kinds=task.regret_kinds,
        retain_trajectory=False,
    )
    return task.grid_value, task.policy_index, task.rep, result


def _episode_rows(config: ExperimentConfig, results) -> list[list[str]]:
    rows = []
    for grid_value, policy_index, rep, res in results:
        policy = config.policies[policy_index]
        name = policy.get("name", policy["kind"])
        sched = policy.get("schedule", "manual")
        for rep_report in res.reports:
            rows.append([
                config.name, name, sched, _fmt(res.k), _fmt(res.t_horizon),
                _fmt(res.s_declared), _fmt(res.v_declared),
                _fmt(res.s_realized), _fmt(float(res.v_realized)),
                _fmt(res.seed), _fmt(rep), rep_report.kind, rep_report.benchmark,
                _fmt(float(rep_report.total)), _fmt(float(rep_report.row_part)),
                _fmt(float(rep_report.column_part)),
            ])
    return rows


def aggregate_episodes(episode_text: str) -> str:
    """Aggregate an episode CSV body into the aggregate CSV body.

    Groups on (experiment, policy, k, t, s_declared, v_declared, regret kind,
    benchmark family); the benchmark label drops any best-arm suffix so
    repetitions with different best arms aggregate together. Operating on
    the parsed CSV text makes re-aggregation from disk bitwise-identical.
    """
    reader = csv.DictReader(io.StringIO(episode_text))
    if reader.fieldnames != EPISODE_HEADER.split(","):
        raise ConfigError("episode CSV header mismatch")
    groups: dict[tuple, list[float]] = {}
    for row in reader:
        bench = row["benchmark"].split(":")[0]
        key = (
            row["experiment"], row["policy"], int(row["k"]), int(row["t"]),
            row["s_declared"], row["v_declared"], row["regret_kind"], bench,
        )
        groups.setdefault(key, []).append(float(row["total"]))
    lines = [AGGREGATE_HEADER]
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[3], k[2], k[6], k[7])):
        vals = np.asarray(groups[key])
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        exp, pol, k, t, s, v, kind, bench = key
        lines.append(
            ",".join([exp, pol, str(k), str(t), s, v, kind, bench,
                      repr(mean), repr(std), str(len(vals))])
        )
    return "\n".join(lines) + "\n"


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def run_config(config: ExperimentConfig, max_workers: int = 1) -> tuple[str, str]:
    """Run the full grid x policies x repetitions product and write the
    episode and aggregate CSVs atomically. Returns the two file paths."""
    tasks = []
    for grid_value in config.grid_values:
        spec = _env_spec_for(config, grid_value)
        for policy_index, policy in enumerate(config.policies):
            pc = _policy_config_for(config, policy, spec)
            # Validate the policy config eagerly so errors surface pre-pool.
            try:
                policies.make_policy(pc, spec.k, spec.t_horizon)
            except (ValueError, KeyError) as e:
                raise ConfigError(f"policies[{policy_index}]: {e}") from e
            for rep in range(config.repetitions):
                tasks.append(_Task(
                    grid_value=grid_value,
                    policy_index=policy_index,
                    rep=rep,
                    env_doc=spec.to_json(),
                    policy_config=pc,
                    seed=episode_seed(config.base_seed, grid_value, rep),
                    benchmarks=config.benchmarks,
                    regret_kinds=config.regret_kinds,
                ))
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    # Canonical file order regardless of completion order.
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    body = [EPISODE_HEADER]
    body.extend(",".join(row) for row in _episode_rows(config, results))
    episode_text = "\n".join(body) + "\n"
    aggregate_text = aggregate_episodes(episode_text)
    out = config.output
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    episodes_path = out + ".episodes.csv"
    aggregate_path = out + ".aggregate.csv"
    _write_atomic(episodes_path, episode_text)
    _write_atomic(aggregate_path, aggregate_text)
    return episodes_path, aggregate_path


def parse_aggregate(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != AGGREGATE_HEADER.split(","):
        raise ConfigError("aggregate CSV header mismatch")
    rows = []
    for row in reader:
        row["k"] = int(row["k"])
        row["t"] = int(row["t"])
        row["mean"] = float(row["mean"])
        row["std"] = float(row["std"])
        row["n"] = int(row["n"])
        rows.append(row)
    return rows


def loglog_slope(rows: list[dict], axis: str) -> tuple[float, float]:
    """Least-squares slope of log(mean regret) against log(axis value).

    Non-positive means are excluded with a warning; at least 3 usable
    points are required. Returns (slope, standard error)."""
    if axis not in GRID_AXES:
        raise ConfigError(f"axis must be one of {GRID_AXES}")
    key = "t" if axis == "T" else "k"
    pts = []
    for row in rows:
        if row["mean"] <= 0:
            warnings.warn(
                f"excluding non-positive mean {row['mean']} at {key}={row[key]} from log-log fit"
            )
            continue
        pts.append((math.log(row[key]), math.log(row["mean"])))
    if len(pts) < 3:
        raise ConfigError("need at least 3 grid points with positive means")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    n = len(x)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ y) / sxx
    resid = y - (y.mean() + slope * xc)
    sse = float(resid @ resid)
    stderr = math.sqrt(sse / (n - 2) / sxx) if n > 2 else 0.0
    return slope, stderr


def slope_table(aggregate_text: str, axis: str) -> list[dict]:
    """Per (policy, regret kind, benchmark) log-log slopes over the grid."""
    rows = parse_aggregate(aggregate_text)
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["policy"], row["regret_kind"], row["benchmark"]), []).append(row)
    table = []
    for (policy, kind, bench), grp in sorted(groups.items()):
        if len(grp) < 3:
            continue
        try:
            slope, stderr = loglog_slope(grp, axis)
        except ConfigError:
            continue
        table.append({
            "policy": policy, "regret_kind": kind, "benchmark": bench,
            "slope": slope, "stderr": stderr, "points": len(grp),
        })
    return table
