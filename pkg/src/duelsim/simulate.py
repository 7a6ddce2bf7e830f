"""Deterministic episode engine.

Randomness contract: a single 64-bit episode seed is split into three
isolated Philox streams (environment, policy, outcome), so changing the
policy never perturbs the environment realization. Regret is accumulated
online with O(K) state per benchmark; lazy environments never hold more
than one matrix at a time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import envgen, policies
from .prefmat import EQ_TOL, PreferenceSequence
from .regret import RegretReport, Trajectory

STREAM_LABELS = {"environment": 1, "policy": 2, "outcome": 3}

BENCHMARKS = ("best_fixed", "per_interval", "per_step", "lb_benchmark")
REGRET_KINDS = ("static", "dynamic", "borda_dynamic")

# Trajectories are retained by default only up to this horizon.
TRAJECTORY_RETENTION_LIMIT = 100_000

CURVE_POINTS = 1000


class SimulationError(ValueError):
    pass


def split_stream(master_seed: int, label: str, episode_index: int = 0) -> np.random.Generator:
    """Reproducible, isolated sub-stream for one component of one episode.

    The mapping (seed, label, index) -> stream is injective and stable:
    Philox keyed by SeedSequence([seed, label_code, index])."""
    if label not in STREAM_LABELS:
        raise SimulationError(f"unknown stream label {label!r}")
    ss = np.random.SeedSequence([int(master_seed), STREAM_LABELS[label], int(episode_index)])
    return np.random.Generator(np.random.Philox(ss))


def _env_seed(master_seed: int, episode_index: int = 0) -> int:
    ss = np.random.SeedSequence([int(master_seed), STREAM_LABELS["environment"], int(episode_index)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class EpisodeResult:
    trajectory: Trajectory | None
    reports: list[RegretReport]
    k: int
    t_horizon: int
    s_declared: int | None
    v_declared: float | None
    s_realized: int
    v_realized: float
    seed: int
    policy: str
    wall_time: float = 0.0


class _Accumulators:
    """Online O(K) regret accumulators for all benchmark/kind combinations."""

    def __init__(self, k, t_horizon, boundaries, winners, benchmarks, kinds, curve):
        self.k = k
        self.t = t_horizon
        self.benchmarks = benchmarks
        self.kinds = kinds
        # Per-arm cumulative sums of P_t(j, k_minus) and P_t(j, k_plus).
        self.cum_row = np.zeros(k)
        self.cum_col = np.zeros(k)
        self.sum_pm = 0.0  # sum of P_t(k_plus, k_minus)
        self.sum_mp = 0.0  # sum of P_t(k_minus, k_plus)
        self.use_borda = "borda_dynamic" in kinds
        if self.use_borda:
            self.cum_b = np.zeros(k)  # per-arm cumulative Borda scores
            self.sum_b_plus = 0.0
            self.sum_b_minus = 0.0
        # Segment bookkeeping for the per-interval benchmark.
        self.boundaries = boundaries
        self.winners = winners
        self.seg = 0
        if boundaries is not None:
            self.seg_row = np.zeros(k)
            self.seg_col = np.zeros(k)
            self.seg_sum_pm = 0.0
            self.seg_sum_mp = 0.0
            self.seg_parts: list[tuple[int, float, float]] = []  # (argmax arm, row, col)
            if self.use_borda:
                self.seg_b = np.zeros(k)
                self.seg_b_plus = 0.0
                self.seg_b_minus = 0.0
                self.seg_borda_parts: list[tuple[float, float]] = []
        # Online per-step-best and planted-winner accumulators.
        self.ps_row = 0.0
        self.ps_col = 0.0
        self.lb_row = 0.0
        self.lb_col = 0.0
        if self.use_borda:
            self.ps_b_row = 0.0
            self.ps_b_col = 0.0
            self.lb_b_row = 0.0
            self.lb_b_col = 0.0
        self.curve_stride = max(1, -(-t_horizon // CURVE_POINTS)) if curve else None
        self.curve_snaps: list[tuple[int, np.ndarray, float, float]] = []
        self.i = 0

    def add(self, m: np.ndarray, kp: int, km: int) -> None:
        p_col_km = m[:, km]
        p_col_kp = m[:, kp]
        pm = m[kp, km]
        mp = m[km, kp]
        self.cum_row += p_col_km
        self.cum_col += p_col_kp
        self.sum_pm += pm
        self.sum_mp += mp
        r_vec = p_col_km + p_col_kp  # argmax-equivalent of the per-round regret
        if "per_step" in self.benchmarks:
            j = int(np.argmax(r_vec))
            self.ps_row += p_col_km[j] - pm
            self.ps_col += p_col_kp[j] - mp
        if self.use_borda:
            b = (m.sum(axis=1) - 0.5) / (self.k - 1)
            self.cum_b += b
            self.sum_b_plus += b[kp]
            self.sum_b_minus += b[km]
            if "per_step" in self.benchmarks:
                j = int(np.argmax(r_vec))
                self.ps_b_row += b[j] - b[kp]
                self.ps_b_col += b[j] - b[km]
        if self.winners is not None:
            w = self.winners[self.seg]
            self.lb_row += p_col_km[w] - pm
            self.lb_col += p_col_kp[w] - mp
            if self.use_borda:
                self.lb_b_row += b[w] - b[kp]
                self.lb_b_col += b[w] - b[km]
        if self.boundaries is not None:
            self.seg_row += p_col_km
            self.seg_col += p_col_kp
            self.seg_sum_pm += pm
            self.seg_sum_mp += mp
            if self.use_borda:
                self.seg_b += b
                self.seg_b_plus += b[kp]
                self.seg_b_minus += b[km]
            if self.i + 1 == self.boundaries[self.seg + 1]:
                totals = (self.seg_row - self.seg_sum_pm) + (self.seg_col - self.seg_sum_mp)
                j = int(np.argmax(totals))
                self.seg_parts.append(
                    (j, self.seg_row[j] - self.seg_sum_pm, self.seg_col[j] - self.seg_sum_mp)
                )
                if self.use_borda:
                    self.seg_borda_parts.append(
                        (self.seg_b[j] - self.seg_b_plus, self.seg_b[j] - self.seg_b_minus)
                    )
                    self.seg_b[:] = 0.0
                    self.seg_b_plus = self.seg_b_minus = 0.0
                self.seg_row[:] = 0.0
                self.seg_col[:] = 0.0
                self.seg_sum_pm = self.seg_sum_mp = 0.0
                self.seg = min(self.seg + 1, len(self.boundaries) - 2)
        self.i += 1
        if self.curve_stride is not None and (self.i % self.curve_stride == 0 or self.i == self.t):
            snap = (self.cum_row - self.sum_pm) + (self.cum_col - self.sum_mp)
            self.curve_snaps.append((self.i, snap / 2.0, 0.0, 0.0))

    def _report(self, kind, benchmark, row, col, curve_arm=None) -> RegretReport:
        curve = None
        if curve_arm is not None and self.curve_snaps:
            curve = [(i, float(vec[curve_arm])) for i, vec, _, _ in self.curve_snaps]
        return RegretReport(
            kind=kind, total=(row + col) / 2.0, row_part=row, column_part=col,
            benchmark=benchmark, curve=curve,
        )

    def finalize(self) -> list[RegretReport]:
        reports = []
        for bench in self.benchmarks:
            if bench == "best_fixed":
                totals = (self.cum_row - self.sum_pm) + (self.cum_col - self.sum_mp)
                j = int(np.argmax(totals))
                if "static" in self.kinds or "dynamic" in self.kinds:
                    kind = "static" if "static" in self.kinds else "dynamic"
                    reports.append(
                        self._report(kind, f"best_fixed:{j}", self.cum_row[j] - self.sum_pm,
                                     self.cum_col[j] - self.sum_mp, curve_arm=j)
                    )
                if self.use_borda:
                    reports.append(
                        self._report("borda_dynamic", f"best_fixed:{j}",
                                     self.cum_b[j] - self.sum_b_plus, self.cum_b[j] - self.sum_b_minus)
                    )
            elif bench == "per_interval":
                if self.boundaries is None:
                    raise SimulationError("per_interval benchmark needs segment boundaries")
                if "dynamic" in self.kinds:
                    row = sum(p[1] for p in self.seg_parts)
                    col = sum(p[2] for p in self.seg_parts)
                    reports.append(self._report("dynamic", "per_interval", row, col))
                if self.use_borda:
                    row = sum(p[0] for p in self.seg_borda_parts)
                    col = sum(p[1] for p in self.seg_borda_parts)
                    reports.append(self._report("borda_dynamic", "per_interval", row, col))
            elif bench == "per_step":
                if "dynamic" in self.kinds:
                    reports.append(self._report("dynamic", "per_step", self.ps_row, self.ps_col))
                if self.use_borda:
                    reports.append(
                        self._report("borda_dynamic", "per_step", self.ps_b_row, self.ps_b_col)
                    )
            elif bench == "lb_benchmark":
                if self.winners is None:
                    raise SimulationError("lb_benchmark needs planted winners in the sequence meta")
                if "dynamic" in self.kinds:
                    reports.append(self._report("dynamic", "lb_benchmark", self.lb_row, self.lb_col))
                if self.use_borda:
                    reports.append(
                        self._report("borda_dynamic", "lb_benchmark", self.lb_b_row, self.lb_b_col)
                    )
            else:
                raise SimulationError(f"unknown benchmark {bench!r}")
        return reports


def run_episode(
    env: envgen.EnvSpec | PreferenceSequence,
    policy_config: dict,
    seed: int,
    benchmarks: tuple[str, ...] = ("best_fixed",),
    regret_kinds: tuple[str, ...] = ("static",),
    episode_index: int = 0,
    retain_trajectory: bool | None = None,
    curve: bool = False,
) -> EpisodeResult:
    """Run T rounds of one policy against one environment.

    If env is an EnvSpec, its seed field is replaced by the episode's
    environment stream seed so the realization depends only on (spec shape,
    episode seed). Regret reports are produced for every requested
    (benchmark, regret kind) combination that applies.
    """
    start = time.perf_counter()
    for b in benchmarks:
        if b not in BENCHMARKS:
            raise SimulationError(f"unknown benchmark {b!r}")
    for kd in regret_kinds:
        if kd not in REGRET_KINDS:
            raise SimulationError(f"unknown regret kind {kd!r}")
    if isinstance(env, envgen.EnvSpec):
        spec = replace(env, seed=_env_seed(seed, episode_index))
        seq = envgen.generate(spec)
    else:
        seq = env
    k, t = seq.k, seq.t_horizon
    policy = policies.make_policy(policy_config, k, t)
    policy_rng = split_stream(seed, "policy", episode_index)
    outcome_rng = split_stream(seed, "outcome", episode_index)

    meta = seq.meta
    acc = _Accumulators(k, t, meta.boundaries, meta.winners, benchmarks, regret_kinds, curve)
    if retain_trajectory is None:
        retain_trajectory = t <= TRAJECTORY_RETENTION_LIMIT
    if retain_trajectory:
        kp_arr = np.empty(t, dtype=np.int64)
        km_arr = np.empty(t, dtype=np.int64)
        o_arr = np.empty(t, dtype=np.int8)

    prev = None
    s_realized = 0
    v_realized = 0.0
    for i, m in enumerate(seq.iter_arrays()):
        kp, km = policy.draw_pair(policy_rng)
        o = int(outcome_rng.random() < m[kp, km])
        policy.update(kp, km, o)
        acc.add(m, kp, km)
        if retain_trajectory:
            kp_arr[i] = kp
            km_arr[i] = km
            o_arr[i] = o
        if prev is not None:
            diff = float(np.max(np.abs(m - prev)))
            if diff > EQ_TOL:
                s_realized += 1
            v_realized += diff
        prev = m if seq._matrices is not None else m.copy()

    reports = acc.finalize()
    traj = None
    if retain_trajectory:
        traj = Trajectory(kp_arr, km_arr, o_arr, policy=policy_config.get("kind", ""), seed=seed)
    return EpisodeResult(
        trajectory=traj,
        reports=reports,
        k=k,
        t_horizon=t,
        s_declared=meta.s_declared,
        v_declared=meta.v_declared,
        s_realized=s_realized,
        v_realized=v_realized,
        seed=seed,
        policy=policy_config.get("name", policy_config.get("kind", "")),
        wall_time=time.perf_counter() - start,
    )
