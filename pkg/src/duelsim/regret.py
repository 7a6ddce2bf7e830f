"""Regret accounting: static, dynamic, and Borda objectives, the player-wise
decomposition, and benchmark-sequence construction.

Every regret is a deterministic function of (sequence, trajectory,
benchmark). Totals and parts are accumulated per round and summed with
numpy's pairwise summation, so the decomposition identity
total = (row_part + column_part) / 2 holds to well below 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .prefmat import PreferenceSequence, borda_scores, PreferenceMatrix


class RegretError(ValueError):
    """Raised for mismatched horizons or invalid benchmarks."""


@dataclass
class Trajectory:
    """Per-round record of the played pair and the observed outcome."""

    k_plus: np.ndarray
    k_minus: np.ndarray
    outcomes: np.ndarray
    policy: str = ""
    seed: int | None = None

    def __post_init__(self):
        self.k_plus = np.asarray(self.k_plus, dtype=np.int64)
        self.k_minus = np.asarray(self.k_minus, dtype=np.int64)
        self.outcomes = np.asarray(self.outcomes, dtype=np.int8)
        if not (len(self.k_plus) == len(self.k_minus) == len(self.outcomes)):
            raise RegretError("trajectory arrays must have equal length")

    @property
    def t_horizon(self) -> int:
        return len(self.k_plus)


@dataclass
class RegretReport:
    kind: str
    total: float
    row_part: float
    column_part: float
    benchmark: str
    curve: list[tuple[int, float]] | None = None


def _check(seq: PreferenceSequence, traj: Trajectory) -> None:
    if seq.t_horizon != traj.t_horizon:
        raise RegretError("sequence and trajectory horizons differ")
    if np.any(traj.k_plus < 0) or np.any(traj.k_plus >= seq.k):
        raise RegretError("row arm index out of range")
    if np.any(traj.k_minus < 0) or np.any(traj.k_minus >= seq.k):
        raise RegretError("column arm index out of range")


def dynamic_regret(seq: PreferenceSequence, traj: Trajectory, benchmark: np.ndarray) -> RegretReport:
    """Regret of the played pairs against a time-varying arm sequence."""
    _check(seq, traj)
    benchmark = np.asarray(benchmark, dtype=np.int64)
    if len(benchmark) != seq.t_horizon:
        raise RegretError("benchmark length must equal the horizon")
    if np.any(benchmark < 0) or np.any(benchmark >= seq.k):
        raise RegretError("benchmark arm out of range")
    t = seq.t_horizon
    row_terms = np.empty(t)
    col_terms = np.empty(t)
    for i, m in enumerate(seq.iter_arrays()):
        j, kp, km = benchmark[i], traj.k_plus[i], traj.k_minus[i]
        row_terms[i] = m[j, km] - m[kp, km]
        col_terms[i] = m[j, kp] - m[km, kp]
    row = float(np.sum(row_terms))
    col = float(np.sum(col_terms))
    total = float(np.sum((row_terms + col_terms) / 2.0))
    return RegretReport(kind="dynamic", total=total, row_part=row, column_part=col,
                        benchmark=_benchmark_label(benchmark))


def static_regret(seq: PreferenceSequence, traj: Trajectory, j: int) -> RegretReport:
    """Regret against the single fixed arm j (dynamic with a constant benchmark)."""
    if not (0 <= j < seq.k):
        raise RegretError("arm out of range")
    report = dynamic_regret(seq, traj, np.full(seq.t_horizon, j, dtype=np.int64))
    report.kind = "static"
    report.benchmark = f"fixed:{j}"
    return report


def _per_arm_cums(seq: PreferenceSequence, traj: Trajectory) -> np.ndarray:
    """Cumulative per-arm regret terms sum_t (P_t(j,kp) + P_t(j,km) - 1)/2."""
    cum = np.zeros(seq.k)
    for i, m in enumerate(seq.iter_arrays()):
        cum += (m[:, traj.k_plus[i]] + m[:, traj.k_minus[i]] - 1.0) / 2.0
    return cum


def best_fixed_arm(seq: PreferenceSequence, traj: Trajectory) -> int:
    """Arm maximizing the static regret total; lowest index on ties."""
    _check(seq, traj)
    return int(np.argmax(_per_arm_cums(seq, traj)))


def per_interval_best(seq: PreferenceSequence, traj: Trajectory, boundaries: list[int]) -> np.ndarray:
    """Piecewise-constant benchmark: per-segment best arm in hindsight.

    boundaries are 0-based round indices with an exclusive end, i.e.
    [0, ..., T]."""
    _check(seq, traj)
    if boundaries[0] != 0 or boundaries[-1] != seq.t_horizon or any(
        boundaries[i] >= boundaries[i + 1] for i in range(len(boundaries) - 1)
    ):
        raise RegretError("boundaries must strictly increase from 0 to T")
    benchmark = np.empty(seq.t_horizon, dtype=np.int64)
    seg = 0
    cum = np.zeros(seq.k)
    seg_start = 0
    for i, m in enumerate(seq.iter_arrays()):
        cum += (m[:, traj.k_plus[i]] + m[:, traj.k_minus[i]] - 1.0) / 2.0
        if i + 1 == boundaries[seg + 1]:
            benchmark[seg_start : i + 1] = int(np.argmax(cum))
            cum[:] = 0.0
            seg_start = i + 1
            seg += 1
    return benchmark


def per_step_best(seq: PreferenceSequence, traj: Trajectory) -> np.ndarray:
    """Per-round best-response benchmark; lowest index on ties."""
    _check(seq, traj)
    benchmark = np.empty(seq.t_horizon, dtype=np.int64)
    for i, m in enumerate(seq.iter_arrays()):
        benchmark[i] = int(np.argmax(m[:, traj.k_plus[i]] + m[:, traj.k_minus[i]]))
    return benchmark


def borda_dynamic_regret(seq: PreferenceSequence, traj: Trajectory, benchmark: np.ndarray) -> RegretReport:
    """Dynamic regret in Borda scores against a time-varying benchmark."""
    _check(seq, traj)
    benchmark = np.asarray(benchmark, dtype=np.int64)
    if len(benchmark) != seq.t_horizon:
        raise RegretError("benchmark length must equal the horizon")
    t = seq.t_horizon
    row_terms = np.empty(t)
    col_terms = np.empty(t)
    for i, m in enumerate(seq.iter_arrays()):
        b = (m.sum(axis=1) - 0.5) / (seq.k - 1)
        row_terms[i] = b[benchmark[i]] - b[traj.k_plus[i]]
        col_terms[i] = b[benchmark[i]] - b[traj.k_minus[i]]
    return RegretReport(
        kind="borda_dynamic",
        total=float(np.sum((row_terms + col_terms) / 2.0)),
        row_part=float(np.sum(row_terms)),
        column_part=float(np.sum(col_terms)),
        benchmark=_benchmark_label(benchmark),
    )


def lb_expected_rand_regret(k_arms: int, epsilon: float, t_horizon: int) -> float:
    """Closed-form expected dynamic regret of the uniform baseline against
    the planted winner on a hard segment instance: eps * (K-1)/K * T."""
    if not (0 < epsilon < 0.25):
        raise RegretError("epsilon must lie in (0, 0.25)")
    if k_arms < 3:
        raise RegretError("need k_arms >= 3")
    return epsilon * (k_arms - 1) / k_arms * t_horizon


def _benchmark_label(benchmark: np.ndarray) -> str:
    first = int(benchmark[0])
    if np.all(benchmark == first):
        return f"fixed:{first}"
    return "sequence"
