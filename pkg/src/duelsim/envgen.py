"""Environment generators: random walks, switching walks, budgeted drift,
and the adversarial segment instances with their epsilon tuning formulas.

All generators are pure functions of (spec, seed): the same spec always
yields the same sequence, and sequences are produced lazily one matrix at a
time so memory stays O(K^2) at any horizon.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .prefmat import (
    EQ_TOL,
    PreferenceSequence,
    SequenceMeta,
    fill_from_upper,
)

KINDS = ("gaussian_walk", "switching_walk", "continuous_budget", "lower_bound")

# Hypothesis of the adversarial-instance theorems: epsilon in (0, 1/4).
EPS_MAX = 0.25


class EnvSpecError(ValueError):
    """Raised for invalid environment specifications."""


@dataclass(frozen=True)
class EnvSpec:
    """Parameters of one environment family.

    sigma applies to the walk kinds, s_switches to switching_walk and
    lower_bound, v_budget to continuous_budget and lower_bound, epsilon to
    lower_bound (computed from the budget formulas when absent).
    """

    kind: str
    k: int
    t_horizon: int
    seed: int
    sigma: float | None = None
    s_switches: int | None = None
    v_budget: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EnvSpecError(f"unknown kind {self.kind!r}")
        if self.k < 2:
            raise EnvSpecError("k must be >= 2")
        if self.t_horizon < 1:
            raise EnvSpecError("t_horizon must be >= 1")
        if self.sigma is not None and self.sigma <= 0:
            raise EnvSpecError("sigma must be positive")
        if self.v_budget is not None and self.v_budget < 0:
            raise EnvSpecError("v_budget must be >= 0")
        if self.epsilon is not None and not (0 < self.epsilon < 0.5):
            raise EnvSpecError("epsilon must lie in (0, 0.5)")

    @staticmethod
    def from_json(doc: dict | str) -> "EnvSpec":
        if isinstance(doc, str):
            doc = json.loads(doc)
        allowed = {"kind", "k", "t_horizon", "seed", "sigma", "s_switches", "v_budget", "epsilon"}
        unknown = set(doc) - allowed
        if unknown:
            raise EnvSpecError(f"unknown EnvSpec fields: {sorted(unknown)}")
        return EnvSpec(**doc)

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "k": self.k, "t_horizon": self.t_horizon, "seed": self.seed}
        for name in ("sigma", "s_switches", "v_budget", "epsilon"):
            v = getattr(self, name)
            if v is not None:
                doc[name] = v
        return doc


def _env_rng(spec: EnvSpec) -> np.random.Generator:
    # Philox is counter-based and platform-stable; see README for test vectors.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([spec.seed, 0xE17])))


def _walk_iter(spec: EnvSpec, sigma: float, step_mask) -> Iterator[np.ndarray]:
    """Shared walk machinery: uniform start, Gaussian increments on the upper
    triangle at masked steps, clip to [0,1], then fill complements."""
    rng = _env_rng(spec)
    n_pairs = spec.k * (spec.k - 1) // 2
    upper = rng.uniform(0.0, 1.0, n_pairs)
    yield fill_from_upper(upper, spec.k)
    for t in range(1, spec.t_horizon):
        if step_mask(t):
            upper = np.clip(upper + rng.normal(0.0, sigma, n_pairs), 0.0, 1.0)
        yield fill_from_upper(upper, spec.k)


def gaussian_walk(spec: EnvSpec) -> PreferenceSequence:
    """Upper-triangle entries start Uniform(0,1) and take i.i.d. Gaussian
    steps of standard deviation sigma (default 0.002) every round."""
    if spec.kind != "gaussian_walk":
        raise EnvSpecError("spec kind must be gaussian_walk")
    sigma = spec.sigma if spec.sigma is not None else 0.002
    meta = SequenceMeta(generator="gaussian_walk", seed=spec.seed, sigma=sigma)
    return PreferenceSequence(
        spec.k, spec.t_horizon, factory=lambda: _walk_iter(spec, sigma, lambda t: True), meta=meta
    )


def switching_walk(spec: EnvSpec) -> PreferenceSequence:
    """Piecewise-constant walk: Gaussian jumps (default sigma 0.05) only when
    forming the matrix after each multiple of floor(T / (S - 1)) rounds."""
    if spec.kind != "switching_walk":
        raise EnvSpecError("spec kind must be switching_walk")
    if spec.s_switches is None or spec.s_switches < 2:
        raise EnvSpecError("switching_walk needs s_switches >= 2")
    sigma = spec.sigma if spec.sigma is not None else 0.05
    period = spec.t_horizon // (spec.s_switches - 1)
    if period < 1:
        raise EnvSpecError("s_switches too large for the horizon")
    # Matrix t (0-based) jumps iff t is a positive multiple of the period.
    boundaries = list(range(0, spec.t_horizon, period))
    if boundaries[-1] != spec.t_horizon:
        boundaries.append(spec.t_horizon)
    meta = SequenceMeta(
        generator="switching_walk",
        seed=spec.seed,
        sigma=sigma,
        s_declared=spec.s_switches,
        boundaries=boundaries,
    )
    return PreferenceSequence(
        spec.k,
        spec.t_horizon,
        factory=lambda: _walk_iter(spec, sigma, lambda t: t % period == 0),
        meta=meta,
    )


def _budget_iter(spec: EnvSpec, v_budget: float) -> Iterator[np.ndarray]:
    rng = _env_rng(spec)
    n_pairs = spec.k * (spec.k - 1) // 2
    upper = rng.uniform(0.0, 1.0, n_pairs)
    # One flat-Dirichlet draw allocates the budget across the T-1 transitions,
    # so the declared per-step maxima sum to the budget exactly.
    mu = rng.dirichlet(np.ones(spec.t_horizon - 1)) if spec.t_horizon > 1 else np.empty(0)
    yield fill_from_upper(upper, spec.k)
    for t in range(1, spec.t_horizon):
        # Signed uniform perturbation rescaled so its max |entry| equals the
        # declared step budget; clipping afterwards can only shrink changes.
        direction = rng.uniform(-1.0, 1.0, n_pairs)
        peak = np.max(np.abs(direction))
        if peak > 0:
            direction *= (mu[t - 1] * v_budget) / peak
        upper = np.clip(upper + direction, 0.0, 1.0)
        yield fill_from_upper(upper, spec.k)


def continuous_budget(spec: EnvSpec) -> PreferenceSequence:
    """Drifting environment whose declared per-step max changes sum to the
    budget V_T exactly (Dirichlet allocation over steps)."""
    if spec.kind != "continuous_budget":
        raise EnvSpecError("spec kind must be continuous_budget")
    if spec.v_budget is None:
        raise EnvSpecError("continuous_budget needs v_budget")
    v = spec.v_budget
    meta = SequenceMeta(generator="continuous_budget", seed=spec.seed, v_declared=v)
    return PreferenceSequence(
        spec.k, spec.t_horizon, factory=lambda: _budget_iter(spec, v), meta=meta
    )


def _segment_lengths(t_horizon: int, s: int) -> list[int]:
    # First (T mod S) segments get the ceiling length, the rest the floor.
    base, extra = divmod(t_horizon, s)
    return [base + 1] * extra + [base] * (s - extra)


def _lb_segment_upper(k: int, winner: int, epsilon: float) -> np.ndarray:
    upper = np.empty(k * (k - 1) // 2)
    idx = 0
    for i in range(k):
        for j in range(i + 1, k):
            if i == winner or (i == 0 and j != winner):
                upper[idx] = 0.5 + epsilon
            elif j == 0 or j == winner:
                upper[idx] = 0.5 - epsilon
            else:
                upper[idx] = 0.5
            idx += 1
    return upper


def _lb_iter(spec: EnvSpec, lengths: list[int], winners: list[int], epsilon: float) -> Iterator[np.ndarray]:
    for length, winner in zip(lengths, winners):
        m = fill_from_upper(_lb_segment_upper(spec.k, winner, epsilon), spec.k)
        for _ in range(length):
            yield m


def lower_bound_instance(spec: EnvSpec) -> PreferenceSequence:
    """Hard segment instances: per segment a planted winner (never arm 0)
    beats everyone by epsilon, arm 0 beats the rest, others tie at 0.5."""
    if spec.kind != "lower_bound":
        raise EnvSpecError("spec kind must be lower_bound")
    if spec.k < 3:
        raise EnvSpecError("lower_bound needs k >= 3")
    s = spec.s_switches if spec.s_switches is not None else 1
    if s < 1 or s > spec.t_horizon:
        raise EnvSpecError("need 1 <= s_switches <= t_horizon")
    if spec.epsilon is not None:
        epsilon = spec.epsilon
        if epsilon > EPS_MAX:
            raise EnvSpecError(f"epsilon must be <= {EPS_MAX}")
    elif spec.v_budget is not None:
        epsilon, _ = lb_epsilon("continuous", spec.k, spec.t_horizon, v_budget=spec.v_budget)
    else:
        epsilon, _ = lb_epsilon("switching", spec.k, spec.t_horizon, s_switches=s)
    rng = _env_rng(spec)
    winners = [int(rng.integers(1, spec.k)) for _ in range(s)]
    lengths = _segment_lengths(spec.t_horizon, s)
    boundaries = [0]
    for length in lengths:
        boundaries.append(boundaries[-1] + length)
    meta = SequenceMeta(
        generator="lower_bound",
        seed=spec.seed,
        s_declared=s,
        v_declared=spec.v_budget,
        boundaries=boundaries,
        winners=winners,
        epsilon=epsilon,
    )
    return PreferenceSequence(
        spec.k,
        spec.t_horizon,
        factory=lambda: _lb_iter(spec, lengths, winners, epsilon),
        meta=meta,
    )


def lb_epsilon(
    kind: str,
    k: int,
    t_horizon: int,
    s_switches: int | None = None,
    v_budget: float | None = None,
) -> tuple[float, int | None]:
    """Gap size for the adversarial instances, clamped into (0, 1/4).

    switching: eps = (1/2) sqrt(S (K-1) / (T ln(4/3))).
    continuous: segment length Delta = K^(-5/3) (T/V)^(2/3) rounded half-up
    (min 1), then eps = min{V / (2 ceil(T/Delta)), 1 / (16 sqrt(Delta K ln(4/3)))}.
    Returns (epsilon, Delta) with Delta = None for the switching kind.
    """
    if k < 3 or t_horizon < 1:
        raise EnvSpecError("need k >= 3 and t_horizon >= 1")
    ln43 = math.log(4.0 / 3.0)
    if kind == "switching":
        if s_switches is None or s_switches < 1:
            raise EnvSpecError("switching kind needs s_switches >= 1")
        eps = 0.5 * math.sqrt(s_switches * (k - 1) / (t_horizon * ln43))
        delta = None
    elif kind == "continuous":
        if v_budget is None or v_budget <= 0:
            raise EnvSpecError("continuous kind needs v_budget > 0")
        raw = (t_horizon / v_budget) ** (2.0 / 3.0) / k ** (5.0 / 3.0)
        delta = max(1, math.floor(raw + 0.5))
        n_segments = math.ceil(t_horizon / delta)
        eps = min(v_budget / (2.0 * n_segments), 1.0 / (16.0 * math.sqrt(delta * k * ln43)))
    else:
        raise EnvSpecError(f"unknown lb_epsilon kind {kind!r}")
    if eps <= 0:
        raise EnvSpecError("parameters imply epsilon <= 0")
    eps = min(eps, EPS_MAX - 1e-9)
    return eps, delta


_GENERATORS = {
    "gaussian_walk": gaussian_walk,
    "switching_walk": switching_walk,
    "continuous_budget": continuous_budget,
    "lower_bound": lower_bound_instance,
}


def generate(spec: EnvSpec) -> PreferenceSequence:
    """Dispatch to the generator for spec.kind."""
    return _GENERATORS[spec.kind](spec)
