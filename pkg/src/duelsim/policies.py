"""Learner algorithms: sparring exponential-weights players, reward
estimators, weight-update rules, parameter schedules, and baselines.

Both weight-update rules are degree-1 homogeneous, so weights are
renormalized to sum 1 after every update; this leaves the sampling
distributions unchanged while preventing overflow at long horizons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .prefmat import PreferenceMatrix, sample_outcome

SCHEDULES = (
    "static",
    "switching_known",
    "switching_unknown",
    "continuous",
    "borda",
    "manual",
    "expected_regret",
)

POLICY_KINDS = ("DEX3P", "DEX3S", "BordaDEX3S", "RAND", "REX3")

SUM_TOL = 1e-12


class ScheduleError(ValueError):
    """Raised when a parameter schedule violates its admissibility condition."""


@dataclass(frozen=True)
class PolicyParams:
    """Tuning bundle (learning rate, estimator bias, exploration, mixing)."""

    eta: float
    beta: float
    gamma: float
    alpha: float
    delta: float = 0.1
    schedule: str = "manual"

    def __post_init__(self):
        if self.eta <= 0:
            raise ScheduleError("eta must be positive")
        if not (0 <= self.beta < 1):
            raise ScheduleError("beta must lie in [0, 1)")
        if not (0 <= self.gamma < 1):
            raise ScheduleError("gamma must lie in [0, 1)")
        if not (0 <= self.alpha < 1):
            raise ScheduleError("alpha must lie in [0, 1)")
        if not (0 < self.delta < 1):
            raise ScheduleError("delta must lie in (0, 1)")
        if self.schedule not in SCHEDULES:
            raise ScheduleError(f"unknown schedule {self.schedule!r}")

    def check_admissible(self, k: int, borda: bool = False) -> None:
        """Admissibility of the exploration floor for K arms."""
        if borda:
            if self.gamma**2 < (1 + self.gamma * self.beta) * self.eta * k - 1e-15:
                raise ScheduleError("borda schedule needs gamma^2 >= (1 + gamma*beta)*eta*K")
        else:
            if self.gamma < (1 + self.beta) * self.eta * k - 1e-15:
                raise ScheduleError("schedule needs gamma >= (1 + beta)*eta*K")


def schedule(
    kind: str,
    k_arms: int,
    t_horizon: int,
    s_switches: int | None = None,
    v_budget: float | None = None,
    delta: float | None = None,
) -> PolicyParams:
    """Theorem-prescribed parameter settings.

    static:            eta = (1/2) sqrt(ln K / KT), beta = 2 eta, alpha = 0
    switching_known:   beta = eta = sqrt(S / KT), alpha = 1/T
    switching_unknown: beta = eta = 1 / sqrt(KT), alpha = 1/T
    continuous:        beta = eta = V^(1/3) / (4 K^(2/3) T^(1/3)), alpha = 1/T
    borda:             eta = (S ln K / (T sqrt(2K)))^(2/3), alpha = 1/(KT),
                       beta = S^(1/3) sqrt(ln(2K/delta)) / ((2 eta)^(1/4) K^(3/4) sqrt(T))
    gamma is 2 eta K except for borda, which uses sqrt(2 eta K).
    expected_regret is switching_known with delta = 1/T.
    """
    if k_arms < 2 or t_horizon < 1:
        raise ScheduleError("need k_arms >= 2 and t_horizon >= 1")
    kt = k_arms * t_horizon
    if kind == "expected_regret":
        params = schedule("switching_known", k_arms, t_horizon, s_switches=s_switches, delta=1.0 / t_horizon)
        return replace(params, schedule="expected_regret")
    if delta is None:
        delta = 0.1
    if kind == "static":
        eta = 0.5 * math.sqrt(math.log(k_arms) / kt)
        beta = 2.0 * eta
        gamma = 2.0 * eta * k_arms
        alpha = 0.0
    elif kind == "switching_known":
        if s_switches is None or s_switches < 1:
            raise ScheduleError("switching_known needs s_switches >= 1")
        beta = eta = math.sqrt(s_switches / kt)
        gamma = 2.0 * eta * k_arms
        alpha = 1.0 / t_horizon
    elif kind == "switching_unknown":
        beta = eta = 1.0 / math.sqrt(kt)
        gamma = 2.0 * eta * k_arms
        alpha = 1.0 / t_horizon
    elif kind == "continuous":
        if v_budget is None or v_budget <= 0:
            raise ScheduleError("continuous needs v_budget > 0")
        beta = eta = v_budget ** (1.0 / 3.0) / (4.0 * k_arms ** (2.0 / 3.0) * t_horizon ** (1.0 / 3.0))
        gamma = 2.0 * eta * k_arms
        alpha = 1.0 / t_horizon
    elif kind == "borda":
        if s_switches is None or s_switches < 1:
            raise ScheduleError("borda needs s_switches >= 1")
        eta = (s_switches * math.log(k_arms) / (t_horizon * math.sqrt(2.0 * k_arms))) ** (2.0 / 3.0)
        beta = (
            s_switches ** (1.0 / 3.0)
            * math.sqrt(math.log(2.0 * k_arms / delta))
            / ((2.0 * eta) ** 0.25 * k_arms**0.75 * math.sqrt(t_horizon))
        )
        gamma = math.sqrt(2.0 * eta * k_arms)
        alpha = 1.0 / kt
    else:
        raise ScheduleError(f"unknown schedule kind {kind!r}")
    params = PolicyParams(eta=eta, beta=beta, gamma=gamma, alpha=alpha, delta=delta, schedule=kind)
    params.check_admissible(k_arms, borda=(kind == "borda"))
    return params


def rex3_gamma(k_arms: int, t_horizon: int) -> float:
    """Exploration rate of the relative-estimate baseline."""
    return math.sqrt(2.0 * k_arms * math.log(k_arms) / (math.e * t_horizon))


def mixed_distribution(weights: np.ndarray, gamma: float) -> np.ndarray:
    """Exploration-mixed sampling distribution (1-gamma) W/sum(W) + gamma/K."""
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive and finite")
    return (1.0 - gamma) * w / w.sum() + gamma / w.size


def estimate_g(reward: int, p_k: float, chosen: bool, beta: float) -> float:
    """Importance-weighted reward estimate with the additive bias term."""
    if p_k <= 0:
        raise ValueError("p_k must be positive")
    return (reward + beta) / p_k if chosen else beta / p_k


def exp3_update(weights: np.ndarray, g_hat: np.ndarray, eta: float) -> np.ndarray:
    """Multiplicative-weights step W(k) * exp(eta g(k)), renormalized to sum 1."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not np.all(np.isfinite(g_hat)):
        raise ValueError("g_hat must be finite")
    with np.errstate(over="ignore"):
        w = weights * np.exp(eta * np.asarray(g_hat, dtype=np.float64))
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise OverflowError("weight update overflowed; eta * g_hat out of admissible range")
    return w / total


def dex3s_update(weights: np.ndarray, g_hat: np.ndarray, eta: float, alpha: float) -> np.ndarray:
    """Switching-aware update: exponential step plus the e*alpha*sum(W) share
    injected into every arm, renormalized to sum 1."""
    if not (0 <= alpha < 1):
        raise ValueError("alpha must lie in [0, 1)")
    with np.errstate(over="ignore"):
        w = weights * np.exp(eta * np.asarray(g_hat, dtype=np.float64))
    w = w + math.e * alpha * weights.sum()
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise OverflowError("weight update overflowed; eta * g_hat out of admissible range")
    return w / total


def borda_estimate(
    k: int,
    own_draw: int,
    opp_draw: int,
    o: int,
    p_own: np.ndarray,
    p_opp: np.ndarray,
    beta: float,
    k_arms: int,
) -> float:
    """Borda-score estimate for arm k given both players' draws.

    The inner sum over opponent arms collapses to the single drawn arm."""
    if p_own[k] <= 0 or p_opp[opp_draw] <= 0:
        raise ValueError("sampling probabilities must be positive")
    value = beta / p_own[k]
    if own_draw == k:
        value += o / (k_arms * p_own[k] * p_opp[opp_draw])
    return value


def _draw(p: np.ndarray, rng: np.random.Generator) -> int:
    # Inverse-CDF draw consuming exactly one uniform.
    i = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
    return min(i, p.size - 1)


@dataclass
class PlayerState:
    """One sparring player's exponential-weights state.

    Weights are kept normalized to sum 1; log_scale accumulates the logs of
    the discarded normalization factors."""

    weights: np.ndarray
    log_scale: float = 0.0

    @staticmethod
    def uniform(k: int) -> "PlayerState":
        return PlayerState(weights=np.full(k, 1.0 / k))


class SparringPolicy:
    """Two exponential-weights players dueling each other.

    kind selects the weight rule and estimator: DEX3P (plain exponential
    step), DEX3S (adds the alpha mixing share), BordaDEX3S (DEX3S update on
    Borda-score estimates)."""

    def __init__(self, kind: str, k_arms: int, params: PolicyParams, record_gains: bool = False):
        if kind not in ("DEX3P", "DEX3S", "BordaDEX3S"):
            raise ValueError(f"not a sparring kind: {kind!r}")
        self.kind = kind
        self.k = k_arms
        self.params = params
        self.row = PlayerState.uniform(k_arms)
        self.column = PlayerState.uniform(k_arms)
        self.record_gains = record_gains
        self.row_gain_sums = np.zeros(k_arms) if record_gains else None
        self._p_row: np.ndarray | None = None
        self._p_col: np.ndarray | None = None

    def distributions(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.params.gamma
        p_row = (1.0 - g) * self.row.weights + g / self.k
        p_col = (1.0 - g) * self.column.weights + g / self.k
        return p_row, p_col

    def draw_pair(self, rng: np.random.Generator) -> tuple[int, int]:
        """Sample both arms: row first, then column (fixed stream order)."""
        self._p_row, self._p_col = self.distributions()
        k_plus = _draw(self._p_row, rng)
        k_minus = _draw(self._p_col, rng)
        return k_plus, k_minus

    def update(self, k_plus: int, k_minus: int, o: int) -> None:
        params = self.params
        if self.kind == "BordaDEX3S":
            g_row = params.beta / self._p_row
            g_row[k_plus] += o / (self.k * self._p_row[k_plus] * self._p_col[k_minus])
            g_col = params.beta / self._p_col
            g_col[k_minus] += (1 - o) / (self.k * self._p_col[k_minus] * self._p_row[k_plus])
        else:
            g_row = params.beta / self._p_row
            g_row[k_plus] += o / self._p_row[k_plus]
            g_col = params.beta / self._p_col
            g_col[k_minus] += (1 - o) / self._p_col[k_minus]
        if self.record_gains:
            self.row_gain_sums += g_row
        if self.kind == "DEX3P":
            self.row.weights = exp3_update(self.row.weights, g_row, params.eta)
            self.column.weights = exp3_update(self.column.weights, g_col, params.eta)
        else:
            self.row.weights = dex3s_update(self.row.weights, g_row, params.eta, params.alpha)
            self.column.weights = dex3s_update(self.column.weights, g_col, params.eta, params.alpha)


class RandPolicy:
    """Uniform baseline: both arms drawn i.i.d. uniform each round."""

    kind = "RAND"

    def __init__(self, k_arms: int):
        if k_arms < 2:
            raise ValueError("need at least 2 arms")
        self.k = k_arms

    def draw_pair(self, rng: np.random.Generator) -> tuple[int, int]:
        return rand_round(self.k, rng)

    def update(self, k_plus: int, k_minus: int, o: int) -> None:
        pass


def rand_round(k_arms: int, rng: np.random.Generator) -> tuple[int, int]:
    """Two i.i.d. uniform arm draws."""
    if k_arms < 2:
        raise ValueError("need at least 2 arms")
    return int(rng.integers(k_arms)), int(rng.integers(k_arms))


class Rex3Policy:
    """Relative-estimate baseline: one weight vector, both arms i.i.d. from
    the gamma-mixed distribution, update W(k) *= exp((gamma/K) c(k)) with
    c(a) += (o - 1/2)/p(a) and c(b) += (1/2 - o)/p(b)."""

    kind = "REX3"

    def __init__(self, k_arms: int, gamma: float):
        if not (0 < gamma < 1):
            raise ValueError("gamma must lie in (0, 1)")
        self.k = k_arms
        self.gamma = gamma
        self.weights = np.full(k_arms, 1.0 / k_arms)
        self._p: np.ndarray | None = None

    def distribution(self) -> np.ndarray:
        return (1.0 - self.gamma) * self.weights + self.gamma / self.k

    def draw_pair(self, rng: np.random.Generator) -> tuple[int, int]:
        self._p = self.distribution()
        a = _draw(self._p, rng)
        b = _draw(self._p, rng)
        return a, b

    def update(self, k_plus: int, k_minus: int, o: int) -> None:
        c = np.zeros(self.k)
        c[k_plus] += (o - 0.5) / self._p[k_plus]
        c[k_minus] += (0.5 - o) / self._p[k_minus]
        self.weights = exp3_update(self.weights, c, self.gamma / self.k)


def sparring_round(
    policy: SparringPolicy,
    matrix: PreferenceMatrix | np.ndarray,
    rng: np.random.Generator,
    outcome_rng: np.random.Generator | None = None,
) -> tuple[int, int, int]:
    """One full round: row draw, column draw, outcome draw, weight updates."""
    k_plus, k_minus = policy.draw_pair(rng)
    o = sample_outcome(matrix, k_plus, k_minus, outcome_rng if outcome_rng is not None else rng)
    policy.update(k_plus, k_minus, o)
    return k_plus, k_minus, o


def rex3_round(
    policy: Rex3Policy,
    matrix: PreferenceMatrix | np.ndarray,
    rng: np.random.Generator,
    outcome_rng: np.random.Generator | None = None,
) -> tuple[int, int, int]:
    """One round of the relative-estimate baseline."""
    a, b = policy.draw_pair(rng)
    o = sample_outcome(matrix, a, b, outcome_rng if outcome_rng is not None else rng)
    policy.update(a, b, o)
    return a, b, o


def make_policy(config: dict, k_arms: int, t_horizon: int):
    """Build a policy from its JSON configuration.

    Config keys: kind, schedule, and optional explicit eta/beta/gamma/alpha/
    delta overriding the schedule (schedule "manual" requires the first four).
    Schedule arguments s_switches / v_budget are read from the config too.
    """
    allowed = {"kind", "schedule", "eta", "beta", "gamma", "alpha", "delta", "s_switches", "v_budget", "name"}
    unknown = set(config) - allowed
    if unknown:
        raise ValueError(f"unknown policy config fields: {sorted(unknown)}")
    kind = config.get("kind")
    if kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy kind {kind!r}")
    if kind == "RAND":
        return RandPolicy(k_arms)
    if kind == "REX3":
        gamma = config.get("gamma", rex3_gamma(k_arms, t_horizon))
        return Rex3Policy(k_arms, gamma)
    sched = config.get("schedule", "manual")
    if sched == "manual":
        missing = [f for f in ("eta", "beta", "gamma", "alpha") if f not in config]
        if missing:
            raise ValueError(f"manual schedule requires explicit {missing}")
        params = PolicyParams(
            eta=config["eta"],
            beta=config["beta"],
            gamma=config["gamma"],
            alpha=config["alpha"],
            delta=config.get("delta", 0.1),
            schedule="manual",
        )
    else:
        params = schedule(
            sched,
            k_arms,
            t_horizon,
            s_switches=config.get("s_switches"),
            v_budget=config.get("v_budget"),
            delta=config.get("delta"),
        )
        overrides = {f: config[f] for f in ("eta", "beta", "gamma", "alpha", "delta") if f in config}
        if overrides:
            params = replace(params, **overrides)
    return SparringPolicy(kind, k_arms, params)


def policy_config_from_json(text: str) -> dict:
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("policy config must be a JSON object")
    return doc
