"""Simulation library for non-stationary dueling bandits: sparring
exponential-weights policies, drifting and adversarial environments, and
static/dynamic/Borda regret accounting."""

from .envgen import EnvSpec, EnvSpecError, generate, lb_epsilon, lower_bound_instance
from .harness import ExperimentConfig, aggregate_episodes, loglog_slope, run_config
from .policies import PolicyParams, RandPolicy, Rex3Policy, SparringPolicy, make_policy, schedule
from .prefmat import (
    PreferenceMatrix,
    PreferenceMatrixError,
    PreferenceSequence,
    borda_scores,
    condorcet_winner,
    continuous_variation,
    from_upper_triangle,
    sample_outcome,
    sequence_from_json,
    sequence_to_json,
    switching_variation,
)
from .regret import (
    RegretReport,
    Trajectory,
    best_fixed_arm,
    borda_dynamic_regret,
    dynamic_regret,
    lb_expected_rand_regret,
    per_interval_best,
    per_step_best,
    static_regret,
)
from .simulate import EpisodeResult, run_episode, split_stream

__all__ = [
    "EnvSpec",
    "EnvSpecError",
    "EpisodeResult",
    "ExperimentConfig",
    "PolicyParams",
    "PreferenceMatrix",
    "PreferenceMatrixError",
    "PreferenceSequence",
    "RandPolicy",
    "RegretReport",
    "Rex3Policy",
    "SparringPolicy",
    "Trajectory",
    "aggregate_episodes",
    "best_fixed_arm",
    "borda_dynamic_regret",
    "borda_scores",
    "condorcet_winner",
    "continuous_variation",
    "dynamic_regret",
    "from_upper_triangle",
    "generate",
    "lb_epsilon",
    "lb_expected_rand_regret",
    "loglog_slope",
    "lower_bound_instance",
    "make_policy",
    "per_interval_best",
    "per_step_best",
    "run_config",
    "run_episode",
    "sample_outcome",
    "schedule",
    "sequence_from_json",
    "sequence_to_json",
    "split_stream",
    "static_regret",
    "switching_variation",
]

__version__ = "0.1.0"
