"""Sparring learners vs a random baseline on a drifting environment.

Runs DEX3P (static schedule) and RAND on a slowly drifting preference
matrix across a small horizon grid, then prints mean static regret and the
fitted log-log growth exponent. The learner's exponent should sit clearly
below RAND's linear growth (it approaches 1/2 at larger horizons).
"""

import numpy as np

from duelsim import EnvSpec, run_episode

K = 8
GRID = [512, 1024, 2048, 4096, 8192]
SEEDS = range(8)

policies = {
    "DEX3P": {"kind": "DEX3P", "schedule": "static"},
    "RAND": {"kind": "RAND"},
}

means = {name: [] for name in policies}
for t in GRID:
    spec = EnvSpec(kind="gaussian_walk", k=K, t_horizon=t, seed=0)
    for name, cfg in policies.items():
        totals = [
            run_episode(spec, cfg, seed=s, benchmarks=("best_fixed",),
                        regret_kinds=("static",), retain_trajectory=False).reports[0].total
            for s in SEEDS
        ]
        means[name].append(np.mean(totals))

print(f"{'T':>6s}  " + "  ".join(f"{n:>10s}" for n in policies))
for i, t in enumerate(GRID):
    print(f"{t:>6d}  " + "  ".join(f"{means[n][i]:>10.1f}" for n in policies))

logt = np.log(GRID)
for name in policies:
    slope = np.polyfit(logt, np.log(means[name]), 1)[0]
    print(f"{name}: regret ~ T^{slope:.2f}")
