"""Hard instances and the closed-form regret of uniform play.

Builds the adversarial switching instance with its calibrated gap epsilon,
then checks the simulated dynamic regret of uniform random play against the
closed form eps * (K-1) * T / K.
"""

import numpy as np

from duelsim import EnvSpec, generate, lb_expected_rand_regret, run_episode

K, T, S = 4, 5000, 2
spec = EnvSpec(kind="lower_bound", k=K, t_horizon=T, seed=7, s_switches=S)
seq = generate(spec)

totals = []
for seed in range(30):
    res = run_episode(spec, {"kind": "RAND"}, seed=seed,
                      benchmarks=("lb_benchmark",), regret_kinds=("dynamic",),
                      retain_trajectory=False)
    totals.append(res.reports[0].total)
totals = np.asarray(totals)

eps = seq.meta.epsilon
expected = lb_expected_rand_regret(K, eps, T)
se = totals.std(ddof=1) / np.sqrt(len(totals))

print(f"calibrated epsilon: {eps:.5f}")
print(f"planted winners:    {seq.meta.winners} over segments {seq.meta.boundaries}")
print(f"simulated mean:     {totals.mean():.2f} (se {se:.2f})")
print(f"closed form:        {expected:.2f}")
print(f"z-score:            {(totals.mean() - expected) / se:+.2f}")
