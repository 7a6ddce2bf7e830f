import json
import math
import subprocess
import sys

import numpy as np
import pytest

from duelsim import harness
from duelsim.harness import (
    AGGREGATE_HEADER,
    EPISODE_HEADER,
    ConfigError,
    ExperimentConfig,
    aggregate_episodes,
    episode_seed,
    loglog_slope,
    run_config,
)


def small_config(tmp_path, **overrides):
    doc = {
        "name": "unit",
        "env": {"kind": "gaussian_walk", "k": 3, "t_horizon": 64},
        "policies": [{"kind": "RAND"}],
        "grid": {"axis": "T", "values": [64]},
        "repetitions": 1,
        "base_seed": 7,
        "benchmarks": ["best_fixed"],
        "regret_kinds": ["static"],
        "output": str(tmp_path / "out"),
    }
    doc.update(overrides)
    return ExperimentConfig.from_json(doc)


class TestConfig:
    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_json(
                {"name": "x", "env": {}, "policies": [], "grid": {}, "output": "o", "foo": 1}
            )

    def test_missing_field_reported_by_path(self):
        with pytest.raises(ConfigError, match="policies"):
            ExperimentConfig.from_json({"name": "x", "env": {}, "grid": {}, "output": "o"})

    def test_grid_must_increase(self, tmp_path):
        with pytest.raises(ConfigError, match="grid.values"):
            small_config(tmp_path, grid={"axis": "T", "values": [64, 64]})

    def test_bad_benchmark(self, tmp_path):
        with pytest.raises(ConfigError, match="benchmark"):
            small_config(tmp_path, benchmarks=["oracle"])


class TestSeedDerivation:
    def test_deterministic(self):
        assert episode_seed(7, 4096, 3) == episode_seed(7, 4096, 3)

    def test_distinct_across_reps_and_grid(self):
        seeds = {episode_seed(7, g, r) for g in (64, 128, 256) for r in range(10)}
        assert len(seeds) == 30

    def test_policy_independent(self, tmp_path):
        # adding a policy must not change another policy's episode seeds
        cfg1 = small_config(tmp_path, output=str(tmp_path / "a"))
        cfg2 = small_config(
            tmp_path,
            output=str(tmp_path / "b"),
            policies=[{"kind": "RAND"}, {"kind": "DEX3P", "schedule": "static"}],
        )
        ep1, _ = run_config(cfg1)
        ep2, _ = run_config(cfg2)
        row1 = open(ep1).read().splitlines()[1]
        row2 = next(l for l in open(ep2).read().splitlines()[1:] if ",RAND," in l)
        assert row1 == row2


class TestRunConfig:
    def test_cardinality_single_point(self, tmp_path):
        episodes, aggregate = run_config(small_config(tmp_path))
        ep_lines = open(episodes).read().splitlines()
        ag_lines = open(aggregate).read().splitlines()
        assert ep_lines[0] == EPISODE_HEADER
        assert ag_lines[0] == AGGREGATE_HEADER
        assert len(ep_lines) == 2
        assert len(ag_lines) == 2

    def test_rerun_byte_identical(self, tmp_path):
        cfg = small_config(tmp_path, repetitions=3,
                           policies=[{"kind": "DEX3P", "schedule": "static"}])
        first = [open(p, "rb").read() for p in run_config(cfg)]
        second = [open(p, "rb").read() for p in run_config(cfg)]
        assert first == second

    def test_parallel_matches_serial(self, tmp_path):
        cfg = small_config(
            tmp_path, repetitions=4, grid={"axis": "T", "values": [32, 64]},
            policies=[{"kind": "RAND"}, {"kind": "DEX3P", "schedule": "static"}],
        )
        serial = [open(p, "rb").read() for p in run_config(cfg, max_workers=1)]
        parallel = [open(p, "rb").read() for p in run_config(cfg, max_workers=4)]
        assert serial == parallel

    def test_reaggregation_bitwise(self, tmp_path):
        cfg = small_config(tmp_path, repetitions=5)
        episodes, aggregate = run_config(cfg)
        assert aggregate_episodes(open(episodes).read()) == open(aggregate).read()

    def test_std_ddof1_and_n1_zero(self, tmp_path):
        cfg = small_config(tmp_path, repetitions=4)
        episodes, aggregate = run_config(cfg)
        totals = [float(l.split(",")[13]) for l in open(episodes).read().splitlines()[1:]]
        row = open(aggregate).read().splitlines()[1].split(",")
        assert float(row[8]) == pytest.approx(np.mean(totals))
        assert float(row[9]) == pytest.approx(np.std(totals, ddof=1))
        _, agg1 = run_config(small_config(tmp_path, repetitions=1, output=str(tmp_path / "o1")))
        assert open(agg1).read().splitlines()[1].split(",")[9] == "0.0"

    def test_k_sweep(self, tmp_path):
        cfg = small_config(
            tmp_path, grid={"axis": "K", "values": [3, 5]},
            env={"kind": "gaussian_walk", "k": 3, "t_horizon": 32},
        )
        episodes, _ = run_config(cfg)
        ks = {l.split(",")[3] for l in open(episodes).read().splitlines()[1:]}
        assert ks == {"3", "5"}


class TestLogLogSlope:
    def rows(self, values, means):
        return [{"t": v, "k": 3, "mean": m} for v, m in zip(values, means)]

    def test_sqrt_power_law(self):
        values = [64, 128, 256, 512]
        slope, err = loglog_slope(self.rows(values, [2.0 * math.sqrt(v) for v in values]), "T")
        assert slope == pytest.approx(0.5, abs=1e-9)
        assert err == pytest.approx(0.0, abs=1e-9)

    def test_two_thirds_power_law(self):
        values = [64, 128, 256]
        slope, _ = loglog_slope(self.rows(values, [0.3 * v ** (2 / 3) for v in values]), "T")
        assert slope == pytest.approx(2 / 3, abs=1e-9)

    def test_constant_means(self):
        slope, _ = loglog_slope(self.rows([64, 128, 256], [5.0, 5.0, 5.0]), "T")
        assert slope == pytest.approx(0.0, abs=1e-12)

    def test_nonpositive_excluded_with_warning(self):
        rows = self.rows([64, 128, 256, 512], [1.0, -2.0, 3.0, 4.0])
        with pytest.warns(UserWarning):
            slope, _ = loglog_slope(rows, "T")
        assert math.isfinite(slope)

    def test_too_few_points(self):
        with pytest.raises(ConfigError):
            loglog_slope(self.rows([64, 128], [1.0, 2.0]), "T")


class TestCli:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "duelsim.cli", *args], capture_output=True, text=True
        )

    def test_lb_eps(self):
        out = self.run_cli("lb-eps", "--kind", "continuous", "--k", "3", "--t", "10000", "--v", "10")
        assert out.returncode == 0
        doc = json.loads(out.stdout)
        assert doc["epsilon"] == pytest.approx(0.008)
        assert doc["segment_length"] == 16

    def test_full_pipeline(self, tmp_path):
        env = tmp_path / "env.json"
        env.write_text(json.dumps({"kind": "gaussian_walk", "k": 3, "t_horizon": 64}))
        cfgp = tmp_path / "cfg.json"
        out = self.run_cli(
            "sweep", "--axis", "T", "--values", "32,64", "--env", str(env),
            "--policy", "RAND", "--reps", "2",
            "--output", str(tmp_path / "res"), "-o", str(cfgp),
        )
        assert out.returncode == 0, out.stderr
        out = self.run_cli("run", str(cfgp))
        assert out.returncode == 0, out.stderr
        out = self.run_cli("report", str(tmp_path / "res.episodes.csv"))
        assert out.returncode == 0, out.stderr
        assert out.stdout.startswith(AGGREGATE_HEADER)

    def test_gen_env(self, tmp_path):
        env = tmp_path / "env.json"
        env.write_text(json.dumps({"kind": "lower_bound", "k": 3, "t_horizon": 10,
                                   "seed": 1, "epsilon": 0.1}))
        seq = tmp_path / "seq.json"
        out = self.run_cli("gen-env", str(env), "-o", str(seq))
        assert out.returncode == 0, out.stderr
        doc = json.loads(seq.read_text())
        assert doc["k"] == 3 and doc["t_horizon"] == 10

    def test_invalid_config_clean_error(self, tmp_path):
        cfgp = tmp_path / "bad.json"
        cfgp.write_text(json.dumps({"name": "x", "bogus": True}))
        out = self.run_cli("run", str(cfgp))
        assert out.returncode == 2
        assert "error:" in out.stderr
