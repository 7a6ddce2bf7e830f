"""Command-line interface.

Subcommands: run (execute an experiment config), sweep (generate a config
over a T or K grid), report (re-aggregate an episode CSV and fit slopes),
gen-env (materialize an environment spec to a sequence file), lb-eps (gap
size for the adversarial instances).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import envgen, harness
from .prefmat import sequence_to_json

DESK_T_GRID = [4096, 8192, 16384, 32768, 65536, 131072]
FULL_T_GRID = [10_000, 31_623, 100_000, 316_228, 1_000_000]


def _cmd_run(args) -> int:
    with open(args.config) as f:
        config = harness.ExperimentConfig.from_json(f.read())
    episodes, aggregate = harness.run_config(config, max_workers=args.workers)
    print(f"wrote {episodes}")
    print(f"wrote {aggregate}")
    return 0


def _parse_policy(text: str) -> dict:
    """kind[:schedule], e.g. dex3s:switching_known."""
    kind, _, schedule = text.partition(":")
    pc = {"kind": kind}
    if schedule:
        pc["schedule"] = schedule
    elif kind in ("DEX3P", "DEX3S", "BordaDEX3S"):
        pc["schedule"] = "static"
    return pc


def _cmd_sweep(args) -> int:
    if args.values:
        values = [int(v) for v in args.values.split(",")]
    elif args.axis == "T":
        values = FULL_T_GRID if args.full_scale else DESK_T_GRID
    else:
        values = [2, 5, 10, 20, 50]
    with open(args.env) as f:
        env = json.load(f)
    config = {
        "name": args.name,
        "env": env,
        "policies": [_parse_policy(p) for p in args.policy],
        "grid": {"axis": args.axis, "values": values},
        "repetitions": args.reps,
        "base_seed": args.base_seed,
        "benchmarks": args.benchmarks.split(","),
        "regret_kinds": args.regret_kinds.split(","),
        "output": args.output,
    }
    harness.ExperimentConfig.from_json(config)  # validate before writing
    text = json.dumps(config, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_report(args) -> int:
    with open(args.episodes) as f:
        episode_text = f.read()
    aggregate_text = harness.aggregate_episodes(episode_text)
    if args.out:
        with open(args.out, "w") as f:
            f.write(aggregate_text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(aggregate_text)
    table = harness.slope_table(aggregate_text, args.axis)
    if table:
        print(f"log-log slopes vs {args.axis}:")
        for row in table:
            print(
                f"  {row['policy']} {row['regret_kind']} {row['benchmark']}: "
                f"{row['slope']:.4f} +/- {row['stderr']:.4f} ({row['points']} points)"
            )
    return 0


def _cmd_gen_env(args) -> int:
    with open(args.envspec) as f:
        spec = envgen.EnvSpec.from_json(f.read())
    seq = envgen.generate(spec)
    text = sequence_to_json(seq, include_matrices=args.materialize or None)
    with open(args.out, "w") as f:
        f.write(text + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_lb_eps(args) -> int:
    eps, delta = envgen.lb_epsilon(
        args.kind, args.k, args.t, s_switches=args.s, v_budget=args.v
    )
    doc = {"epsilon": eps}
    if delta is not None:
        doc["segment_length"] = delta
    print(json.dumps(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duelsim", description="Non-stationary dueling bandit simulations."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment config")
    p.add_argument("config", help="experiment config JSON path")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="generate an experiment config over a grid")
    p.add_argument("--axis", choices=("T", "K"), required=True)
    p.add_argument("--values", help="comma-separated grid values (default: desk-scale grid)")
    p.add_argument("--full-scale", action="store_true", help="use the 1e4..1e6 T grid")
    p.add_argument("--env", required=True, help="environment spec JSON path (template)")
    p.add_argument("--policy", action="append", required=True,
                   help="policy as kind[:schedule]; repeatable")
    p.add_argument("--name", default="sweep")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--benchmarks", default="best_fixed")
    p.add_argument("--regret-kinds", default="static")
    p.add_argument("--output", default="results/sweep", help="result file prefix")
    p.add_argument("-o", "--out", help="config file to write (default: stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="re-aggregate an episode CSV and fit slopes")
    p.add_argument("episodes", help="episode CSV path")
    p.add_argument("--axis", choices=("T", "K"), default="T")
    p.add_argument("-o", "--out", help="aggregate CSV to write (default: stdout)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("gen-env", help="materialize an environment spec")
    p.add_argument("envspec", help="environment spec JSON path")
    p.add_argument("-o", "--out", required=True, help="sequence JSON to write")
    p.add_argument("--materialize", action="store_true",
                   help="embed matrices even when regenerable from seed")
    p.set_defaults(func=_cmd_gen_env)

    p = sub.add_parser("lb-eps", help="gap size for the adversarial instances")
    p.add_argument("--kind", choices=("switching", "continuous"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--s", type=int, help="number of segments (switching)")
    p.add_argument("--v", type=float, help="variation budget (continuous)")
    p.set_defaults(func=_cmd_lb_eps)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
