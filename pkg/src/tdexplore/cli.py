"""Command-line interface: run one experiment, sweep a grid, or analyze a run.

Precedence for settings: per-algorithm defaults, then the JSON config file
(--config), then explicit flags. `--desk` applies the desk-scale profile
before file and flag overrides.
"""

import argparse
import json
import sys
from dataclasses import replace

from .config import (
    ABLATIONS,
    ALGOS,
    EXPLORATIONS,
    apply_overrides,
    default_config,
    desk_config,
    validate,
)
from .envs import ENV_NAMES
from .errors import ConfigError


def _add_shared_run_flags(p):
    p.add_argument("--algo", choices=ALGOS)
    p.add_argument("--env", choices=ENV_NAMES)
    p.add_argument("--exploration", choices=EXPLORATIONS)
    p.add_argument("--lambda", dest="lam", type=float,
                   help="exploration scale in [0, 1]")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", dest="total_steps", type=int)
    p.add_argument("--eval-interval", dest="eval_interval", type=int)
    p.add_argument("--warmup", dest="warmup_steps", type=int)
    p.add_argument("--horizon", dest="max_episode_steps", type=int,
                   help="episode step limit")
    p.add_argument("--ablation", choices=ABLATIONS, action="append",
                   help="may be given multiple times")
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--desk", action="store_true",
                   help="desk-scale profile: small networks, batch 64")
    p.add_argument("--log-transitions", action="store_true",
                   help="write transitions.jsonl (needed for diag)")
    p.add_argument("--out", help="output directory")


def _resolve_config(args):
    file_keys = {}
    if args.config:
        with open(args.config) as fh:
            file_keys = json.load(fh)
    algo = args.algo or file_keys.get("algo") or "td3"
    file_keys["algo"] = algo
    cfg = desk_config(algo) if args.desk else default_config(algo)
    cfg = apply_overrides(cfg, file_keys)
    overrides = {}
    for field in ("env", "exploration", "lam", "seed", "total_steps",
                  "eval_interval", "warmup_steps", "max_episode_steps"):
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    if args.ablation:
        overrides["ablation"] = tuple(dict.fromkeys(args.ablation))
    if args.log_transitions:
        overrides["log_transitions"] = True
    return validate(replace(cfg, **overrides))


def cmd_run(args):
    from .harness import run

    cfg = _resolve_config(args)
    result = run(cfg, args.out)
    for record in result.records:
        print(f"step {record.step}: mean_return={record.mean:.3f} "
              f"std={record.std:.3f}")
    print(f"last10_mean={result.last10_mean:.3f}")
    if args.out:
        print(f"artifacts written to {args.out}")
    return 0


def cmd_sweep(args):
    from .harness import run_sweep

    cfg = _resolve_config(args)
    if args.seeds:
        seeds = tuple(int(s) for s in args.seeds.split(","))
        cfg = replace(cfg, seeds=seeds)
    rows = run_sweep(cfg, args.mode, out_dir=args.out, workers=args.workers)
    for row in rows:
        print(f"{row['setting']:14s} seed {row['seed']}: "
              f"last10_mean={row['last10_mean']:.3f}")
    return 0


def cmd_diag(args):
    from .diagnostics import run_diagnostics

    info = run_diagnostics(args.run, args.out, grid_size=args.grid,
                           bandwidth=args.bandwidth)
    print(f"records={info['records']} "
          f"explained_variance_ratio={info['explained_variance_ratio']:.4f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tdexplore",
        description="Directed exploration for continuous control via "
                    "TD-error maximization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train one agent for one seed")
    _add_shared_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid of settings and seeds")
    _add_shared_run_flags(p_sweep)
    p_sweep.add_argument("--mode", choices=("lambda", "ablation", "baselines"),
                         required=True)
    p_sweep.add_argument("--seeds", help="comma-separated seed list, e.g. 0,1,2")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_diag = sub.add_parser("diag", help="state-visitation diagnostics for a run")
    p_diag.add_argument("--run", required=True, help="finished run directory")
    p_diag.add_argument("--out", help="output directory (default: run dir)")
    p_diag.add_argument("--grid", type=int, default=50)
    p_diag.add_argument("--bandwidth", type=float)
    p_diag.set_defaults(func=cmd_diag)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
