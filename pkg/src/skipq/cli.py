"""Command-line entry point.

Subcommands: train, eval, stats, oracle, compare.  Each reads an optional
``--config`` file (flat ``key = value`` lines mirroring RunConfig) plus a
handful of targeted overrides.  The report paths write delimited files and
matplotlib figures side by side into the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import checkpoint as ckpt_mod
from . import harness, oracle
from .config import RunConfig, load_config
from .envs import make_env, write_trajectory
from .errors import CheckpointError, ConfigError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--epochs", type=int, help="override epoch_count")
    parser.add_argument("--r1", type=int, help="override the short repeat count")
    parser.add_argument("--r2", type=int, help="override the long repeat count")
    parser.add_argument("--static-skip", type=int, dest="static_skip",
                        help="force a static action repeat (r1 = r2 = value)")
    parser.add_argument("--env", help="override the environment id")
    parser.add_argument("--backend", help="override the Q-function backend")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def _load_cfg(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.epochs is not None:
        cfg.epoch_count = args.epochs
    if args.r1 is not None:
        cfg.r1 = args.r1
    if args.r2 is not None:
        cfg.r2 = args.r2
    if args.static_skip is not None:
        cfg.static_skip = args.static_skip
    if args.env is not None:
        cfg.env = args.env
    if args.backend is not None:
        cfg.backend = args.backend
    if args.out is not None:
        cfg.out_dir = args.out
    if args.no_figures:
        cfg.figures = False
    return cfg.validate()


def _cmd_train(args) -> int:
    cfg = _load_cfg(args)
    print(f"training {cfg.env} / {cfg.backend} / r1={cfg.effective_r1()} r2={cfg.effective_r2()} "
          f"seed={cfg.seed} -> {cfg.out_dir}")
    print(harness.METRICS_HEADER)
    reports = harness.run_training(cfg, on_epoch=lambda r: print(r.csv_row()))
    if reports:
        best = harness.best_epoch(reports)
        print(f"best epoch: {best.epoch} (avg score {best.avg_score:.6f})")
    print(f"wrote {os.path.join(cfg.out_dir, 'metrics.csv')}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    env = make_env(cfg.env)
    steps = args.steps if args.steps is not None else cfg.test_epoch_steps
    report, stats = harness.evaluate_checkpoint(
        args.checkpoint, env, steps=steps, eps_test=cfg.eps_test, seed=cfg.seed
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    harness.write_metrics_csv(os.path.join(cfg.out_dir, "eval.csv"), [report])
    write_trajectory(os.path.join(cfg.out_dir, "trajectory.txt"), stats.records)
    print(harness.METRICS_HEADER)
    print(report.csv_row())
    print(f"wrote {os.path.join(cfg.out_dir, 'eval.csv')}")
    return 0


def _cmd_stats(args) -> int:
    cfg = _load_cfg(args)
    env = make_env(cfg.env)
    result = harness.stats_run(
        args.checkpoint, env, steps=args.steps, eps_test=cfg.eps_test, seed=cfg.seed
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    stats_path = os.path.join(cfg.out_dir, "stats.csv")
    with open(stats_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("action,basis,repeat,decisions,frequency\n")
        total = int(result.histogram.sum())
        for k in range(result.space.size):
            a = result.space.action(k)
            freq = result.histogram[k] / total if total else 0.0
            fh.write(f"{k},{a.basis},{a.repeat},{result.histogram[k]},{freq:.6f}\n")
    write_trajectory(os.path.join(cfg.out_dir, "trajectory.txt"), result.records)
    if cfg.figures:
        from . import plots

        plots.save_action_histogram(result.histogram, result.space, os.path.join(cfg.out_dir, "actions.png"))
    print(f"decisions: {result.decisions}  completed episodes: {result.episodes}")
    print(f"long-action fraction (completed episodes): {result.long_action_fraction:.4f}")
    print(f"wrote {stats_path}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = _load_cfg(args)
    if cfg.env != "chain_persist":
        raise ConfigError("the oracle needs a finite-MDP environment (chain_persist)")
    env = make_env(cfg.env)
    space = cfg.space_for(env.action_count)
    result = oracle.solve(env.spec, space, cfg.gamma, cfg.discount_mode, tolerance=args.tolerance)
    os.makedirs(cfg.out_dir, exist_ok=True)
    golden = os.path.join(cfg.out_dir, "qtable.golden")
    oracle.write_q_table(golden, result)
    decisions = oracle.greedy_decisions(env.spec, space, result)
    long_frac = sum(1 for k in decisions if k >= space.basis_count) / len(decisions)
    print(f"value iteration: {result.iterations} sweeps, residual {result.residual:.3e}")
    print(f"V*(start) = {result.v[env.spec.start_state]:.6f}")
    print(f"greedy-policy long-action fraction: {long_frac:.4f}")
    print(f"wrote {golden}")
    return 0


def _cmd_compare(args) -> int:
    if len(args.config) < 2:
        raise ConfigError("compare needs at least two --config files")
    cfgs = []
    for path in args.config:
        cfg = load_config(path)
        if not cfg.label:
            cfg.label = os.path.splitext(os.path.basename(path))[0]
        cfgs.append(cfg.validate())
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    out_dir = args.out or cfgs[0].out_dir
    os.makedirs(out_dir, exist_ok=True)
    rows = harness.compare_runs(cfgs, seeds=seeds, out_dir=out_dir)
    harness.write_compare_csv(os.path.join(out_dir, "compare.csv"), rows)
    if not args.no_figures:
        from . import plots

        plots.save_compare_figure(rows, os.path.join(out_dir, "compare.png"))
    print(harness.COMPARE_HEADER)
    for row in rows:
        print(row.csv_row())
    print(f"wrote {os.path.join(out_dir, 'compare.csv')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skipq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the train/test epoch protocol")
    _add_common(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="run one testing epoch on a checkpoint")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True, help="checkpoint.bin to evaluate")
    p_eval.add_argument("--steps", type=int, help="decision steps (default: test_epoch_steps)")
    p_eval.set_defaults(func=_cmd_eval)

    p_stats = sub.add_parser("stats", help="action-usage statistics of a checkpoint")
    _add_common(p_stats)
    p_stats.add_argument("--checkpoint", required=True, help="checkpoint.bin to analyze")
    p_stats.add_argument("--steps", type=int, default=10_000, help="decision steps (default 10000)")
    p_stats.set_defaults(func=_cmd_stats)

    p_oracle = sub.add_parser("oracle", help="exact Q values via value iteration")
    _add_common(p_oracle)
    p_oracle.add_argument("--tolerance", type=float, default=1e-9, help="sweep convergence tolerance")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_cmp = sub.add_parser("compare", help="best scores across configs and seeds")
    p_cmp.add_argument("--config", action="append", required=True, help="config file (repeatable)")
    p_cmp.add_argument("--seeds", help="comma-separated seeds applied to every config")
    p_cmp.add_argument("--out", help="output directory (default: first config's out_dir)")
    p_cmp.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
