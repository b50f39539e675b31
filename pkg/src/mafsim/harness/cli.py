"""Command line entry point: ``mafsim <run|eval|plot|verify-checkpoint|print-config>``.

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 the
``eval --gate`` accuracy check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from mafsim.errors import CheckpointError, ConfigError
from mafsim.harness.config import ExperimentConfig, load_config
from mafsim.harness.plotdata import DEFAULT_SMOOTHING, PANELS, emit_plot_data
from mafsim.harness.runner import (agent_from_checkpoint, checkpoint_roundtrip, evaluate,
                                   heldout_timelines, run_experiment)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_GATE = 0, 1, 2, 3


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=getattr(args, "seed", None), output_dir=getattr(args, "out", None),
                              agents=getattr(args, "agent", None))


def cmd_run(args) -> int:
    summary = run_experiment(_config(args), workers=args.workers)
    for tag, row in summary.by_agent().items():
        print(f"{tag:13s} train energy/min {row['train_energy_per_minute']:8.2f}  "
              f"eval energy/min {row['final_eval_energy_per_minute']:8.2f}  "
              f"eval accuracy {row['final_eval_accuracy']:.3f}  "
              f"converged at episode {row['convergence_episode']:.0f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    agent, env, meta = agent_from_checkpoint(args.checkpoint)
    cfg = _config(args) if args.config else ExperimentConfig(system=env.config)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    stats = evaluate(agent, env, heldout_timelines(cfg, seed, args.episodes))
    stats.pop("actions")
    print(json.dumps({"agent": meta["agent"], **stats}, indent=1))
    if args.gate and stats["accuracy"] < env.config.accuracy_threshold:
        print(f"gate failed: accuracy {stats['accuracy']:.4f} < "
              f"{env.config.accuracy_threshold}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_plot(args) -> int:
    cfg = _config(args) if args.config else ExperimentConfig()
    panels = sorted(PANELS) if args.panel == "all" else [args.panel]
    for panel in panels:
        for path in emit_plot_data(args.metrics, panel, args.out or "plots", args.smoothing,
                                   tau=cfg.system.accuracy_threshold):
            print(path)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = checkpoint_roundtrip(args.checkpoint)
    print(json.dumps({k: report[k] for k in ("agent", "identical")}))
    return EXIT_OK if report["identical"] else EXIT_RUNTIME


def cmd_print_config(args) -> int:
    sys.stdout.write(_config(args).to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mafsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log defaults and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train and evaluate the configured agents")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--agent", action="append", help="restrict to this agent (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="greedy evaluation of a checkpoint on held-out timelines")
    p.add_argument("checkpoint")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--gate", action="store_true", help="exit 3 if accuracy is below tau")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="write plot-data files and gnuplot scripts")
    p.add_argument("metrics", help="a metrics.csv or a run directory")
    p.add_argument("--panel", choices=[*sorted(PANELS), "all"], default="all")
    p.add_argument("--smoothing", type=float, default=DEFAULT_SMOOTHING)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("verify-checkpoint", help="reload a checkpoint and replay its actions")
    p.add_argument("checkpoint")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("print-config", help="print the effective configuration")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--agent", action="append")
    p.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CheckpointError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
