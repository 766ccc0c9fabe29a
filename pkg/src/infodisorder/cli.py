"""Command-line entry point: ``infodisorder <subcommand> [options]``.

Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .harness import (
    SweepResult,
    SweepSpec,
    csv_text,
    emit_csv,
    emit_runs_csv,
    run_baseline_sweep,
    run_sa_sweep,
)
from .plot import plot_virality
from .superagent import CheckpointError, load_checkpoint, save_checkpoint, train

log = logging.getLogger("infodisorder")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text} is not an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config using the parameter-table key names")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config's seed)")
    common.add_argument("--out", type=Path, help="output file (CSV, checkpoint or SVG)")
    common.add_argument("--replicates", type=_positive, help="runs per grid point")
    common.add_argument("--checkpoint", type=Path, help="Super-Agent checkpoint file")
    common.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    common.add_argument("--runs", type=Path, help="also write per-replicate final GC values here")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="infodisorder", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("baseline", parents=[common], help="virality sweep without the Super-Agent")
    p = sub.add_parser("train", parents=[common], help="train a Super-Agent checkpoint")
    p.add_argument("--episodes", type=_positive, help="training episodes (default from config)")
    sub.add_parser("evaluate", parents=[common],
                   help="virality sweep with a trained Super-Agent at each configured sa-delay")
    sub.add_parser("sweep", parents=[common],
                   help="baseline sweep plus, with --checkpoint, every sa-delay in one CSV")
    p = sub.add_parser("plot", parents=[common], help="render sweep CSVs as an SVG chart")
    p.add_argument("csv", nargs="+", type=Path, help="sweep CSV files")
    p.add_argument("--title", default="Average virality")
    return parser


def _experiment(args) -> ExperimentConfig:
    return load_config(args.config) if args.config else ExperimentConfig()


def _spec(exp: ExperimentConfig, args, sa_delay=None, checkpoint=None) -> SweepSpec:
    return SweepSpec(
        theta_values=exp.theta_values,
        p_n_grid=exp.p_n_values,
        p_o=exp.sim.p_o,
        sa_delay=sa_delay,
        replicates=args.replicates or exp.replicates,
        master_seed=exp.sim.seed if args.seed is None else args.seed,
        checkpoint_path=None if checkpoint is None else str(checkpoint),
        base=exp.sim,
    )


def _write_result(result: SweepResult, args) -> None:
    if args.out:
        emit_csv(result, args.out)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(csv_text(result))
    if args.runs:
        emit_runs_csv(result, args.runs)


def _sa_sweeps(exp: ExperimentConfig, args) -> SweepResult:
    agent = load_checkpoint(args.checkpoint)
    result = SweepResult([])
    for delay in exp.sa_delay_values:
        spec = _spec(exp, args, sa_delay=delay, checkpoint=args.checkpoint)
        result = result + run_sa_sweep(spec, agent, jobs=args.jobs)
    return result


def _cmd_baseline(args) -> None:
    exp = _experiment(args)
    _write_result(run_baseline_sweep(_spec(exp, args), jobs=args.jobs), args)


def _cmd_train(args) -> None:
    if not args.out:
        raise ValueError("train needs --out for the checkpoint path")
    exp = _experiment(args)
    seed = exp.sim.seed if args.seed is None else args.seed
    episodes = args.episodes or exp.dqn.episodes

    def progress(ep, result):
        if (ep + 1) % 50 == 0:
            log.info("episode %d: reward %.2f, final GC %.2f", ep + 1,
                     result.total_reward, result.record.final_gc)

    agent = train(exp.sim, episodes, seed, exp.dqn, theta_values=exp.theta_values,
                  p_n_values=exp.p_n_values, sa_delay_values=exp.sa_delay_values,
                  progress=progress)
    save_checkpoint(agent, args.out)
    log.info("wrote checkpoint %s", args.out)


def _cmd_evaluate(args) -> None:
    if not args.checkpoint:
        raise ValueError("evaluate needs --checkpoint")
    exp = _experiment(args)
    _write_result(_sa_sweeps(exp, args), args)


def _cmd_sweep(args) -> None:
    exp = _experiment(args)
    result = run_baseline_sweep(_spec(exp, args), jobs=args.jobs)
    if args.checkpoint:
        result = result + _sa_sweeps(exp, args)
    _write_result(result, args)


def _cmd_plot(args) -> None:
    if not args.out:
        raise ValueError("plot needs --out for the SVG path")
    plot_virality(args.csv, args.out, title=args.title)


COMMANDS = {
    "baseline": _cmd_baseline,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ConfigError, CheckpointError, OSError, ValueError) as exc:
        print(f"infodisorder {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
