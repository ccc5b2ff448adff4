"""Command-line entry point: run experiments, inspect indices, generate data, diagnose mixing."""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from loguru import logger
from pydantic import ValidationError

from ucwhittle.config import get_settings, load_experiment_config, parse_overrides
from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.domains.dataset import generate_dataset, write_dataset
from ucwhittle.exceptions import ConfigError, DatasetSchemaError, UCWhittleError
from ucwhittle.harness.ergodicity import ergodicity_diagnostic
from ucwhittle.harness.experiment import ExperimentResult, build_instance, run_experiment
from ucwhittle.harness.reporting import sweep_dirname, write_outputs, write_sweep_summary
from ucwhittle.models import CliInvocation, ExperimentConfig
from ucwhittle.monitoring.logging_config import setup_logging
from ucwhittle.planning.whittle import whittle_index

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the input-error status."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="More console logging (-v, -vv).")

    parser = _Parser(prog="ucwhittle", description="Optimistic Whittle-index learning for restless bandits.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = commands.add_parser("run", parents=[common], help="Run a regret experiment.")
    run.add_argument("config", help="Experiment config file.")
    run.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE", help="Override a config key; repeatable."
    )
    run.add_argument("--output-dir", default=None, help="Output directory (beats config and UCW_OUT_DIR).")

    whittle = commands.add_parser("whittle", parents=[common], help="Print the Whittle index of a 2-state arm.")
    whittle.add_argument("--p0-pass", type=float, required=True, help="P(bad, 0, good)")
    whittle.add_argument("--p0-act", type=float, required=True, help="P(bad, 1, good)")
    whittle.add_argument("--p1-pass", type=float, required=True, help="P(good, 0, good)")
    whittle.add_argument("--p1-act", type=float, required=True, help="P(good, 1, good)")
    whittle.add_argument("--state", type=int, default=0, help="State to index (0 bad, 1 good).")
    whittle.add_argument("--gamma", type=float, default=0.9, help="Discount factor in (0, 1).")

    gen = commands.add_parser("gen", parents=[common], help="Write a synthetic dataset CSV.")
    gen.add_argument("domain", choices=["wide", "thin"])
    gen.add_argument("num_arms", type=int)
    gen.add_argument("seed", type=int)
    gen.add_argument("output", help="Destination CSV.")

    diag = commands.add_parser("diag", parents=[common], help="Ergodicity diagnostic for a config's instance.")
    diag.add_argument("config", help="Experiment config file.")
    diag.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def resolve_output_dir(flag: Optional[str], config: ExperimentConfig) -> Path:
    """Flag, then config, then UCW_OUT_DIR."""
    return Path(flag or config.output_dir or get_settings().OUT_DIR)


def _input_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def _load_config(invocation: CliInvocation) -> ExperimentConfig:
    return load_experiment_config(invocation.config_path, parse_overrides(invocation.overrides))


def _run_point(config: ExperimentConfig, out_dir: Path) -> Tuple[int, Optional[ExperimentResult]]:
    try:
        result = run_experiment(config)
        if result.curve.records.empty:
            logger.error(f"Every run failed | failures={len(result.failures)}")
            print("error: every run failed; see error.log", file=sys.stderr)
            return EXIT_RUNTIME, None
        write_outputs(result, config, out_dir)
    except (DatasetSchemaError, FileNotFoundError) as e:
        logger.error(f"Input error | {e}")
        return _input_error(str(e)), None
    except Exception as e:
        logger.exception(f"Experiment failed | error={e}")
        print(f"error: experiment failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME, None

    final = result.curve.final_regret()
    runtimes = dict(zip(result.runtimes["algo"], result.runtimes["mean_seconds"]))
    for algorithm in config.algorithms:
        failed = sum(1 for failure in result.failures if failure.algorithm == algorithm)
        if algorithm not in final:
            print(f"{algorithm:<12} failed on every seed")
            continue
        print(
            f"{algorithm:<12} final_cum_regret={final[algorithm]:.4f} "
            f"runtime={runtimes[algorithm]:.2f}s/seed failures={failed}"
        )
    print(f"outputs written to {out_dir}")
    return EXIT_OK, result


def cmd_run(invocation: CliInvocation) -> int:
    try:
        config = _load_config(invocation)
    except ConfigError as e:
        return _input_error(f"config: {e}")

    out_dir = resolve_output_dir(invocation.output_dir, config)
    setup_logging(out_dir, invocation.verbosity)
    if config.sweep_key is None:
        return _run_point(config, out_dir)[0]

    finished = []
    for value, point in config.sweep_points():
        logger.info(f"Sweep point | {config.sweep_key}={value}")
        print(f"[{config.sweep_key}={value}]")
        code, result = _run_point(point, out_dir / sweep_dirname(config.sweep_key, value))
        if code != EXIT_OK:
            return code
        finished.append((value, result))
    path = write_sweep_summary(finished, config.sweep_key, out_dir)
    print(f"sweep summary written to {path}")
    return EXIT_OK


def cmd_whittle(args: argparse.Namespace) -> int:
    if not 0.0 < args.gamma < 1.0:
        return _input_error(f"gamma must lie in (0, 1), got {args.gamma}")
    if args.state not in (0, 1):
        return _input_error(f"state must be 0 or 1, got {args.state}")
    try:
        kernel = TransitionKernel.from_good_probs(args.p0_pass, args.p0_act, args.p1_pass, args.p1_act)
    except ValidationError as e:
        return _input_error(f"invalid kernel: {e.errors()[0]['msg']}")
    try:
        result = whittle_index(kernel, RewardTable.binary(), args.state, args.gamma)
    except UCWhittleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    # + 0.0 keeps a tiny negative index from printing as -0.0000
    print(f"{round(result.value, 4) + 0.0:.4f}")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.num_arms < 0:
        return _input_error(f"num_arms must be nonnegative, got {args.num_arms}")
    path = write_dataset(generate_dataset(args.domain, args.num_arms, args.seed), args.output)
    logger.info(f"Wrote {args.num_arms} {args.domain} arms to {path}")
    print(path)
    return EXIT_OK


def cmd_diag(invocation: CliInvocation) -> int:
    try:
        config = _load_config(invocation)
        instance = build_instance(config, config.seeds[0])
    except (ConfigError, DatasetSchemaError, FileNotFoundError) as e:
        return _input_error(str(e))

    report = ergodicity_diagnostic(instance, config.epsilon_override, horizon=config.horizon)
    print(report.render(), end="")
    if not report.ergodic:
        logger.error("Instance is not ergodic under every policy")
        return EXIT_RUNTIME
    if not report.sufficient:
        logger.warning(f"Horizon H={config.horizon} is below H_required={report.h_required:.4f}")
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        invocation = CliInvocation(
            subcommand=args.command,
            config_path=getattr(args, "config", None),
            overrides=getattr(args, "override", []),
            output_dir=getattr(args, "output_dir", None),
            verbosity=args.verbose,
        )
    except ValidationError as e:
        return _input_error(e.errors()[0]["msg"])

    if invocation.subcommand != "run":
        setup_logging(None, invocation.verbosity)

    if invocation.subcommand == "run":
        return cmd_run(invocation)
    if invocation.subcommand == "whittle":
        return cmd_whittle(args)
    if invocation.subcommand == "gen":
        return cmd_gen(args)
    return cmd_diag(invocation)
