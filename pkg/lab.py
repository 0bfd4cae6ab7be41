import argparse
import logging
import sys
import time
from pathlib import Path

from configuration.constants import NAME, VERSION, CONFIG_FILE, REPORT_FORMATS, VERDICT_FAIL
from utils.ExperimentInterface import list_experiments, resolve_ids, run_experiments
from utils.LabConfig import load_configuration, merge_configuration
from utils.Report import Report, emit_report
from utils.conversion import registry_table
from utils.exceptions import ConfigurationError, UnknownExperimentError
from utils.logging_formatter import configure_logging

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# Flags that map onto LabConfig fields (dest -> field)
CONFIG_FLAGS = {"n": "n", "dt": "dt", "seed": "seed", "tree_steps": "tree_steps", "out": "out",
                "format": "format", "dump_samples": "dump_samples", "timing": "timing"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description=f"{NAME} {VERSION}: numerical checks of "
                                                             "random-time martingale identities")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one experiment or all of them")
    run.add_argument("experiment", help="experiment id (E1..E14) or 'all'")
    run.add_argument("--n", help="Monte Carlo paths per experiment")
    run.add_argument("--dt", help="grid step of the Brownian paths")
    run.add_argument("--seed", help="root seed (decimal or 0x-prefixed, up to 128 bits)")
    run.add_argument("--tree-steps", dest="tree_steps", help="largest tree in the tree sweeps")
    run.add_argument("--out", help="report file (stdout when omitted)")
    run.add_argument("--format", choices=REPORT_FORMATS, help="report format")
    run.add_argument("--config", help=f"flat YAML configuration (default: {CONFIG_FILE} if present)")
    run.add_argument("--dump-samples", dest="dump_samples", help="directory for raw per-path samples")
    run.add_argument("--timing", action="store_const", const=True, help="write wall-clock times into the report")
    run.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log at DEBUG")

    commands.add_parser("list", help="print the experiment registry")
    return parser


def _configuration(args: argparse.Namespace):
    if args.config is not None:
        file_values = load_configuration(args.config)
    elif Path(CONFIG_FILE).exists():
        file_values = load_configuration(CONFIG_FILE)
    else:
        file_values = {}
    flags = {field: getattr(args, dest) for dest, field in CONFIG_FLAGS.items()}
    return merge_configuration(file_values, flags)


def run_command(args: argparse.Namespace, log: logging.Logger) -> int:
    config = _configuration(args)
    ids = resolve_ids(args.experiment)
    log.info(f"Running {', '.join(ids)} with n={config.n}, dt={config.dt:g}, seed={config.seed:#x}")
    started = time.perf_counter()
    experiments = run_experiments(ids, config)
    elapsed = time.perf_counter() - started
    report = Report(config=config.as_dict(), seed=config.seed, experiments=experiments,
                    wall_clock=elapsed if config.timing else None)
    text = emit_report(report, config.out, config.format)
    if config.out is None:
        sys.stdout.write(text)
    failed = [experiment.id for experiment in experiments if experiment.verdict == VERDICT_FAIL]
    if failed:
        log.warning(f"Failed: {', '.join(failed)}")
        return EXIT_FAIL
    log.info(f"All {len(experiments)} experiment(s) passed or were observed ({elapsed:.1f}s)")
    return EXIT_PASS


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    log = configure_logging(verbose=args.verbose, colored=sys.stderr.isatty())
    try:
        if args.command == "list":
            print(registry_table(list_experiments()))
            return EXIT_PASS
        return run_command(args, log)
    except (UnknownExperimentError, ConfigurationError) as e:
        log.critical(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
