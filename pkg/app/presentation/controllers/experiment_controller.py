import argparse
import logging
from pathlib import Path
from typing import Optional

from dependency_injector.wiring import Provide, inject

from app.container import AppContainer
from app.core.exception_handlers import handle_exception
from app.core.exceptions import ConfigError
from app.entities.experiment_config import ExperimentConfig, ExperimentKind
from app.use_cases.services.config_parser import parse_config
from app.use_cases.tasks.experiment_tasks import ExperimentTask

logger = logging.getLogger(__name__)

KIND_HELP = {
    ExperimentKind.simulate: "one run on a ball, flip log plus energy and consistency audits",
    ExperimentKind.commutation: "projected median runs against direct discrete runs",
    ExperimentKind.theta: "certified root values, theta(p) on the grid and p_c bracket",
    ExperimentKind.alpha: "mixing estimates at several distances",
    ExperimentKind.trace: "trace of the root and the threshold identity",
    ExperimentKind.resample: "sign-resampling difference sets",
    ExperimentKind.chains: "chain-joining times and triple points",
    ExperimentKind.audit: "invariant audits, structure at fixation and mass transport",
    ExperimentKind.tailcheck: "chronological-path tail against its analytic bound",
    ExperimentKind.neverflip: "never-flip probability with a frozen neighbor",
}


class ExperimentArgumentParser(argparse.ArgumentParser):
    """Raises usage errors as ``ConfigError`` instead of exiting."""

    def error(self, message: str):
        raise ConfigError([f"{self.prog}: {message}"])


def build_parser() -> argparse.ArgumentParser:
    """One subcommand per experiment kind; every config key is also a ``--flag``."""
    parser = ExperimentArgumentParser(prog="median-dynamics",
                                       description="Zero-temperature dynamics on the 3-regular tree")
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    subcommands = parser.add_subparsers(dest="kind", required=True)
    for kind in ExperimentKind:
        command = subcommands.add_parser(kind.value, help=KIND_HELP[kind])
        command.add_argument("--config", type=Path, default=None, help="key=value experiment config")
        command.add_argument("--output-dir", type=Path, default=None, help="overrides OUTPUT_DIR")
        for name in ExperimentConfig.model_fields:
            if name != "kind":
                command.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, metavar="VALUE")
    return parser


def overrides_from(args: argparse.Namespace) -> dict:
    overrides = {name: getattr(args, name) for name in ExperimentConfig.model_fields
                 if name != "kind" and getattr(args, name, None) is not None}
    overrides["kind"] = args.kind
    return overrides


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError([f"cannot read config {args.config}: {exc}"]) from exc
    # the subcommand names the kind, overriding any kind key in the file
    return parse_config(text, overrides_from(args))


@inject
def run_command(
    args: argparse.Namespace,
    experiment_task: ExperimentTask = Provide[AppContainer.experiment_task],
) -> int:
    """
        Runs the experiment selected on the command line.

        Args:
            args (argparse.Namespace): Parsed command line.
            experiment_task (ExperimentTask): Task orchestrating the experiment.

        Returns:
            int: Process exit status.
    """
    try:
        config = load_config(args)
    except Exception as e:
        return handle_exception(e)
    logger.info(f"Running {config.kind.value} with seed {config.seed} and {config.replicas} replicas")
    return experiment_task.run_experiment(config)

