import logging
import sys
from typing import Optional

from dependency_injector import providers

from app.container import AppContainer
from app.core.config import settings
from app.core.exception_handlers import handle_exception
from app.core.exceptions import ConfigError
from app.core.logger import configure_logging
from app.presentation.controllers.experiment_controller import build_parser, run_command

logger = logging.getLogger(__name__)


def create_container(output_dir: Optional[str] = None) -> AppContainer:
    container = AppContainer()
    if output_dir is not None:
        container.output_dir.override(providers.Object(str(output_dir)))
    return container


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        configure_logging(settings.log_level)
        return handle_exception(e)
    configure_logging(args.log_level or settings.log_level)
    container = create_container(args.output_dir)
    try:
        return run_command(args)
    finally:
        container.unwire()


if __name__ == "__main__":
    sys.exit(main())
