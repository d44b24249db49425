import logging

from app.core.exceptions import ConfigError, DynamicsError, InvariantViolationError, OutputError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_OPERATIONAL = 1
EXIT_INVARIANT = 2


def invariant_exception_handler(exc: InvariantViolationError) -> int:
    """
    Handles a failed invariant suite.

    Args:
        exc (InvariantViolationError): The violation raised by an audit.

    Returns:
        int: Exit status 2, reserved for mathematical-invariant failures.
    """
    logger.error(f"Invariant violation: {exc}")
    return EXIT_INVARIANT


def config_exception_handler(exc: ConfigError) -> int:
    """
    Handles configuration errors, logging every problem found.
    """
    for error in exc.errors:
        logger.error(f"Config error: {error}")
    return EXIT_OPERATIONAL


def output_exception_handler(exc: OutputError) -> int:
    logger.error(f"Output error at {exc.path}: {exc}")
    return EXIT_OPERATIONAL


def dynamics_exception_handler(exc: DynamicsError) -> int:
    logger.error(f"{type(exc).__name__}: {exc}")
    return exc.exit_code


def general_exception_handler(exc: Exception) -> int:
    """
    Catches all unhandled exceptions and logs them.
    """
    logger.exception(f"Unhandled exception: {exc}")
    return EXIT_OPERATIONAL


def handle_exception(exc: Exception) -> int:
    """Route an exception to its handler and return the process exit status."""
    if isinstance(exc, InvariantViolationError):
        return invariant_exception_handler(exc)
    if isinstance(exc, ConfigError):
        return config_exception_handler(exc)
    if isinstance(exc, OutputError):
        return output_exception_handler(exc)
    if isinstance(exc, DynamicsError):
        return dynamics_exception_handler(exc)
    return general_exception_handler(exc)
