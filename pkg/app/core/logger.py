import logging

LOG_FORMAT = "%(asctime)s %(levelname)-5.5s [%(name)s] %(message)s"


def configure_logging(level: str = "INFO"):
    """
      Configures basic logging setup for the application.
    """
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT, force=True)
    # joblib workers chatter at INFO
    logging.getLogger("joblib").setLevel(logging.WARNING)
