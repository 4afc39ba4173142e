import logging
import os

DEBUG = os.getenv("DEBUG", False)

logging.basicConfig(
    format="%(asctime)s - %(levelname)s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
    level=logging.INFO,
)

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG if DEBUG else logging.INFO)


def set_quiet(quiet: bool = True):
    """Raise the package logger to WARNING (or restore the default level)."""
    if quiet:
        logger.setLevel(logging.WARNING)
    else:
        logger.setLevel(logging.DEBUG if DEBUG else logging.INFO)
