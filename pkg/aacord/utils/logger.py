# file: aacord/utils/logger.py
import logging
import sys
from typing import Union

from aacord.utils.config import Config

PACKAGE = "aacord"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _package_logger() -> logging.Logger:
    root = logging.getLogger(PACKAGE)
    if not root.handlers:
        # stdout carries reports and CSV, so log lines go to stderr
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        root.setLevel(Config.LOG_LEVEL)
        root.propagate = False
    return root


def setup_logger(name: str) -> logging.Logger:
    """Logger under the package logger, which owns the only handler."""
    _package_logger()
    if name != PACKAGE and not name.startswith(PACKAGE + "."):
        name = f"{PACKAGE}.{name}"
    return logging.getLogger(name)


def set_level(level: Union[str, int]) -> None:
    """Change the level of every aacord logger at once (``--log-level``)."""
    _package_logger().setLevel(level.upper() if isinstance(level, str) else level)
# end file
