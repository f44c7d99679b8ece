from __future__ import annotations
import sys

from loguru import logger

FORMAT = "[{extra[tag]}] {message}"

logger.configure(extra={"tag": "pe"})


def configure(verbose: bool = False) -> None:
    """Route all toolkit logging to one stderr sink with `[tag] message` lines."""
    logger.remove()
    logger.add(sys.stderr, format=FORMAT, level="DEBUG" if verbose else "INFO", colorize=False)


def get(tag: str):
    return logger.bind(tag=tag)
