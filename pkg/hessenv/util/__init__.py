"""
Utility package for hessenv.
"""

import logging
import os
from contextlib import contextmanager
from pathlib import Path
from time import perf_counter

from rich.console import Console

logger = logging.getLogger(__name__)
console = Console(log_path=False)


def path_with_tilde(path: Path) -> str:
    home = os.path.expanduser("~")
    return str(path).replace(home, "~", 1)


@contextmanager
def timed(timings: dict[str, float], key: str):
    """Records the wall time of the block under ``timings[key]``."""
    start = perf_counter()
    try:
        yield
    finally:
        timings[key] = timings.get(key, 0.0) + perf_counter() - start
