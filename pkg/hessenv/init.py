import atexit
import logging
import os

from dotenv import load_dotenv
from rich.logging import RichHandler

from .config import get_config
from .errors import ConfigError
from .torus import set_workers

logger = logging.getLogger(__name__)
_init_done = False

# the BLAS/OpenMP pools read these when numpy first starts them
THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def init(threads: int | None) -> int | None:
    """
    Loads .env and the user config, then caps worker threads.

    Returns the resolved thread count (None means library defaults).
    """
    global _init_done
    if _init_done:
        logger.warning("init() called twice, ignoring")
        return threads
    _init_done = True

    load_dotenv()
    config = get_config()

    if threads is None and (value := config.get_env("HESSENV_THREADS")):
        try:
            threads = int(value)
        except ValueError as e:
            raise ConfigError(f"not an integer: {value!r}", key="HESSENV_THREADS") from e
    init_threads(threads)
    return threads


def init_threads(threads: int | None) -> None:
    if threads is None:
        set_workers(None)
        return
    if threads < 1:
        raise ConfigError(f"must be at least 1, got {threads}", key="--threads")
    for var in THREAD_ENV_VARS:
        os.environ[var] = str(threads)
    set_workers(threads)
    logger.debug(f"Capped worker threads at {threads}")


def init_logging(verbose):
    handler = RichHandler()  # show_time=False
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[handler],
    )

    # numba and matplotlib log at import when present
    logging.getLogger("numba").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    # Register cleanup handler

    def cleanup_logging():
        logging.getLogger().removeHandler(handler)
        logging.shutdown()

    atexit.register(cleanup_logging)
