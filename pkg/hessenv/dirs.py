import os
from datetime import datetime
from pathlib import Path

from platformdirs import user_config_dir, user_data_dir


def get_config_dir() -> Path:
    return Path(user_config_dir("hessenv"))


def get_data_dir() -> Path:
    # used in testing, so must take precedence
    if "XDG_DATA_HOME" in os.environ:
        return Path(os.environ["XDG_DATA_HOME"]) / "hessenv"
    return Path(user_data_dir("hessenv"))


def get_runs_dir() -> Path:
    """Get the default parent directory for run artifacts (reports, field dumps)."""
    from .config import get_config  # fmt: skip

    if value := get_config().get_env("HESSENV_OUTPUT_DIR"):
        path = Path(value).expanduser()
    else:
        path = get_data_dir() / "runs"
    path.mkdir(parents=True, exist_ok=True)
    return path


def new_run_dir(command: str) -> Path:
    """Creates a fresh timestamped directory for a run of ``command``."""
    name = f"{datetime.now().strftime('%Y%m%d-%H%M%S')}-{command}"
    path = get_runs_dir() / name
    path.mkdir(parents=True, exist_ok=True)
    return path
