import importlib.metadata
from pathlib import Path

import tomlkit

_pyproject = Path(__file__).resolve().parent.parent / "pyproject.toml"


def _source_version() -> str | None:
    """Version from pyproject.toml, for a checkout that was never installed."""
    if not _pyproject.exists():
        return None
    try:
        doc = tomlkit.loads(_pyproject.read_text()).unwrap()
    except Exception:
        return None
    project = doc.get("project", {})
    if project.get("name") != "hessenv":
        return None
    return project.get("version")


try:
    __version__ = importlib.metadata.version("hessenv")
except importlib.metadata.PackageNotFoundError:
    __version__ = _source_version() or "0.0.0 (unknown)"

if __name__ == "__main__":
    print(__version__)
