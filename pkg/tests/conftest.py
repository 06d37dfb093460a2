"""Test configuration and shared fixtures."""

import os
from pathlib import Path
from tempfile import TemporaryDirectory

# hessenv.config resolves the user config path at import, so this runs first
_tmpdir = TemporaryDirectory().name
Path(_tmpdir).mkdir(parents=True, exist_ok=True)
os.environ["XDG_DATA_HOME"] = _tmpdir
os.environ["XDG_CONFIG_HOME"] = str(Path(_tmpdir) / "config")
os.environ.pop("HESSENV_OUTPUT_DIR", None)

import numpy as np
import pytest
from hessenv.torus import HermitianFormField, PeriodicGrid, set_workers, trig_field


@pytest.fixture(autouse=True)
def reset_workers():
    yield
    set_workers(None)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def grid_1d() -> PeriodicGrid:
    return PeriodicGrid(1, 64)


@pytest.fixture
def grid_2d() -> PeriodicGrid:
    return PeriodicGrid(2, 8)


@pytest.fixture
def obstacle_case(grid_1d):
    """θ = ω and h = 0.3·cos(2πx¹) on n = 1, N = 64."""
    theta = HermitianFormField.identity(grid_1d)
    h = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": 0.3}])
    return theta, h
