import json
from pathlib import Path

import numpy as np
import pytest
from hessenv.config import (
    Config,
    GridSpec,
    ThetaSpec,
    TrigSpec,
    get_config,
    load_run_config,
    parse_run_config,
)
from hessenv.errors import ConeViolation, ConfigError
from hessenv.torus import PeriodicGrid

configs_dir = Path(__file__).parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(configs_dir.glob("*.toml")), ids=lambda p: p.stem)
def test_bundled_configs_load(path):
    config = load_run_config(path)
    assert config.command in ("solve", "envelope", "eigenpair", "subcheck")
    config.to_dict()


def test_envelope_schedule():
    config = load_run_config(configs_dir / "envelope_1d.toml")
    assert config.envelope.schedule == (1e-1, 1e-2, 1e-3)
    assert config.solver.eps_reg_schedule == (1e-1, 1e-2, 1e-3, 1e-4)
    assert config.to_dict()["envelope"]["schedule"] == [1e-1, 1e-2, 1e-3]


def test_eigenpair_schedule_goes_to_solver():
    config = parse_run_config({"schedule": [0.5, 0.05], "h": 1.0}, "eigenpair")
    assert config.solver.eps_reg_schedule == (0.5, 0.05)


def test_command_override():
    config = load_run_config(configs_dir / "solve.toml", "subcheck")
    assert config.command == "subcheck"


def test_unknown_command():
    with pytest.raises(ConfigError) as exc_info:
        parse_run_config({"command": "plot"})
    assert exc_info.value.key == "command"


def test_unknown_operator():
    with pytest.raises(ConfigError) as exc_info:
        parse_run_config({"operator": {"name": "laplace"}}, "solve")
    assert exc_info.value.key == "operator.name"


def test_invalid_grid():
    with pytest.raises(ConfigError) as exc_info:
        parse_run_config({"grid": {"n": 1, "N": 7}}, "solve")
    assert exc_info.value.key == "grid"


def test_invalid_schedule():
    with pytest.raises(ConfigError):
        parse_run_config({"schedule": [1e-2, 1e-1]}, "envelope")


def test_theta_outside_cone():
    with pytest.raises(ConeViolation):
        parse_run_config({"theta": {"scale": -1.0}}, "solve")


def test_verify_skips_validation():
    config = parse_run_config({"theta": {"scale": -1.0}, "suites": ["cones"]}, "verify")
    assert config.suites == ["cones"]


def test_seed():
    assert parse_run_config({}, "verify").seed == 0
    assert parse_run_config({"seed": 42}, "verify").seed == 42


@pytest.mark.parametrize("seed", [-1, 1.5, "7", True])
def test_invalid_seed(seed):
    with pytest.raises(ConfigError) as exc_info:
        parse_run_config({"seed": seed}, "verify")
    assert exc_info.value.key == "seed"


def test_unknown_keys_warn(caplog):
    parse_run_config({"grid": {"n": 1, "N": 8, "M": 3}, "colour": "red"}, "subcheck")
    assert "Unknown keys in [grid]" in caplog.text
    assert "colour" in caplog.text


def test_trig_spec_positive_part_power():
    grid = PeriodicGrid(1, 8)
    spec = TrigSpec(terms=[{"wavevector": [1, 0]}], positive_part=True, power=2.0)
    values = spec.build(grid).values
    x = grid.coords()[0]
    np.testing.assert_allclose(values, np.maximum(0.0, np.cos(2 * np.pi * x)) ** 2, atol=1e-15)


def test_trig_spec_errors():
    grid = PeriodicGrid(1, 8)
    with pytest.raises(ConfigError):
        TrigSpec(terms=[{"amplitude": 1.0}]).build(grid)
    with pytest.raises(ConfigError):
        TrigSpec(terms=[{"wavevector": [1, 0]}], power=0.5).build(grid)
    with pytest.raises(ConfigError):
        TrigSpec(terms=[{"wavevector": [3, 0]}]).build(grid)


def test_theta_matrix():
    grid = GridSpec(n=2, N=8).build()
    spec = ThetaSpec(kind="matrix", matrix=[[[2, 0], [0, 1]], [[0, -1], [3, 0]]])
    theta = spec.build(grid)
    np.testing.assert_allclose(theta.values[0, 0, 0, 0], [[2, 1j], [-1j, 3]])
    with pytest.raises(ConfigError):
        ThetaSpec(kind="matrix", matrix=[[[1, 0]]]).build(grid)
    with pytest.raises(ConfigError):
        ThetaSpec(kind="matrix", matrix=[[[1, 0], [0, 1]], [[0, 1], [1, 0]]]).build(grid)


def test_theta_perturbation():
    grid = PeriodicGrid(1, 8)
    spec = ThetaSpec(scale=2.0, perturbation=TrigSpec(constant=0.5))
    np.testing.assert_allclose(spec.build(grid).values, 3.0)


def test_json_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"command": "subcheck", "grid": {"n": 2, "N": 8}, "h": 0.5}))
    config = load_run_config(path)
    assert config.grid.n == 2
    assert config.h.constant == 0.5


def test_unparseable_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("grid = [\n")
    with pytest.raises(ConfigError):
        load_run_config(path)
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.toml")


def test_get_env(monkeypatch):
    monkeypatch.delenv("HESSENV_THREADS", raising=False)
    config = Config(env={"HESSENV_THREADS": "2"})
    assert config.get_env("HESSENV_THREADS") == "2"
    monkeypatch.setenv("HESSENV_THREADS", "4")
    assert config.get_env("HESSENV_THREADS") == "4"
    assert config.get_env("HESSENV_MISSING", "x") == "x"


def test_user_config_created():
    from hessenv.config import config_path

    get_config()
    assert config_path.exists()
