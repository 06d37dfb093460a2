import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Literal, get_args

import numpy as np
import tomlkit

from .dirs import get_config_dir
from .eigen_ops import OPERATOR_NAMES, EigenOperator, require_cone
from .envelope import EnvelopeConfig
from .errors import ConfigError, DomainError
from .oracles import OracleConfig
from .solver import SolverConfig
from .torus import HermitianFormField, PeriodicGrid, ScalarField, eigenvalues_chi, trig_field
from .util import console

logger = logging.getLogger(__name__)

Command = Literal["solve", "envelope", "eigenpair", "subcheck", "verify"]
COMMANDS: tuple[str, ...] = get_args(Command)


@dataclass
class Config:
    """User-level defaults, read from ~/.config/hessenv/config.toml."""

    env: dict

    def get_env(self, key: str, default: str | None = None) -> str | None:
        """Gets an environment variable, checks the config file if it's not set in the environment."""
        return os.environ.get(key) or self.env.get(key) or default

    def dict(self) -> dict:
        return {"env": self.env}


default_config = Config(
    env={
        # toml doesn't support None
        # "HESSENV_THREADS": "4",
        # "HESSENV_OUTPUT_DIR": "~/hessenv-runs",
    },
)

config_path = get_config_dir() / "config.toml"

_config: Config | None = None


def get_config() -> Config:
    global _config
    if _config is None:
        _config = _load_config()
    return _config


def _load_config() -> Config:
    if not config_path.exists():
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(tomlkit.dumps(default_config.dict()))
        console.log(f"Created config file at {config_path}")
        return Config(env=dict(default_config.env))
    doc = tomlkit.loads(config_path.read_text()).unwrap()
    env = doc.pop("env", {})
    if doc:
        logger.warning(f"Unknown keys in config: {list(doc.keys())}")
    return Config(env=env)


def _take(d: dict[str, Any], cls, section: str) -> dict[str, Any]:
    """Splits ``d`` into the fields of ``cls``, warning about the rest."""
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        logger.warning(f"Unknown keys in [{section}]: {sorted(unknown)}")
    return {k: v for k, v in d.items() if k in names}


@dataclass
class GridSpec:
    n: int = 1
    N: int = 64

    def build(self) -> PeriodicGrid:
        try:
            return PeriodicGrid(int(self.n), int(self.N))
        except DomainError as e:
            raise ConfigError(str(e), key="grid") from e


@dataclass
class OperatorSpec:
    name: str = "monge_ampere"
    m: int | None = None
    ell: int = 0
    shift: float = 0.0

    def build(self, n: int) -> EigenOperator:
        if self.name not in OPERATOR_NAMES:
            raise ConfigError(
                f"unknown operator {self.name!r}, choose from {OPERATOR_NAMES}",
                key="operator.name",
            )
        try:
            return EigenOperator(self.name, n, self.m, self.ell, self.shift)  # type: ignore[arg-type]
        except DomainError as e:
            raise ConfigError(str(e), key="operator") from e


@dataclass
class TrigSpec:
    """
    A trigonometric polynomial c + Σ a·cos(2π k·x + φ).

    ``positive_part`` and ``power`` post-process it into max(0, ·)^power,
    which is how degenerate (vanishing) data is written.
    """

    terms: list[dict[str, Any]] = field(default_factory=list)
    constant: float = 0.0
    positive_part: bool = False
    power: float = 1.0

    def build(self, grid: PeriodicGrid, key: str = "h") -> ScalarField:
        for i, term in enumerate(self.terms):
            extra = set(term) - {"wavevector", "amplitude", "phase"}
            if extra:
                logger.warning(f"Unknown keys in {key}.terms[{i}]: {sorted(extra)}")
            if "wavevector" not in term:
                raise ConfigError("every term needs a wavevector", key=f"{key}.terms[{i}]")
        try:
            p = trig_field(grid, self.terms, self.constant)
        except DomainError as e:
            raise ConfigError(str(e), key=key) from e
        values = p.values
        if self.positive_part:
            values = np.maximum(values, 0.0)
        if self.power != 1.0:
            if np.any(values < 0):
                raise ConfigError("power needs non-negative values (set positive_part)", key=key)
            values = values**self.power
        return ScalarField(grid, values)


ThetaKind = Literal["identity_times", "matrix"]


@dataclass
class ThetaSpec:
    """
    The background form: ``scale``·I or an explicit constant Hermitian matrix
    (rows of [re, im] pairs), optionally multiplied pointwise by 1 + p(x) for
    a trigonometric ``perturbation`` p.
    """

    kind: ThetaKind = "identity_times"
    scale: float = 1.0
    matrix: list[list[list[float]]] | None = None
    perturbation: TrigSpec | None = None

    def build(self, grid: PeriodicGrid) -> HermitianFormField:
        if self.kind == "identity_times":
            base = self.scale * np.eye(grid.n, dtype=complex)
        elif self.kind == "matrix":
            if self.matrix is None:
                raise ConfigError("kind = 'matrix' needs a matrix", key="theta.matrix")
            arr = np.asarray(self.matrix, dtype=float)
            if arr.shape != (grid.n, grid.n, 2):
                raise ConfigError(
                    f"expected {grid.n}x{grid.n} [re, im] pairs, got shape {arr.shape}",
                    key="theta.matrix",
                )
            base = arr[..., 0] + 1j * arr[..., 1]
        else:
            raise ConfigError(f"unknown theta kind {self.kind!r}", key="theta.kind")
        try:
            theta = HermitianFormField.constant(grid, base)
        except DomainError as e:
            raise ConfigError(str(e), key="theta.matrix") from e
        if self.perturbation is not None:
            factor = 1.0 + self.perturbation.build(grid, key="theta.perturbation").values
            theta = HermitianFormField(grid, theta.values * factor[..., None, None])
        return theta


@dataclass
class RunConfig:
    command: Command
    grid: GridSpec = field(default_factory=GridSpec)
    operator: OperatorSpec = field(default_factory=OperatorSpec)
    theta: ThetaSpec = field(default_factory=ThetaSpec)
    h: TrigSpec = field(default_factory=TrigSpec)
    u_sub: TrigSpec | None = None
    degenerate: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    envelope: EnvelopeConfig = field(default_factory=EnvelopeConfig)
    suites: list[str] = field(default_factory=list)
    seed: int = 0
    output_dir: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["solver"] = self.solver.to_dict()
        d["envelope"]["schedule"] = list(self.envelope.schedule)
        return d

    def validate(self) -> None:
        """Builds every field once; θ must be strictly inside the operator cone."""
        grid = self.grid.build()
        op = self.operator.build(grid.n)
        theta = self.theta.build(grid)
        self.h.build(grid)
        if self.u_sub is not None:
            self.u_sub.build(grid, key="u_sub")
        require_cone(op, eigenvalues_chi(theta))


def _dataclass_from(cls, data: Any, section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a table, got {type(data).__name__}", key=section)
    try:
        return cls(**_take(data, cls, section))
    except (TypeError, DomainError) as e:
        raise ConfigError(str(e), key=section) from e


def _trig_from(data: Any, section: str) -> TrigSpec:
    if isinstance(data, (int, float)):
        return TrigSpec(constant=float(data))
    return _dataclass_from(TrigSpec, data, section)


def parse_run_config(data: dict[str, Any], command: str | None = None) -> RunConfig:
    """Builds a :class:`RunConfig` from plain data; ``command`` overrides the file's."""
    data = dict(data)
    command = command or data.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}, choose from {COMMANDS}", key="command")
    data.pop("command", None)

    kwargs: dict[str, Any] = {"command": command}
    if "grid" in data:
        kwargs["grid"] = _dataclass_from(GridSpec, data.pop("grid"), "grid")
    if "operator" in data:
        kwargs["operator"] = _dataclass_from(OperatorSpec, data.pop("operator"), "operator")
    if "theta" in data:
        theta = dict(data.pop("theta"))
        if "perturbation" in theta:
            theta["perturbation"] = _trig_from(theta["perturbation"], "theta.perturbation")
        kwargs["theta"] = _dataclass_from(ThetaSpec, theta, "theta")
    if "h" in data:
        kwargs["h"] = _trig_from(data.pop("h"), "h")
    if "u_sub" in data:
        kwargs["u_sub"] = _trig_from(data.pop("u_sub"), "u_sub")
    if "solver" in data:
        kwargs["solver"] = _dataclass_from(SolverConfig, data.pop("solver"), "solver")
    if "oracle" in data:
        kwargs["oracle"] = _dataclass_from(OracleConfig, data.pop("oracle"), "oracle")
    envelope = dict(data.pop("envelope", {}))
    schedule = data.pop("schedule", None)
    if schedule is not None and command == "envelope":
        envelope["schedule"] = schedule
    if envelope:
        kwargs["envelope"] = _dataclass_from(EnvelopeConfig, envelope, "envelope")
    for key in ("degenerate", "suites", "seed", "output_dir"):
        if key in data:
            kwargs[key] = data.pop(key)
    seed = kwargs.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"must be a non-negative integer, got {seed!r}", key="seed")
    if data:
        logger.warning(f"Unknown keys in run config: {sorted(data)}")

    # eigenpair and degenerate solves run the regularization schedule
    if schedule is not None and command != "envelope":
        try:
            kwargs["solver"] = kwargs.get("solver", SolverConfig()).replace(
                eps_reg_schedule=tuple(schedule)
            )
        except DomainError as e:
            raise ConfigError(str(e), key="schedule") from e

    config = RunConfig(**kwargs)
    if command != "verify":
        config.validate()
    return config


def load_run_config(path: Path, command: str | None = None) -> RunConfig:
    """Reads a run config from TOML or JSON, chosen by suffix."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such file: {path}", key="--config")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = tomlkit.loads(text).unwrap()
    except ValueError as e:
        raise ConfigError(f"could not parse {path.name}: {e}", key="--config") from e
    return parse_run_config(data, command)
