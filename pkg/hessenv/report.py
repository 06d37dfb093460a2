"""
Run artifacts: report.json, field dumps and per-rung CSVs.

JSON has no inf/nan, so non-finite floats are written as the strings
"inf", "-inf" and "nan".
"""

import csv
import json
import logging
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .torus import ScalarField, write_field_bin, write_field_csv

if TYPE_CHECKING:
    from .envelope import EnvelopeResult
    from .solver import SolveReport

logger = logging.getLogger(__name__)

# excluded when comparing reports of identical runs
VOLATILE_KEYS = ("timings", "wall_time", "duration")


def sanitize(obj: Any) -> Any:
    """Converts to plain JSON types, with non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if is_dataclass(obj) and not isinstance(obj, type):
        return sanitize(obj.to_dict() if hasattr(obj, "to_dict") else asdict(obj))
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_report(out_dir: Path, report: dict[str, Any]) -> Path:
    path = out_dir / "report.json"
    path.write_text(json.dumps(sanitize(report), indent=2, sort_keys=True) + "\n")
    logger.debug(f"Wrote {path}")
    return path


def strip_volatile(report: Any) -> Any:
    """Drops wall-clock entries, recursively."""
    if isinstance(report, dict):
        return {k: strip_volatile(v) for k, v in report.items() if k not in VOLATILE_KEYS}
    if isinstance(report, list):
        return [strip_volatile(v) for v in report]
    return report


def write_field(
    out_dir: Path,
    name: str,
    field: ScalarField | np.ndarray,
    grid=None,
    binary: bool = False,
) -> Path:
    """Dumps a scalar field (or a boolean mask, as 0/1) next to the report."""
    if isinstance(field, ScalarField):
        grid, values = field.grid, field.values
    else:
        values = np.asarray(field, dtype=float)
    assert grid is not None
    if binary:
        path = out_dir / f"{name}.bin"
        write_field_bin(path, grid, values)
    else:
        path = out_dir / f"{name}.csv"
        write_field_csv(path, grid, values)
    return path


def write_residual_history(out_dir: Path, report: "SolveReport", name: str = "residuals") -> Path:
    path = out_dir / f"{name}.csv"
    with open(path, "w", newline="") as csvfile:
        fieldnames = ["iteration", "residual", "cone_margin", "step", "krylov"]
        writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for k, r in enumerate(report.residual_history):
            writer.writerow(
                {
                    "iteration": k,
                    "residual": repr(r),
                    "cone_margin": repr(report.cone_margin_history[k])
                    if k < len(report.cone_margin_history)
                    else "",
                    "step": repr(report.step_lengths[k - 1])
                    if 0 < k <= len(report.step_lengths)
                    else "",
                    "krylov": report.krylov_iterations[k - 1]
                    if 0 < k <= len(report.krylov_iterations)
                    else "",
                }
            )
    return path


def write_trend_csv(out_dir: Path, result: "EnvelopeResult") -> Path:
    """One row per penalization rung, for trend plots."""
    path = out_dir / "trend.csv"
    with open(path, "w", newline="") as csvfile:
        fieldnames = [
            "eps",
            "sup_overshoot",
            "overshoot_ratio",
            "sup_hessian",
            "contact_fraction",
            "residual_offK",
            "residual_onK",
            "Q_max",
            "iterations",
        ]
        writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for s in result.states:
            est = s.estimate
            writer.writerow(
                {
                    "eps": repr(s.eps),
                    "sup_overshoot": repr(s.sup_overshoot),
                    "overshoot_ratio": repr(s.overshoot_ratio),
                    "sup_hessian": repr(est.norms.sup_hessian) if est else "",
                    "contact_fraction": repr(s.contact_fraction),
                    "residual_offK": repr(s.residual_offK),
                    "residual_onK": repr(s.residual_onK),
                    "Q_max": repr(est.Q_max) if est and est.Q_max is not None else "",
                    "iterations": s.report.iterations,
                }
            )
    return path
