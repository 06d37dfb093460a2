"""
Executable property suites: selection, result table and result files.
"""

import csv
import json
import logging
from pathlib import Path

import multiprocessing_logging
from tabulate import tabulate

from ..errors import ConfigError
from ..report import sanitize
from .run import run_properties
from .suites import suites
from .types import PropertyResult, PropertySpec

logger = logging.getLogger(__name__)


def select(names: list[str]) -> list[tuple[str, PropertySpec]]:
    """Properties of the named suites, all suites when ``names`` is empty."""
    for name in names:
        if name not in suites:
            raise ConfigError(f"unknown suite {name!r}, choose from {list(suites)}", key="suite")
    return [(name, prop) for name in (names or list(suites)) for prop in suites[name]]


def print_results_table(results: list[PropertyResult]) -> None:
    rows = []
    for r in results:
        checkmark = "✅" if r.passed else "❌"
        note = r.message or ""
        rows.append([f"{checkmark} {r.suite}", r.name, r.samples, f"{r.duration:.2f}s", note])
    print(tabulate(rows, headers=["Suite", "Property", "Samples", "Time", "Note"]))
    passed = sum(r.passed for r in results)
    print(f"\n{passed}/{len(results)} properties passed")


def write_results(out_dir: Path, results: list[PropertyResult]) -> Path:
    csv_filename = out_dir / "verify_results.csv"
    with open(csv_filename, "w", newline="") as csvfile:
        fieldnames = ["Suite", "Property", "Passed", "Status", "Samples", "Duration"]
        writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for r in results:
            writer.writerow(
                {
                    "Suite": r.suite,
                    "Property": r.name,
                    "Passed": "true" if r.passed else "false",
                    "Status": r.status,
                    "Samples": r.samples,
                    "Duration": round(r.duration, 2),
                }
            )

    failures = [
        {
            "suite": r.suite,
            "property": r.name,
            "status": r.status,
            "message": r.message,
            "details": r.details,
            "worst_case": r.worst_case,
        }
        for r in results
        if not r.passed
    ]
    if failures:
        (out_dir / "verify_failures.json").write_text(
            json.dumps(sanitize(failures), indent=2, sort_keys=True) + "\n"
        )
    return csv_filename


def verify(
    names: list[str], out_dir: Path, parallel: int = 1, seed: int = 0
) -> list[PropertyResult]:
    """Runs the selected suites and writes their results to ``out_dir``."""
    props = select(names)
    if parallel > 1:
        multiprocessing_logging.install_mp_handler()
    logger.info(f"Running {len(props)} properties from {names or list(suites)} with seed {seed}")
    results = run_properties(props, parallel, seed)
    print_results_table(results)
    write_results(out_dir, results)
    return results
