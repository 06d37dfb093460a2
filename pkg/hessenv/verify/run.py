import logging
import time
from concurrent.futures import Future, ProcessPoolExecutor, as_completed

import numpy as np
from tqdm import tqdm

from .types import PropertyResult, PropertySpec

logger = logging.getLogger(__name__)


def execute(suite: str, prop: PropertySpec, seed: int = 0) -> PropertyResult:
    """
    Runs one property with its own generator, seeded from the run seed and the
    property seed together.
    """
    rng = np.random.default_rng([seed, prop["seed"]])
    start = time.perf_counter()
    try:
        outcome = prop["check"](rng, prop["samples"])
    except Exception as e:
        logger.exception(f"Property {suite}/{prop['name']} raised")
        return PropertyResult(
            suite=suite,
            name=prop["name"],
            status="error",
            passed=False,
            samples=prop["samples"],
            duration=time.perf_counter() - start,
            message=f"{type(e).__name__}: {e}",
        )
    return PropertyResult(
        suite=suite,
        name=prop["name"],
        status="success",
        passed=bool(outcome.passed),
        samples=prop["samples"],
        duration=time.perf_counter() - start,
        details=outcome.details,
        worst_case=outcome.worst_case,
    )


def run_properties(
    props: list[tuple[str, PropertySpec]],
    parallel: int = 1,
    seed: int = 0,
) -> list[PropertyResult]:
    """
    Run (suite, property) pairs, in worker processes when ``parallel`` > 1.

    Results come back in input order whatever order the workers finish in.
    """
    # For coverage to work with multiprocessing
    # https://pytest-cov.readthedocs.io/en/latest/subprocess-support.html
    try:
        # noreorder
        from pytest_cov.embed import cleanup_on_sigterm  # fmt: skip  # type: ignore
    except ImportError:
        pass
    else:
        cleanup_on_sigterm()

    parallel = max(1, min(len(props), parallel))
    if parallel == 1:
        return [
            execute(suite, prop, seed)
            for suite, prop in tqdm(props, unit="property", desc="Progress", disable=None)
        ]

    results: dict[int, PropertyResult] = {}
    with ProcessPoolExecutor(parallel) as executor:
        future_to_index: dict[Future, int] = {
            executor.submit(execute, suite, prop, seed): i for i, (suite, prop) in enumerate(props)
        }
        for future in tqdm(
            as_completed(future_to_index),
            total=len(props),
            unit="property",
            desc="Progress",
            # disabled in non-TTY (such as pytest)
            disable=None,
        ):
            i = future_to_index[future]
            suite, prop = props[i]
            try:
                results[i] = future.result()
            except Exception as e:
                logger.exception(f"Property {suite}/{prop['name']} failed in its worker")
                results[i] = PropertyResult(
                    suite=suite,
                    name=prop["name"],
                    status="error",
                    passed=False,
                    samples=prop["samples"],
                    duration=0.0,
                    message=f"{type(e).__name__}: {e}",
                )
    return [results[i] for i in range(len(props))]
