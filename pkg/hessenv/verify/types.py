from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, Literal, TypedDict

import numpy as np

Status = Literal["success", "error"]


@dataclass
class CheckOutcome:
    """
    Result of checking one property on its samples.
    """

    passed: bool
    details: dict[str, Any] = field(default_factory=dict)
    worst_case: dict[str, Any] | None = None


@dataclass
class PropertyResult:
    """
    Result of running a property, including how it ran.
    """

    suite: str
    name: str
    status: Status
    passed: bool
    samples: int
    duration: float
    details: dict[str, Any] = field(default_factory=dict)
    worst_case: dict[str, Any] | None = None
    message: str = ""


class PropertySpec(TypedDict):
    """
    Specification for a sampled property check.
    """

    name: str
    check: Callable[[np.random.Generator, int], CheckOutcome]
    samples: int
    seed: int
