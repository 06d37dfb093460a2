from ..types import PropertySpec
from .cones import tests as tests_cones
from .eigenops import tests as tests_eigenops
from .envelope import tests as tests_envelope
from .fields import tests as tests_fields
from .solver import tests as tests_solver

suites: dict[str, list[PropertySpec]] = {
    "eigenops": tests_eigenops,
    "cones": tests_cones,
    "fields": tests_fields,
    "solver": tests_solver,
    "envelope": tests_envelope,
}

tests: list[PropertySpec] = [test for suite in suites.values() for test in suite]
