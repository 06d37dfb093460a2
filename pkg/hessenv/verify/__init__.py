from .main import verify
from .run import run_properties
from .types import CheckOutcome, PropertyResult, PropertySpec

__all__ = ["CheckOutcome", "PropertyResult", "PropertySpec", "run_properties", "verify"]
