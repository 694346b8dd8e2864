"""Prime-producing tuples, good-tuple chains and Maynard-sieve chain selection."""

__version__ = "0.1.0"

from .admissibility import OffsetTuple, is_admissible, primitive_class  # noqa: E402
from .errors import (  # noqa: E402
    ConstructionError,
    DegenerateMeasureError,
    InfeasibleError,
    InputError,
    InvariantViolation,
    PrimechainError,
    ResourceError,
)
from .prime_engine import find_witnesses, is_prime, sieve_range  # noqa: E402

__all__ = [
    "__version__",
    "OffsetTuple",
    "is_admissible",
    "primitive_class",
    "find_witnesses",
    "is_prime",
    "sieve_range",
    "PrimechainError",
    "InputError",
    "ResourceError",
    "InfeasibleError",
    "ConstructionError",
    "DegenerateMeasureError",
    "InvariantViolation",
]
