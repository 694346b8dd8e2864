class PrimechainError(Exception):
    """Base class for errors raised by primechain."""


class InputError(PrimechainError, ValueError):
    """Invalid or out-of-domain input (including 64-bit overflow)."""


class ResourceError(PrimechainError, MemoryError):
    """Requested work exceeds the configured memory budget."""


class InfeasibleError(PrimechainError):
    """No residue class exists, e.g. a tuple covers every class mod p."""

    def __init__(self, msg: str, prime: int | None = None):
        super().__init__(msg)
        self.prime = prime


class ConstructionError(PrimechainError):
    """A cutoff function violates its support or smoothness constraints."""


class DegenerateMeasureError(PrimechainError):
    """All sieve weights vanish, so no probability measure can be formed."""


class InvariantViolation(PrimechainError, AssertionError):
    """An internal postcondition failed; signals corrupted input data."""
