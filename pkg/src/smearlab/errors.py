"""Exception types mapped to CLI exit codes by the runner."""

__all__ = [
    "SchemaError",
    "AssumptionError",
    "BoundViolationError",
    "FitError",
    "DegenerateFactorError",
]


class SchemaError(ValueError):
    """Configuration rejected: unknown key, wrong type, or a named
    constraint failed.  Exit code 2."""


class AssumptionError(RuntimeError):
    """A spectral or structural assumption failed on the actual data
    (gap closed, split inconsistent, state outside the patch).
    Exit code 3."""


class BoundViolationError(RuntimeError):
    """A rigorous bound was exceeded numerically, which would falsify the
    implementation rather than the estimate.  Exit code 4."""


class FitError(AssumptionError):
    """Decay-curve fit impossible (too few points above the floor)."""


class DegenerateFactorError(AssumptionError):
    """Polar re-unitarization hit a singular value below threshold."""
