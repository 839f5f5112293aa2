"""Error types shared across the package."""


class TruncationError(ValueError):
    """Fock-space truncation is too small for the requested construction."""


class GridError(ValueError):
    """Frequency or phase-space grid does not satisfy a precondition."""


class CoefficientError(ValueError):
    """Heralded coefficients are mutually inconsistent (e.g. non-PSD state)."""
