"""Exception types shared across the package."""


class PercoprojError(Exception):
    """Base class for all package errors."""


class InvalidAddressError(PercoprojError):
    """A cell or interval address has digits out of range or wrong length."""


class KadicPointError(PercoprojError):
    """Strict-mode operation hit a k-adic point where the density is undefined."""


class AxialModeError(PercoprojError):
    """An oblique-only operation was called with an axial direction (or vice versa)."""


class RegimeError(PercoprojError):
    """Parameters violate a regime assumption (kp > 1 or k^2 p > 1)."""


class FeasibilityError(PercoprojError):
    """Requested computation exceeds the configured cell/grid budget."""


class ExtinctTreeError(PercoprojError):
    """Operation requires a nonempty realization at the requested depth."""
