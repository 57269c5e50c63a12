"""Exception types shared across the package."""


class KdpisoError(Exception):
    """Base class for all package-specific errors."""


class DatabaseParseError(KdpisoError):
    """The crystal database file could not be parsed."""


class DatabaseValidationError(KdpisoError):
    """A crystal database entry violates an invariant."""


class MissingDispersionError(KdpisoError):
    """The crystal carries no usable Sellmeier data (flag no_dispersion_data)."""


class DispersionRangeError(KdpisoError, ValueError):
    """Wavelength outside the validity range of a Sellmeier entry."""


class NoPhaseMatchingError(KdpisoError):
    """The phase mismatch has constant sign over the angular search interval."""


class GridMismatchError(KdpisoError, ValueError):
    """Two spectral grids are incompatible (axes or normalization)."""


class DelayRangeError(KdpisoError, ValueError):
    """The delay axis is too narrow for a reliable interference baseline."""
