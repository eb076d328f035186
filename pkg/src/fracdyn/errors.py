"""Exception hierarchy shared across the toolkit."""


class FracdynError(Exception):
    """Base class for all library errors (maps to CLI exit code 1)."""


class NonConvergenceError(FracdynError):
    """A numerical routine could not reach its accuracy target."""


class DivergenceError(FracdynError):
    """A trajectory blew up. Carries the step index and time of blow-up."""

    def __init__(self, message, step=None, t=None):
        super().__init__(message)
        self.step = step
        self.t = t


class ConfigError(FracdynError):
    """Inconsistent or invalid solver/system configuration."""


class IncommensurableOrdersError(FracdynError):
    """Multi-term derivative orders do not share an admissible base order."""


class DegenerateFitError(FracdynError):
    """Regression input carries no usable slope information."""


class CellOverflowError(FracdynError):
    """Box-counting grid would exceed representable cell indices."""
