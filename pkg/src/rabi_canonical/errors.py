"""Exception types raised across the package."""


class RabiCanonicalError(Exception):
    """Base class for all package errors."""


class DegenerateRationalError(RabiCanonicalError, ValueError):
    pass


class NotNormalizedError(RabiCanonicalError, ValueError):
    """Raised when a transformation series does not start with the identity."""


class ResonanceError(RabiCanonicalError):
    """The order-by-order solve hit a singular, inconsistent linear system."""

    def __init__(self, order, detail=""):
        self.order = order
        msg = f"resonant order l={order}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class KummerUndefinedError(RabiCanonicalError, ValueError):
    pass


class ConvergenceError(RabiCanonicalError):
    """A numerical iteration stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NotFoundError(ConvergenceError):
    pass


class SpuriousRootError(RabiCanonicalError):
    pass


class NotEntireError(RabiCanonicalError):
    pass
