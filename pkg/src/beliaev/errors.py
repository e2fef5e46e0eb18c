"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class UnsupportedOperation(NotImplementedError):
    """Operation only available for the contact (r == 1) dispersion."""


class ConvergenceError(RuntimeError):
    """Numerical procedure failed to reach the requested tolerance.

    The partial result, when there is one, is kept on ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class PoleError(ZeroDivisionError):
    """Spectral parameter sits exactly on a pole of a resolvent."""


class UnderResolvedError(RuntimeError):
    """Finite-volume model cannot resolve the requested quantity."""
