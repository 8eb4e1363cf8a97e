"""Exception types raised by the solver stack."""


class KirchhoffError(Exception):
    """Base class for all package errors."""


class InvalidConfigurationError(KirchhoffError, ValueError):
    pass


class MeshMismatchError(KirchhoffError, ValueError):
    pass


class DegenerateDirectionError(KirchhoffError, ValueError):
    """Raised when an operation needs a nonzero field and received zero."""


class DomainError(KirchhoffError, ValueError):
    pass


class SolverFailureError(KirchhoffError, RuntimeError):
    """An iterative linear solve did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FiberingFailureError(KirchhoffError, RuntimeError):
    """No sign change of the fibering derivative could be bracketed."""
