"""Exception types shared across the package."""


class QBUError(Exception):
    """Base class for all library errors."""


class InvalidInputError(QBUError, ValueError):
    """Malformed or out-of-domain input."""


class ResourceLimitError(QBUError, RuntimeError):
    """A size or degree guard was exceeded."""


class ConditioningError(QBUError, ArithmeticError):
    """Interpolation system too ill-conditioned to trust.

    Attributes
    ----------
    nodes : list of float
        The interpolation nodes that were attempted.
    condition : float
        Estimated condition number of the node system.
    """

    def __init__(self, message, nodes=(), condition=float("nan")):
        super().__init__(message)
        self.nodes = list(nodes)
        self.condition = condition


class NotFoundError(QBUError, LookupError):
    """A search finished without finding a matching object."""
