"""Exception hierarchy.

Validation problems (bad input, disconnected graphs, parameter mismatches)
derive from ``ValueError``; numerical failures (unstable systems, Lyapunov
residuals, failed eigensolves) derive from ``ArithmeticError``. The CLI maps
the two families to distinct exit codes.
"""


class ValidationError(ValueError):
    pass


class GraphValidationError(ValidationError):
    pass


class DisconnectedGraphError(ValidationError):
    def __init__(self, msg="graph not connected"):
        super().__init__(msg)


class TopologyError(ValidationError):
    """Raised when an operation needs a specific topology (complete, path)."""


class NonUniformParamsError(ValidationError):
    pass


class NumericalError(ArithmeticError):
    pass


class UnstableModelError(NumericalError):
    pass


class LyapunovResidualError(NumericalError):
    pass
