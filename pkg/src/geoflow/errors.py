"""Exception hierarchy.

The CLI maps ``ConfigError`` to exit code 64 and every other ``GeoflowError``
to exit code 70.
"""


class GeoflowError(Exception):
    pass


class ConfigError(GeoflowError):
    pass


class ExprError(ConfigError):
    """Parse or evaluation failure in a field expression."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} at offset {offset}")
        self.offset = offset


class ParseError(ExprError):
    pass


class UnknownIdentifier(ParseError):
    pass


class EvalDomainError(ExprError):
    def __init__(self, message, node=None, coords=None):
        where = "" if node is None else f" at node {node} (x={coords[0]:.6g}, y={coords[1]:.6g})"
        super().__init__(message + where)
        self.node = node
        self.coords = coords


class GridMismatch(GeoflowError, ValueError):
    pass


class SolverError(GeoflowError):
    pass


class IncompatibleRHS(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class IntegrationError(SolverError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class CFLViolation(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class PreconditionError(GeoflowError):
    pass


class NotDivergenceFree(PreconditionError):
    pass


class NotSymplectic(PreconditionError):
    pass


class NotHarmonic(PreconditionError):
    pass


class NotClosed(PreconditionError):
    pass


class EpsTooSmall(PreconditionError):
    pass
