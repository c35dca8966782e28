"""Exception hierarchy shared by every module of the package."""


class RCSNError(Exception):
    """Base class for all package errors."""


class NonFiniteValue(RCSNError, FloatingPointError):
    """An oracle returned NaN or Inf."""


class OracleError(RCSNError):
    """An oracle could not supply a required element at the query point."""


class SingularSystem(RCSNError, ArithmeticError):
    """A Newton system could not be solved to the required residual."""


class DirectionFailure(RCSNError):
    """No descent direction was found before the regularization cap."""


class LinesearchFailure(RCSNError):
    """The backtracking stepsize fell below the abort threshold."""


class ProxUndefined(RCSNError):
    """The proximal mapping has no selectable element."""


class SubproblemFailure(RCSNError):
    """A DCA subproblem has no available solver or did not converge."""


class UnknownFixture(RCSNError, KeyError):
    """Requested fixture name is not registered."""


class InsufficientData(RCSNError):
    """Too few usable error values to classify a convergence rate."""


class KeyMismatch(RCSNError):
    """Solver result sets do not cover the same instance keys."""


class ConfigError(RCSNError, ValueError):
    """Invalid solver or experiment configuration."""
