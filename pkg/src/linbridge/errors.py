"""Exception hierarchy for linbridge."""


class BridgeError(Exception):
    """Base class for all linbridge errors."""


class OutOfInterval(BridgeError, ValueError):
    """A time argument lies outside the system's interval."""


class NonFiniteResult(BridgeError, ArithmeticError):
    """An integration produced NaN or infinite entries."""


class Unbridgeable(BridgeError):
    """The terminal Gramian P(tf) is singular, so the bridge is undefined."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularGramian(BridgeError):
    """The backward Gramian cannot be inverted at a time where a gain is needed."""


class InsufficientSamples(BridgeError, ValueError):
    """Fewer than two samples were supplied to a covariance estimator."""


class ShapeMismatch(BridgeError, ValueError):
    """Empirical and analytic statistics do not line up."""


class UnknownPreset(BridgeError, KeyError):
    """Requested demo preset does not exist."""
