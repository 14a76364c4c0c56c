"""Exception hierarchy shared by all flatstrip modules."""


class FlatStripError(Exception):
    """Base class for every error raised by this package."""


class InvalidIsometryError(FlatStripError, ValueError):
    pass


class NotHyperbolicError(FlatStripError, ValueError):
    pass


class ReductionFailedError(FlatStripError, RuntimeError):
    pass


class InvalidProfileError(FlatStripError, ValueError):
    pass


class UnsupportedModelError(FlatStripError, TypeError):
    pass


class IntegrationError(FlatStripError, RuntimeError):
    """Raised when the ODE solver fails; carries what was integrated so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class RiccatiBlowUpError(FlatStripError, RuntimeError):
    pass


class IndeterminateError(FlatStripError):
    """A thresholded test landed too close to its threshold to decide.

    ``margin`` is the signed gap between the measured quantity and the
    threshold, ``details`` holds the raw measurements.
    """

    def __init__(self, message, margin=None, details=None):
        super().__init__(message)
        self.margin = margin
        self.details = details or {}


class NoConnectorError(FlatStripError, ValueError):
    pass


class EndpointTimeoutError(FlatStripError, RuntimeError):
    def __init__(self, message, evidence=None):
        super().__init__(message)
        self.evidence = evidence


class PseudoOrbitError(FlatStripError, ValueError):
    def __init__(self, message, index=None, jump=None):
        super().__init__(message)
        self.index = index
        self.jump = jump


class EndpointUnstableError(FlatStripError, ValueError):
    pass


class ClosingFailedError(FlatStripError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IncompleteTableError(FlatStripError, ValueError):
    def __init__(self, message, certified=None):
        super().__init__(message)
        self.certified = certified


class BudgetExhausted(FlatStripError, RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(FlatStripError, ValueError):
    pass


class IncompleteEnumerationWarning(UserWarning):
    pass
