"""Exception hierarchy shared by all lnmpm modules."""


class LnmpmError(Exception):
    """Base class for domain errors raised by this package."""


class OutOfTransparencyWindow(LnmpmError, ValueError):
    pass


class InvalidGeometry(LnmpmError, ValueError):
    pass


class NoGuidedMode(LnmpmError):
    pass


class ModeNotFound(NoGuidedMode):
    """No guided mode with the requested label among the solved modes."""


class NoHigherOrderMode(ModeNotFound):
    """The TE01 pump mode is not guided for this geometry."""


class ConvergenceFailure(LnmpmError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BracketError(LnmpmError, ValueError):
    pass


class NoSolutionInRange(LnmpmError, ValueError):
    pass


class EnergyConservationViolated(LnmpmError, ValueError):
    pass


class GridMismatch(LnmpmError, ValueError):
    pass


class DegenerateDenominator(LnmpmError, ArithmeticError):
    def __init__(self, message, intermediates=None):
        super().__init__(message)
        self.intermediates = intermediates or {}


class ZeroCoincidence(LnmpmError, ZeroDivisionError):
    pass


class ZeroHeraldedCoincidence(LnmpmError, ZeroDivisionError):
    pass


class RegimeViolation(LnmpmError, ValueError):
    pass


class ConfigError(LnmpmError, ValueError):
    pass


class IoError(LnmpmError, OSError):
    """An input file is unreadable or malformed, or an output cannot be written."""


class InsufficientFarDelayStatistics(UserWarning):
    """Too few counts in the far-delay region to normalise g2 reliably."""
