"""Exception hierarchy shared by all hetnet modules."""


class HetNetError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(HetNetError, ValueError):
    pass


class ConfigError(HetNetError, ValueError):
    pass


class NonConvergenceError(HetNetError, ArithmeticError):
    """Raised when a numerical routine misses its tolerance.

    The best available estimate is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class PoleError(HetNetError, ArithmeticError):
    pass


class ContourError(HetNetError, ArithmeticError):
    pass


class ProbabilityRangeError(HetNetError, ArithmeticError):
    pass


class UnsupportedPairError(HetNetError, ValueError):
    pass


class ZeroProbabilityCaseError(HetNetError, ArithmeticError):
    pass
