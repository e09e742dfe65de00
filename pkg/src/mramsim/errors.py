"""Exception hierarchy shared by every simulator module."""


class MramSimError(Exception):
    """Base class; the CLI maps any subclass to a runtime-failure exit code."""


class DomainError(MramSimError, ValueError):
    pass


class SingularityError(MramSimError, ArithmeticError):
    pass


class SamplingError(MramSimError, RuntimeError):
    pass


class FitError(MramSimError, ValueError):
    pass


class SolverError(MramSimError, RuntimeError):
    def __init__(self, message, voltage=None):
        super().__init__(message)
        self.voltage = voltage


class ReadoutError(MramSimError, RuntimeError):
    pass


class ProgrammingError(MramSimError, RuntimeError):
    pass


class DivergenceError(MramSimError, FloatingPointError):
    pass


class IdxFormatError(MramSimError, ValueError):
    pass


class IdxMagicError(IdxFormatError):
    pass


class IdxTruncatedError(IdxFormatError):
    pass


class IdxCountMismatchError(IdxFormatError):
    pass


class ConfigError(MramSimError, ValueError):
    pass
