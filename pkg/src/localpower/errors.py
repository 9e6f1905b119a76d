"""Exception types raised across the package."""


class LocalPowerError(Exception):
    """Base class for all package errors."""


class DimMismatch(LocalPowerError, ValueError):
    pass


class RankDeficient(LocalPowerError, ArithmeticError):
    pass


class NoConvergence(LocalPowerError, ArithmeticError):
    pass


class ZeroMatrix(LocalPowerError, ValueError):
    pass


class InvalidParameter(LocalPowerError, ValueError):
    pass


class TooManyShards(InvalidParameter):
    pass


class HorizonNotMultiple(InvalidParameter):
    pass


class SingularR(LocalPowerError, ArithmeticError):
    pass


class SchemaMismatch(LocalPowerError, ValueError):
    pass


class ConfigError(LocalPowerError, ValueError):
    pass


class ParseError(LocalPowerError, ValueError):
    """Malformed LIBSVM input.

    ``kind`` is one of ``EmptyInput``, ``MalformedToken``,
    ``NonIncreasingIndex`` or ``IndexOutOfRange``; ``line`` is 1-based
    (0 when the failure is not tied to a line).
    """

    def __init__(self, kind, line=0, detail=""):
        self.kind = kind
        self.line = line
        self.detail = detail
        msg = kind if not line else f"{kind} at line {line}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)
