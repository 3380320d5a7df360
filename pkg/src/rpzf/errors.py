"""Exception hierarchy. Each family maps to a distinct CLI exit code."""


class RPZFError(Exception):
    exit_code = 1


class ParseError(RPZFError, ValueError):
    exit_code = 2


class DomainError(RPZFError, ValueError):
    exit_code = 3


class IncompatibilityError(DomainError):
    """Graph and state space (or bundle and vector) do not fit together."""


class SizeError(RPZFError):
    exit_code = 4


class NumericalError(RPZFError, ArithmeticError):
    exit_code = 5


class SingularityError(NumericalError):
    pass


class ConsistencyError(NumericalError):
    """A constructed matrix violates a structural invariant."""


class BracketError(NumericalError):
    pass
