"""Exception hierarchy shared by every module."""


class SynthNullError(Exception):
    """Base class for all library errors."""


class InputError(SynthNullError, ValueError):
    """Malformed or inconsistent input data."""


class DomainError(SynthNullError, ValueError):
    """An operation left the domain it is defined on.

    ``admissible`` holds the (lo, hi) range that would have been accepted.
    """

    def __init__(self, message, admissible=None):
        super().__init__(message)
        self.admissible = admissible


class PreconditionError(SynthNullError, ValueError):
    """A documented precondition of an operation does not hold."""


class ParameterError(SynthNullError, ValueError):
    """A numeric parameter is outside its allowed range."""


class ModelError(SynthNullError, ArithmeticError):
    """The smooth model became invalid during evaluation."""


class InfeasibleError(SynthNullError, ValueError):
    """No causal coupling exists between two marginals.

    ``obstruction`` carries the first violation found.
    """

    def __init__(self, message, obstruction=None):
        super().__init__(message)
        self.obstruction = obstruction
