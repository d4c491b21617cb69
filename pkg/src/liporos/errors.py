"""Exception hierarchy; the CLI maps each family to an exit code."""


class LiporosError(Exception):
    exit_code = 1


class InputError(LiporosError, ValueError):
    """Caller supplied something outside an operation's preconditions."""

    exit_code = 2


class DomainError(InputError):
    """The quantity asked for is undefined on this input (e.g. an empty ball)."""


class HypothesisNotMet(InputError):
    pass


class ExtractionError(InputError):
    """The ball extractor could not produce a certified sequence."""


class BoundViolation(LiporosError, AssertionError):
    """A proven inequality failed when measured; always a bug or a corrupted input."""

    exit_code = 3


class NumericError(LiporosError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SolverDisagreement(NumericError):
    pass


class InternalError(NumericError):
    pass
