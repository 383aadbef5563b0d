"""Exception hierarchy.

Two families: ``InputError`` for problems with what the caller asked for
(bad parameters, impossible preconditions) and ``NumericalError`` for
failures of the numerics themselves. The CLI maps them to exit codes 2 and 3.
"""


class InvQuadError(Exception):
    pass


class InputError(InvQuadError, ValueError):
    pass


class NumericalError(InvQuadError, ArithmeticError):
    pass


class ValidationError(InputError):
    pass


class UnsupportedCriterion(InputError):
    pass


class UnsupportedSpace(InputError):
    pass


class InfeasibleApportionment(InputError):
    pass


class InsufficientDesign(InputError):
    pass


class NotEstimable(InputError):
    pass


class SingularMatrix(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class MultipleMinEigenvalue(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class TooManyFailedFits(NumericalError):
    pass


class ClosedFormMismatchWarning(UserWarning):
    """A printed closed-form weight disagreed with the generic weight formula."""
