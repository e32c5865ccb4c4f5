"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line interface:
2 for malformed input or schema problems, 3 for degenerate data, 4 for
numerical failures.
"""


class OptmedError(Exception):
    exit_code = 4


class InputError(OptmedError, ValueError):
    exit_code = 2


class DegenerateError(OptmedError, ValueError):
    exit_code = 3


class NumericError(OptmedError, ArithmeticError):
    exit_code = 4


class NonFiniteInput(InputError):
    pass


class SchemaMismatch(InputError):
    pass


class FeatureOrderMismatch(InputError):
    pass


class InvalidCosine(InputError):
    pass


class ZeroVarianceColumn(DegenerateError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} has zero variance")


class DegenerateTreatment(DegenerateError):
    pass


class DegenerateComposite(DegenerateError):
    pass


class DegeneratePath(DegenerateError):
    pass


class ZeroKernel(DegenerateError):
    pass


class RegimeUnsupported(DegenerateError):
    pass


class InsufficientDf(DegenerateError):
    pass


class SingularMetric(DegenerateError):
    pass


class ZeroPathVector(DegenerateError):
    pass


class FactorisationFailure(NumericError):
    pass
