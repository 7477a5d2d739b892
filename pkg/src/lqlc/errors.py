"""Exception hierarchy.

Validation problems (bad inputs, too few samples) derive from
:class:`ValidationError`; failures of the numerics themselves derive from
:class:`NumericalError`. The CLI maps these to exit codes 1 and 2.
"""


class LqlcError(Exception):
    """Base class for all package errors."""


class ValidationError(LqlcError, ValueError):
    pass


class NumericalError(LqlcError, ArithmeticError):
    pass


class DegeneratePosition(ValidationError):
    pass


class MissingClockBias(ValidationError):
    pass


class InsufficientObservations(ValidationError):
    pass


class InvalidUniform(ValidationError):
    pass


class NonFiniteSample(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class DegenerateSample(ValidationError):
    pass


class InsufficientSeries(ValidationError):
    pass


class DegenerateGeometry(NumericalError):
    pass


class SingularNormalMatrix(NumericalError):
    pass


class DivergedSolution(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class ComponentCollapse(NumericalError):
    pass
