"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) and an
``exit_code`` used by the command line front end: 1 for invalid input, 2 for
numerical failure.
"""


class SLExtError(Exception):
    """Base class for all library errors."""

    exit_code = 2

    @property
    def code(self) -> str:
        return type(self).__name__

    def one_line(self) -> str:
        msg = " ".join(str(self).split())
        return f"{self.code}: {msg}" if msg else self.code


class InputError(SLExtError):
    exit_code = 1


class NumericalError(SLExtError):
    exit_code = 2


# problem construction
class WronskianNotNormalized(InputError):
    pass


class NonPositiveCoefficient(InputError):
    pass


class GammaOutOfRange(InputError):
    pass


class ProblemFileError(InputError):
    pass


class SpecParseError(InputError):
    pass


# integration and quadrature
class StepUnderflow(NumericalError):
    pass


class RangeMismatch(InputError):
    pass


class QuadratureNoConvergence(NumericalError):
    pass


# boundary values
class VanishingPrincipal(NumericalError):
    pass


class ExtrapolationDivergence(NumericalError):
    pass


class ZeroFriedrichsEigenvalue(NumericalError):
    pass


class DenominatorZero(NumericalError):
    pass


# classification
class NonnegativityViolated(InputError):
    pass


class ComplexCWithNonrealBoundary(InputError):
    pass


class NotNonnegative(InputError):
    pass


class PathDisagreement(NumericalError):
    pass


# spectra
class DetNotOne(InputError):
    pass


class ScanTooCoarse(NumericalError):
    pass


class ScanExhausted(NumericalError):
    pass


# symmetric problems
class NotReflectionInvariant(InputError):
    pass


class NotSymmetric(InputError):
    pass


class MidpointValueZero(NumericalError):
    pass


class UnsupportedCoupling(InputError):
    pass


# bessel
class BracketFailure(NumericalError):
    pass


class InequalityViolated(NumericalError):
    pass
