"""Exception types raised by the numerical routines."""


class NumericalError(Exception):
    """Base class for failures that carry a stable name for reports."""

    @property
    def name(self):
        return type(self).__name__


class NumericalFailure(NumericalError):
    pass


class NotHermitian(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class PreconditionViolated(NumericalError):
    pass


class DegenerateFormula(NumericalError):
    """The closed-form eigenvector has a vanishing denominator."""


class NotAnEigenvalue(NumericalError):
    pass


class DegenerateLevel(NumericalError):
    """Requested level is within the degeneracy tolerance of a neighbour."""


class GridTooCoarse(NumericalError):
    pass


class StepGuard(NumericalError):
    pass


class TrackingAmbiguous(NumericalError):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class AdiabaticityWarning(UserWarning):
    """Final state drifted away from the instantaneous eigenstate."""
