"""Exception taxonomy shared across the package.

ValidationError covers rejected inputs (bad parameters, grids, configs);
NumericalError covers failures of the linear algebra itself.  The CLI maps
these onto its exit codes (2 and 3 respectively).
"""


class ThermodelayError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ThermodelayError, ValueError):
    """Invalid input: parameters, grid sizes, configs, preconditions."""


class DimensionGuardError(ValidationError):
    """Dense-matrix operation requested above the desk-scale size limit."""


class NumericalError(ThermodelayError, RuntimeError):
    """A numerical routine failed to deliver its advertised accuracy."""


class SingularSystemError(NumericalError):
    """A linear system was (numerically) singular.

    Carries the reciprocal condition estimate of the factorization when one
    is available.
    """

    def __init__(self, message: str, rcond: float | None = None):
        super().__init__(message)
        self.rcond = rcond


class EigensolverError(NumericalError):
    """The dense eigensolver did not converge."""


class DeflationError(NumericalError):
    """Zero-mode deflation found an unexpected number of near-zero eigenvalues."""


class NoDecayDataError(NumericalError):
    """An energy trace carried no usable data for a decay fit."""
