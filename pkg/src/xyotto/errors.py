"""Exception hierarchy. CLI exit codes key off the two base classes."""


class ContractViolation(ValueError):
    """Bad input: parameters outside their domain, non-Hermitian matrices, ..."""


class NumericFailure(ArithmeticError):
    """A numerical routine did not meet its accuracy contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DomainError(ContractViolation):
    """A matrix function is undefined at one of the eigenvalues."""


class SingularityError(ContractViolation):
    """The counterdiabatic coefficient is undefined (h = gamma = 0 while driving)."""


class DegeneracyError(ContractViolation):
    """The eigenbasis oracle needs a non-degenerate spectrum."""


class ControlFailure(NumericFailure):
    """Counterdiabatic driving failed to freeze instantaneous populations."""


class BoundaryNotFound(NumericFailure):
    """No sign change of the extracted work was found on the search interval."""
