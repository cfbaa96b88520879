"""Exception hierarchy shared by the kernels, the solver and the harness."""


class MLGError(Exception):
    """Base class for all package errors."""


class DimensionError(MLGError, ValueError):
    """Operand shapes are incompatible (non-square, length mismatch, ...)."""


class DomainError(MLGError, ValueError):
    """Input lies outside the domain of the operation (branch cut, not in the algebra)."""


class NumericalError(MLGError, ArithmeticError):
    """An iterative kernel failed to converge or produced non-finite values."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class SingularityError(NumericalError):
    """Linear system is singular even after Tikhonov regularization."""


class GroupDriftError(MLGError):
    """A group element left its group and cleanup projection could not restore it."""


class InputError(MLGError, ValueError):
    """Invalid user-supplied input (bad start point, empty sample, ...)."""


class SamplingError(MLGError):
    """Random feasible-start sampling exhausted its retry budget."""


class FieldEvaluationError(MLGError):
    """A scalar field raised while being evaluated at a perturbed point."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class StateError(MLGError):
    """Interior-point state is corrupted (nonpositive slack or multiplier)."""
