"""Primal-dual interior-point optimization over matrix Lie groups."""
from .errors import (DimensionError, DomainError, FieldEvaluationError, GroupDriftError,
                     InputError, MLGError, NumericalError, SamplingError, SingularityError,
                     StateError)
from .lie import (GroupElement, GroupKind, GroupTuple, SLn, SOn, Td, exp_at, generators, hat,
                  membership_residual, random_element, vee)
from .matfun import expm, logm, solve_dense, sqrtm_db
from .diff import ScalarField, check_gradient, curvature, gradient_row, sensitivity
from .solver import (ProblemSpec, SolveReport, SolverOptions, estimate_convergence_order,
                     kkt_diagnostics, kkt_residual, solve)

__version__ = "0.1.0"
