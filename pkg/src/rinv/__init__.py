"""Gaussian-weighted Hermite spectral right inverse of polynomials in the Laplacian."""

from .estimator import RightInverse
from .exceptions import ConvergenceError, InfeasibleSolveError, ProblemFileError, RinvError
from .factorization import (
    FactoredOperator,
    PolynomialSpec,
    factor_operator,
    find_roots,
    reconstruct,
)
from .hermite import (
    HermiteSeries,
    QuadratureRule,
    TruncationConfig,
    WeightSpec,
    enumerate_basis,
    eval_basis,
    gauss_hermite_rule,
    inner_product,
    project_samples,
    random_series,
)
from .operators import (
    OperatorMatrix,
    check_adjointness,
    check_coercivity,
    check_commutator_identity,
    check_key_step,
    check_norm_identity,
    matrix_coordinate,
    matrix_derivative,
    matrix_laplacian,
    matrix_weighted_adjoint,
    matrix_x_dot_grad,
)
from .solver import (
    SolveConfig,
    SolveReport,
    StageReport,
    assemble_factor_matrix,
    certify_bound,
    minimal_norm_solve,
    scaled_solve,
    solve_chain,
    solve_single_factor,
)

__version__ = "0.1.0"
