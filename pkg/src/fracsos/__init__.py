"""fracsos: certified solving of nonsmooth fractional programs whose data are
SOS-convex semi-algebraic functions, through a single semidefinite relaxation.
"""

from .conic import ConicProgram, VariableLayout, smat, svec
from .extract import (SolveReport, certify, dinkelbach_value, extract_minimizer,
                      solve_program)
from .model import (CheckReport, FractionalProgram, LmiSet, OmegaEmptyError,
                    OmegaUnboundedError, SemialgFunction, check_omega_interior,
                    check_slater, eval_semialg, validate)
from .polycore import (MomentVector, MonomialBasis, Poly, basis_matrices,
                       check_sos, check_sos_convex, eval_poly, hessian,
                       moment_functional, moment_matrix, monomial_basis,
                       variables)
from .relax import build_moment_relaxation, build_multiplier_dual
from .sdpsolve import ConicSolution, SolveOptions, solve
from .verify import GridSpec, OracleResult, grid_oracle

__version__ = "0.1.0"

__all__ = [
    "ConicProgram", "VariableLayout", "smat", "svec",
    "SolveReport", "certify", "dinkelbach_value", "extract_minimizer", "solve_program",
    "CheckReport", "FractionalProgram", "LmiSet", "OmegaEmptyError",
    "OmegaUnboundedError", "SemialgFunction", "check_omega_interior",
    "check_slater", "eval_semialg", "validate",
    "MomentVector", "MonomialBasis", "Poly", "basis_matrices", "check_sos",
    "check_sos_convex", "eval_poly", "hessian", "moment_functional",
    "moment_matrix", "monomial_basis", "variables",
    "build_moment_relaxation", "build_multiplier_dual",
    "ConicSolution", "SolveOptions", "solve",
    "GridSpec", "OracleResult", "grid_oracle",
]
