"""Block-parallel fixed-point iterations and proximal-point solvers."""

from .blockspace import BlockPartition, BlockVector, block_max_norm, euclidean_norm, inner_product, make_partition
from .engine import RunConfig, RunResult, residual, run_gauss_seidel_h0, run_general, run_jacobi
from .monotone import (
    Atom,
    MonotoneProblem,
    SaddlePoint,
    as_fixed_point_operator,
    brute_force_zero,
    convex_program_qp,
    evaluate_dual,
    iterative_resolvent,
    linear,
    prox_separable,
    resolvent,
    resolvent_linear,
    resolvent_saddle,
    resolvent_vi,
    saddle_quadratic,
    separable_prox,
    variational_inequality,
)
from .operators import FixedPointOperator, apply, check_h2, check_h3
from .schedule import Schedule, build_schedule, validate_schedule

__version__ = "0.1.0"
