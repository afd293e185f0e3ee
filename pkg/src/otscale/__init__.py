"""Entropic optimal transport by greedy and stochastic matrix scaling."""

from .core import (
    Histogram,
    KernelMatrix,
    ScalingPair,
    d_rho,
    dist_l1,
    dual_objective,
    entropy,
    grid_cost_matrix,
    make_kernel,
    plan_from_scaling,
    regularized_cost,
    rho,
    transport_cost,
)
from .errors import (
    DegenerateError,
    DimensionError,
    DomainError,
    FormatError,
    NumericalError,
    OTScaleError,
    UnderflowError,
)
from .samplers import (
    ProbabilityFunction,
    evaluate_psi,
    make_rng,
    sample_block,
    sample_index,
    top_d_indices,
)
from .solvers import (
    ConvergenceTrace,
    SolveResult,
    SolverConfig,
    block_step,
    greenkhorn_step,
    sinkhorn_step,
    solve,
    stochastic_step,
)
from .violations import (
    ViolationState,
    apply_block_update,
    apply_col_update,
    apply_row_update,
    init_state,
)

__version__ = "0.1.0"
