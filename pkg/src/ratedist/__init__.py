"""Rate-distortion curves of discrete memoryless sources.

The primary solver targets a prescribed distortion directly by alternating
Sinkhorn-style scaling updates with scalar Newton root-finding for the two
dual variables; a classical Blahut-Arimoto baseline provides an independent
oracle.  See the README for the CLI surface.
"""

from .blahut import BAOptions, BAResult, ba_fixed_slope, ba_search_slope
from .diagnostics import (
    LinearSegment,
    RDCurve,
    ResidualRecord,
    detect_linear_segment,
    kkt_residuals,
    second_divided_differences,
)
from .problem import (
    ConditionalLaw,
    RDProblem,
    RDSolution,
    expected_distortion,
    induced_marginal,
    rate_objective,
    validate_problem,
)
from .sinkhorn import (
    KernelUnderflowError,
    SolverOptions,
    SolverState,
    f_eta,
    g_lambda,
    newton_eta,
    newton_lambda,
    sinkhorn_update_phi,
    sinkhorn_update_psi,
    solve_rd,
    update_r,
)
from .sources import (
    GridSpec,
    analytic_marginal,
    analytic_rd_binary,
    analytic_rd_gaussian,
    analytic_rd_laplacian,
    binary_entropy,
    build_bifurcation_fixture,
    build_binary,
    build_gaussian,
    build_laplacian,
    discretize_source,
)

__version__ = "0.1.0"

__all__ = [
    "BAOptions",
    "BAResult",
    "ConditionalLaw",
    "GridSpec",
    "KernelUnderflowError",
    "LinearSegment",
    "RDCurve",
    "RDProblem",
    "RDSolution",
    "ResidualRecord",
    "SolverOptions",
    "SolverState",
    "analytic_marginal",
    "analytic_rd_binary",
    "analytic_rd_gaussian",
    "analytic_rd_laplacian",
    "ba_fixed_slope",
    "ba_search_slope",
    "binary_entropy",
    "build_bifurcation_fixture",
    "build_binary",
    "build_gaussian",
    "build_laplacian",
    "detect_linear_segment",
    "discretize_source",
    "expected_distortion",
    "f_eta",
    "g_lambda",
    "induced_marginal",
    "kkt_residuals",
    "newton_eta",
    "newton_lambda",
    "rate_objective",
    "second_divided_differences",
    "sinkhorn_update_phi",
    "sinkhorn_update_psi",
    "solve_rd",
    "update_r",
    "validate_problem",
]
