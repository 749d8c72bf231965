"""Discrete energy certificates for the two-phase Muskat problem.

The package minimizes the weighted Dirichlet energy ``mu+ D(f+) + mu- D(f-)``
over pairs whose trace jump across a piecewise-linear interface is
prescribed, and compares the minimum with the closed-form competitor bound
``rho_jump^2 (mu+ ||eta_-||_1 + mu- ||eta_+||_1)``.
"""

from .bounds import (
    BoundReport,
    competitor_bound,
    interpolated_competitor_energy,
    one_fluid_bound_check,
    saturation_sweep,
    verify_bound,
    verify_levels,
)
from .dissipation import euler_dissipation_check, green_identity_residual, lyapunov
from .mesh import build_phase_mesh, refine
from .model import (
    Boundary,
    DomainSpec,
    FluidParams,
    InterfaceProfile,
    Problem,
    ProblemError,
    curvature,
    l1_parts,
    l2_squared,
    renormalized_area,
    validate_config,
)
from .rect import RectProblem, fd_rect_solve, rect_energy
from .solver import assemble, minimize, solve_problem

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "Boundary",
    "DomainSpec",
    "FluidParams",
    "InterfaceProfile",
    "Problem",
    "ProblemError",
    "RectProblem",
    "assemble",
    "build_phase_mesh",
    "competitor_bound",
    "curvature",
    "euler_dissipation_check",
    "fd_rect_solve",
    "green_identity_residual",
    "interpolated_competitor_energy",
    "l1_parts",
    "l2_squared",
    "lyapunov",
    "minimize",
    "one_fluid_bound_check",
    "rect_energy",
    "refine",
    "renormalized_area",
    "saturation_sweep",
    "solve_problem",
    "validate_config",
    "verify_bound",
    "verify_levels",
]
