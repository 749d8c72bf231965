"""Energy bounds: competitor bound, certified comparison, saturation sweeps.

The competitor pair ``f+ = rho_jump * max(-y, 0)``, ``f- = rho_jump * max(y, 0)``
is admissible whenever ``sigma = 0`` and has energy exactly

    B = rho_jump^2 (mu+ ||eta_-||_1 + mu- ||eta_+||_1).

Because the discrete space is conforming, ``E <= E_h`` for the continuum
minimum ``E``, so a verified ``E_h < B`` certifies ``E < B``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import build_phase_mesh, segment_lines
from .model import DomainSpec, FluidParams, InterfaceProfile, Problem, ProblemError, l1_parts
from .model import validate_config
from .profiles import mollified_step
from .rect import RectProblem, rect_energy
from .solver import (
    DEFAULT_REL_TOL,
    EnergyForm,
    PhaseMeshes,
    one_fluid_solve,
    solve_problem,
)

__all__ = [
    "SigmaNotZero",
    "competitor_bound",
    "one_fluid_bound",
    "interpolated_competitor_energy",
    "BoundReport",
    "verify_bound",
    "verify_levels",
    "SweepPoint",
    "saturation_sweep",
    "step_problem",
    "OneFluidLevel",
    "OneFluidReport",
    "one_fluid_bound_check",
]


class SigmaNotZero(ProblemError):
    pass


def competitor_bound(eta: InterfaceProfile, params: FluidParams) -> float:
    neg, pos = l1_parts(eta)
    return params.rho_jump**2 * (params.mu_plus * neg + params.mu_minus * pos)


def one_fluid_bound(eta: InterfaceProfile, params: FluidParams) -> float:
    """``rho_jump^2 mu- ||eta||_1``, the one-fluid analogue of the competitor bound."""
    neg, pos = l1_parts(eta)
    return params.rho_jump**2 * params.mu_minus * (neg + pos)


def interpolated_competitor_energy(
    eta: InterfaceProfile, params: FluidParams, meshes: PhaseMeshes, form: EnergyForm
) -> float:
    """Energy form evaluated at the nodal interpolant of the competitor pair.

    The interpolant is an admissible discrete pair, so the value is never
    below the discrete minimum; it tends to ``B`` under refinement.
    """
    if params.sigma != 0:
        raise SigmaNotZero("the competitor is admissible only without surface tension")
    r = params.rho_jump
    fm = meshes.minus.interpolate(lambda x, y: r * np.maximum(y, 0.0))
    fp = meshes.plus.interpolate(lambda x, y: r * np.maximum(-y, 0.0))
    return form.energy_of_pair(fm, fp)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one certified (or exploratory) comparison ``E_h`` vs ``B``.

    ``ratio`` is NaN when ``B = 0``; ``saturated`` marks the flat case where
    ``0 <= 0`` replaces the strict inequality.
    """

    E_h: float
    B: float
    ratio: float
    competitor_energy: float | None
    strict_pass: bool
    saturated: bool
    sigma_mode: str
    nx: int
    ny: int
    iterations: int
    green_residual: float = field(default=float("nan"))

    @property
    def margin(self) -> float:
        return self.B - self.E_h


def _report(problem: Problem, ps, green: float) -> BoundReport:
    params = problem.params
    E_h = ps.energy
    B = competitor_bound(problem.eta, params)
    exact = params.sigma == 0
    comp = (
        interpolated_competitor_energy(problem.eta, params, ps.meshes, ps.solution.form)
        if exact
        else None
    )
    saturated = B == 0 and problem.eta.is_zero()
    return BoundReport(
        E_h=E_h,
        B=B,
        ratio=E_h / B if B > 0 else float("nan"),
        competitor_energy=comp,
        strict_pass=bool(E_h < B),
        saturated=bool(saturated and E_h == 0),
        sigma_mode="exact" if exact else "exploratory",
        nx=ps.meshes.minus.nx,
        ny=ps.meshes.minus.ny,
        iterations=ps.solution.iterations,
        green_residual=green,
    )


def verify_bound(
    problem: Problem,
    nx: int,
    ny: int,
    rel_tol: float = DEFAULT_REL_TOL,
    smoothing_width: float = 0.0,
    x_lines=None,
    meshes: PhaseMeshes | None = None,
) -> BoundReport:
    """Solve on an ``nx`` by ``ny`` mesh per phase and compare ``E_h`` with ``B``."""
    from .dissipation import green_identity_residual

    ps = solve_problem(problem, nx, ny, rel_tol, smoothing_width, x_lines, meshes)
    return _report(problem, ps, green_identity_residual(ps.solution, ps.flux))


def verify_levels(
    problem: Problem,
    nx: int,
    ny: int,
    levels: int,
    rel_tol: float = DEFAULT_REL_TOL,
    smoothing_width: float = 0.0,
) -> list[BoundReport]:
    """Reports on ``levels`` nested meshes, each a bisection of the previous one."""
    from .solver import build_meshes

    meshes = build_meshes(problem, nx, ny)
    out = []
    for k in range(levels):
        if k:
            meshes = meshes.refined()
        out.append(verify_bound(problem, nx, ny, rel_tol, smoothing_width, meshes=meshes))
    return out


@dataclass(frozen=True)
class SweepPoint:
    L: float
    H: float
    ramp: float
    ratio: float
    E: float
    B: float
    mode: str


def step_problem(
    L: float,
    H: float,
    ramp: float,
    mu_plus: float,
    mu_minus: float = 1.0,
    halfwidth: float | None = None,
    depth: float | None = None,
    headroom: float | None = None,
) -> Problem:
    """Mollified step of height ``H`` and length ``L`` with unit density jump.

    Walls default to ``4 L`` below the flat interface and ``4 L`` above the
    step top; the window defaults to ``[-4L, 4L]`` widened to fit the step.
    """
    eta = mollified_step(L, H, ramp)
    X = halfwidth if halfwidth is not None else max(4.0 * L, L / 2 + ramp + 2.0 * L)
    D = 4.0 * L if depth is None else depth
    top = H + (4.0 * L if headroom is None else headroom)
    domain = DomainSpec.flat(X, D, top)
    return validate_config(FluidParams(mu_plus, mu_minus, 0.0, 1.0), eta, domain)


def saturation_sweep(
    mode: str,
    L: float,
    H_list,
    ramp: float | None = None,
    resolution: tuple[int, int] = (32, 128),
    mu_plus: float = 1e-3,
    mu_minus: float = 1.0,
    rel_tol: float = DEFAULT_REL_TOL,
    N: int = 128,
) -> list[SweepPoint]:
    """Ratios approaching 1 as the step aspect ``H / L`` grows.

    ``rect_oracle`` returns ``D_u / (L H)`` from the Fourier series.
    ``two_phase`` solves the mollified step problem with ``resolution =
    (cells_per_segment, ny)``: every segment between profile breakpoints gets
    the same number of columns, so the steep ramps are resolved as finely as
    the plateau.
    """
    pts = []
    for H in H_list:
        if mode == "rect_oracle":
            s = rect_energy(RectProblem(L, H, N))
            pts.append(SweepPoint(L, H, 0.0, s.ratio, s.D_u, L * H, mode))
        elif mode == "two_phase":
            w = L / 16 if ramp is None else ramp
            prob = step_problem(L, H, w, mu_plus, mu_minus)
            k, ny = resolution
            lines = segment_lines(prob.eta.x_nodes, prob.domain.halfwidth, k)
            ps = solve_problem(prob, len(lines) - 1, ny, rel_tol, x_lines=lines)
            B = competitor_bound(prob.eta, prob.params)
            pts.append(SweepPoint(L, H, w, ps.energy / B, ps.energy, B, mode))
        else:
            raise ValueError(f"unknown sweep mode {mode!r}")
    return pts


@dataclass(frozen=True)
class OneFluidLevel:
    n: int
    E_h: float
    max_dtn: float
    iterations: int
    bound: float


@dataclass(frozen=True)
class OneFluidReport:
    """One-fluid energies and ``max G(eta) eta`` over a resolution ladder."""

    B: float
    levels: tuple[OneFluidLevel, ...]
    saturated: bool

    @property
    def E_h(self) -> float:
        return self.levels[-1].E_h

    @property
    def strict_pass(self) -> bool:
        return all(lv.E_h < lv.bound for lv in self.levels)

    @property
    def max_dtn(self) -> float:
        return self.levels[-1].max_dtn

    @property
    def dtn_change(self) -> float:
        """Relative change of ``max G(eta) eta`` between the two finest levels."""
        if len(self.levels) < 2:
            return float("nan")
        a, b = self.levels[-2].max_dtn, self.levels[-1].max_dtn
        if a == b:
            return 0.0
        return abs(b - a) / max(abs(a), abs(b))

    @property
    def dtn_below_one(self) -> bool:
        return all(lv.max_dtn < 1 for lv in self.levels[-2:])


def one_fluid_bound_check(
    problem: Problem,
    resolutions=(64, 128, 256),
    rel_tol: float = DEFAULT_REL_TOL,
    profile_at=None,
) -> OneFluidReport:
    """Compare ``E_1f = rho_jump^2 mu- D(phi)`` with ``rho_jump^2 mu- ||eta||_1``.

    ``phi`` is the harmonic extension of ``eta`` below the interface with
    no flux through the bottom; ``G(eta) eta`` is its recovered normal
    derivative on the interface, in ``dx`` measure. Each entry of
    ``resolutions`` is the column and row count of a square-indexed mesh.

    ``profile_at(n)``, when given, supplies the profile used at resolution
    ``n`` (a smooth family sampled on that level's trace nodes) and the
    problem's own profile is ignored; the bound is then evaluated level by
    level. At every convex corner of a fixed piecewise-linear profile the
    continuum ``G(eta) eta`` equals 1, so maxima over such profiles creep
    toward 1 under refinement instead of settling.
    """
    params = problem.params
    if not params.one_fluid:
        raise ProblemError("one_fluid_bound_check needs a one-fluid configuration")
    if params.sigma != 0:
        raise SigmaNotZero("one-fluid bound is stated without surface tension")
    scale = params.rho_jump**2 * params.mu_minus
    levels = []
    bounds = []
    eta = problem.eta
    for n in resolutions:
        if profile_at is not None:
            eta = profile_at(n)
            validate_config(params, eta, problem.domain)
        mesh = build_phase_mesh(problem.domain, eta, n, n, "minus")
        sol = one_fluid_solve(mesh, mesh.interface_y, rel_tol)
        bounds.append(one_fluid_bound(eta, params))
        levels.append(
            OneFluidLevel(
                n, scale * sol.dirichlet_energy, float(np.max(sol.dtn)), sol.iterations, bounds[-1]
            )
        )
    return OneFluidReport(bounds[-1], tuple(levels), bool(eta.is_zero()))
