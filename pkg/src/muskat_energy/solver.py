"""Discrete Dirichlet-energy minimization over the two phases.

The energy of a pair ``(f+, f-)`` is ``mu+ D(f+) + mu- D(f-)`` with ``D`` the
Dirichlet integral on each phase mesh. Admissible pairs satisfy
``f- - f+ = jump`` at every interface node; the constraint is eliminated by a
shared trace ``g`` with the jump lifted into the less viscous phase
(``f- = g + jump`` when ``mu- <= mu+``, otherwise ``f+ = g - jump``), so the
unknowns are the interior nodes of both phases and ``g``. Lifting into the
cheap phase keeps the constant part of the form small next to its quadratic
part, which matters when the viscosities differ by orders of magnitude. The
constant mode is removed by grounding the bottom-left node of the lower
phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from .mesh import PhaseMesh, build_phase_mesh, element_stiffness, refine
from .model import FluidParams, InterfaceProfile, Problem, ProblemError, curvature

__all__ = [
    "SolverError",
    "NoConvergence",
    "SingularForm",
    "CGResult",
    "pcg",
    "stiffness_matrix",
    "interface_mass_matrix",
    "jump_data",
    "PhaseMeshes",
    "build_meshes",
    "EnergyForm",
    "assemble",
    "DiscreteSolution",
    "minimize",
    "InterfaceFlux",
    "interface_velocity",
    "ProblemSolution",
    "solve_problem",
    "OneFluidSolution",
    "one_fluid_solve",
    "one_fluid_dtn",
    "DEFAULT_REL_TOL",
]

DEFAULT_REL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class NoConvergence(SolverError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SingularForm(SolverError):
    pass


@dataclass(frozen=True)
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    min_ritz: float


def pcg(A, b, x0=None, rtol=DEFAULT_REL_TOL, maxiter=None) -> CGResult:
    """Jacobi-preconditioned conjugate gradients for symmetric positive definite ``A``.

    Stops when the true relative residual ``||b - A x|| / ||b||`` is at most
    ``rtol``. ``min_ritz`` is the smallest Ritz value of the Jacobi-scaled
    operator recovered from the Lanczos coefficients; a non-positive value
    means the operator was not positive definite on the Krylov space.
    """
    n = b.shape[0]
    if maxiter is None:
        maxiter = int(50 * math.sqrt(max(n, 1)))
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        # the minimizer of a positive definite form with zero data is zero
        return CGResult(np.zeros(n), 0, 0.0, True, math.inf)
    d = A.diagonal()
    if np.any(d <= 0):
        raise SingularForm("non-positive diagonal entry")
    dinv = 1.0 / d
    r = b - A @ x
    it = 0
    alphas: list[float] = []
    betas: list[float] = []
    alphas_run: list[float] = []
    betas_run: list[float] = []
    rnorm = float(np.linalg.norm(r))
    while rnorm > rtol * bnorm and it < maxiter:
        # restart from the true residual so accumulated drift cannot fake convergence
        z = dinv * r
        p = z.copy()
        rz = float(r @ z)
        while it < maxiter:
            q = A @ p
            pq = float(p @ q)
            if pq <= 0:
                raise SingularForm(f"non-positive curvature p.Ap = {pq:g} at iteration {it}")
            alpha = rz / pq
            x += alpha * p
            r -= alpha * q
            it += 1
            rnorm = float(np.linalg.norm(r))
            alphas.append(alpha)
            if rnorm <= rtol * bnorm:
                break
            z = dinv * r
            rz_new = float(r @ z)
            beta = rz_new / rz
            betas.append(beta)
            rz = rz_new
            p = z + beta * p
        r = b - A @ x
        rnorm = float(np.linalg.norm(r))
        alphas_run, betas_run = alphas, betas
        alphas, betas = [], []
    converged = rnorm <= rtol * bnorm
    min_ritz = _min_ritz(alphas_run, betas_run) if it else math.inf
    return CGResult(x, it, rnorm / bnorm, converged, min_ritz)


def _min_ritz(alphas, betas) -> float:
    # Lanczos tridiagonal from the CG coefficients of the last (re)start
    k = len(alphas)
    if k == 0:
        return math.inf
    a = np.asarray(alphas)
    b = np.asarray(betas[: k - 1]) if k > 1 else np.empty(0)
    diag = 1.0 / a
    diag[1:] += b / a[:-1]
    off = np.sqrt(b) / a[:-1]
    try:
        return float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])
    except Exception:  # pragma: no cover - LAPACK failure on a degenerate tridiagonal
        return float("nan")


def stiffness_matrix(mesh: PhaseMesh) -> sp.csr_matrix:
    """Unweighted Dirichlet-energy matrix of a phase mesh, assembled lexicographically."""
    Ke = element_stiffness(mesh.corners).reshape(-1, 4, 4)
    conn = mesh.element_nodes
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    A = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return A.tocsr()


def interface_mass_matrix(x: np.ndarray) -> sp.csr_matrix:
    """Consistent P1 mass matrix on the interface nodes, measured in dx."""
    h = np.diff(x)
    main = np.zeros(x.size)
    main[:-1] += h / 3.0
    main[1:] += h / 3.0
    return sp.diags([h / 6.0, main, h / 6.0], [-1, 0, 1], format="csr")


def _mass_solve(x: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    h = np.diff(x)
    ab = np.zeros((3, x.size))
    ab[0, 1:] = h / 6.0
    ab[1, :-1] += h / 3.0
    ab[1, 1:] += h / 3.0
    ab[2, :-1] = h / 6.0
    return solve_banded((1, 1), ab, rhs)


def jump_data(params: FluidParams, trace: InterfaceProfile, smoothing_width: float = 0.0):
    """Nodal jump ``sigma * kappa + rho_jump * eta`` on the interface trace nodes.

    The curvature of a piecewise-linear curve is a sum of point masses
    ``-Delta(flux)`` at its nodes, which is ``dual * kappa`` for the nodal
    :func:`curvature`. The jump carries the L2 projection of that measure
    onto the trace hat functions, so that ``int sigma kappa V dx`` equals
    the first variation of ``sigma * rArea`` in the direction ``V``.
    """
    jump = params.rho_jump * np.array(trace.eta_values)
    if params.sigma > 0:
        x = trace.x_nodes
        h = np.diff(x)
        dual = np.zeros(x.size)
        dual[:-1] += 0.5 * h
        dual[1:] += 0.5 * h
        kappa = curvature(trace, smoothing_width)
        jump = jump + params.sigma * _mass_solve(x, dual * kappa)
    return jump


@dataclass(frozen=True)
class PhaseMeshes:
    minus: PhaseMesh
    plus: PhaseMesh | None

    @property
    def trace_x(self) -> np.ndarray:
        return self.minus.x

    def trace_profile(self) -> InterfaceProfile:
        return InterfaceProfile(self.minus.x, self.minus.interface_y)

    def refined(self) -> "PhaseMeshes":
        """Both phases bisected once; the discrete spaces are nested."""
        return PhaseMeshes(refine(self.minus), None if self.plus is None else refine(self.plus))


def build_meshes(problem: Problem, nx: int, ny: int, x_lines=None) -> PhaseMeshes:
    minus = build_phase_mesh(problem.domain, problem.eta, nx, ny, "minus", x_lines)
    plus = None
    if not problem.params.one_fluid:
        plus = build_phase_mesh(problem.domain, problem.eta, nx, ny, "plus", x_lines)
    return PhaseMeshes(minus, plus)


@dataclass(frozen=True, eq=False)
class EnergyForm:
    """Quadratic form ``w.K.w + 2 c.w + s`` over the unconstrained unknowns.

    ``P_minus`` and ``P_plus`` expand an unknown vector to full nodal vectors
    of each phase; ``lift_minus`` / ``lift_plus`` carry the jump into the
    interface nodes of one phase (``lift_phase``), so that ``f- - f+ = jump``
    holds for every ``w``. ``grounded`` is the lower-phase node held at zero.
    """

    meshes: PhaseMeshes
    params: FluidParams
    jump: np.ndarray
    A_minus: sp.csr_matrix
    A_plus: sp.csr_matrix
    P_minus: sp.csr_matrix
    P_plus: sp.csr_matrix
    lift_minus: np.ndarray
    lift_plus: np.ndarray
    lift_phase: str
    K: sp.csr_matrix
    c: np.ndarray
    s: float
    grounded: int

    @property
    def n_dof(self) -> int:
        return self.K.shape[0]

    @property
    def n_trace(self) -> int:
        return self.meshes.minus.nx + 1

    def expand(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Full nodal vectors ``(f-, f+)`` of the admissible pair encoded by ``w``."""
        return self.P_minus @ w + self.lift_minus, self.P_plus @ w + self.lift_plus

    def value(self, w: np.ndarray) -> float:
        return float(w @ (self.K @ w) + 2.0 * (self.c @ w) + self.s)

    def energy_of_pair(self, f_minus: np.ndarray, f_plus: np.ndarray) -> float:
        """Weighted Dirichlet energy of full nodal vectors (no admissibility check)."""
        p = self.params
        em = float(f_minus @ (self.A_minus @ f_minus))
        ep = float(f_plus @ (self.A_plus @ f_plus))
        return p.mu_minus * em + p.mu_plus * ep

    def pair_jump(self, f_minus: np.ndarray, f_plus: np.ndarray) -> np.ndarray:
        return (
            f_minus[self.meshes.minus.interface_nodes] - f_plus[self.meshes.plus.interface_nodes]
        )


def _expansion_maps(minus: PhaseMesh, plus: PhaseMesh):
    nx, ny = minus.nx, minus.ny
    ny_p = plus.ny
    n_int_m = (nx + 1) * ny - 1  # lower rows j < ny, minus the grounded node
    n_tr = nx + 1
    n_int_p = (nx + 1) * ny_p
    # lower phase: node (i, j<ny) -> running index skipping node (0, 0); (i, ny) -> trace i
    im, jm = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    im, jm = im.ravel(), jm.ravel()
    node_m = minus.node_index(im, jm)
    interior = jm < ny
    grounded = int(minus.node_index(0, 0))
    interior_nodes = node_m[interior & (node_m != grounded)]
    col_m = np.full(minus.n_nodes, -1)
    col_m[interior_nodes] = np.arange(n_int_m)
    trace_nodes_m = minus.interface_nodes
    col_m[trace_nodes_m] = n_int_m + np.arange(n_tr)
    keep = col_m >= 0
    n_dof = n_int_m + n_tr + n_int_p
    P_minus = sp.csr_matrix(
        (np.ones(keep.sum()), (np.nonzero(keep)[0], col_m[keep])), shape=(minus.n_nodes, n_dof)
    )
    # upper phase: (i, 0) -> trace i; (i, j>0) -> running index after the trace block
    ip, jp = np.meshgrid(np.arange(nx + 1), np.arange(ny_p + 1), indexing="ij")
    ip, jp = ip.ravel(), jp.ravel()
    node_p = plus.node_index(ip, jp)
    col_p = np.empty(plus.n_nodes, dtype=int)
    col_p[node_p[jp == 0]] = n_int_m + ip[jp == 0]
    above = jp > 0
    col_p[node_p[above]] = n_int_m + n_tr + np.arange(n_int_p)
    P_plus = sp.csr_matrix(
        (np.ones(plus.n_nodes), (np.arange(plus.n_nodes), col_p)), shape=(plus.n_nodes, n_dof)
    )
    return P_minus, P_plus, grounded


def assemble(
    meshes: PhaseMeshes, params: FluidParams, jump, lift_phase: str | None = None
) -> EnergyForm:
    """Build the eliminated quadratic form for the given interface jump data."""
    if meshes.plus is None:
        raise ValueError("assemble needs both phases; use one_fluid_solve for one fluid")
    if meshes.plus.nx != meshes.minus.nx or not np.array_equal(meshes.plus.x, meshes.minus.x):
        raise ValueError("phase meshes must share interface columns")
    minus, plus = meshes.minus, meshes.plus
    jump = np.asarray(jump, dtype=float)
    if jump.shape != (minus.nx + 1,):
        raise ValueError("jump must be sampled on the interface nodes")
    A_m = stiffness_matrix(minus)
    A_p = stiffness_matrix(plus)
    P_m, P_p, grounded = _expansion_maps(minus, plus)
    lift_m = np.zeros(minus.n_nodes)
    lift_p = np.zeros(plus.n_nodes)
    # The jump is carried by the less viscous phase: the data vector then has
    # the scale of the energy, so a relative residual bound controls E_h.
    lift_phase = lift_phase or ("minus" if params.mu_minus <= params.mu_plus else "plus")
    if lift_phase == "minus":
        lift_m[minus.interface_nodes] = jump
    elif lift_phase == "plus":
        lift_p[plus.interface_nodes] = -jump
    else:
        raise ValueError(f"unknown lift phase {lift_phase!r}")
    Wm = params.mu_minus * A_m
    Wp = params.mu_plus * A_p
    K = (P_m.T @ Wm @ P_m + P_p.T @ Wp @ P_p).tocsr()
    Wlm = Wm @ lift_m
    Wlp = Wp @ lift_p
    c = P_m.T @ Wlm + P_p.T @ Wlp
    s = float(lift_m @ Wlm + lift_p @ Wlp)
    if np.any(K.diagonal() <= 0):
        raise SingularForm("grounded form has an empty row; mesh is disconnected")
    return EnergyForm(
        meshes, params, jump, A_m, A_p, P_m, P_p, lift_m, lift_p, lift_phase, K, c, s, grounded
    )


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    form: EnergyForm
    w: np.ndarray
    f_minus: np.ndarray
    f_plus: np.ndarray
    energy: float
    iterations: int
    residual: float
    min_ritz: float
    rel_tol: float

    @property
    def jump(self) -> np.ndarray:
        return self.form.jump


def minimize(form: EnergyForm, rel_tol: float = DEFAULT_REL_TOL, x0=None) -> DiscreteSolution:
    """Minimize the form by solving ``K w = -c``; raises :class:`NoConvergence`."""
    if not 0 < rel_tol <= 1e-4:
        raise ValueError("rel_tol must lie in (0, 1e-4]")
    res = pcg(form.K, -form.c, x0=x0, rtol=rel_tol)
    if not res.converged:
        raise NoConvergence(
            f"CG stopped after {res.iterations} iterations at relative residual {res.residual:.3e}",
            res.iterations,
            res.residual,
        )
    fm, fp = form.expand(res.x)
    energy = form.energy_of_pair(fm, fp)
    return DiscreteSolution(
        form, res.x, fm, fp, max(energy, 0.0), res.iterations, res.residual, res.min_ritz, rel_tol
    )


@dataclass(frozen=True, eq=False)
class InterfaceFlux:
    """Interface normal velocity recovered from the discrete co-normal residual.

    ``residual[k]`` is the lower-phase weighted stiffness action on the
    solution tested with the interface hat at node ``k``; ``velocity`` is the
    piecewise-linear ``V`` with ``int V psi_k dx = -residual[k]``.
    """

    x: np.ndarray
    velocity: np.ndarray
    residual: np.ndarray

    def integral(self) -> float:
        h = np.diff(self.x)
        return float(np.sum(0.5 * h * (self.velocity[:-1] + self.velocity[1:])))

    def pair_with(self, values: np.ndarray) -> float:
        """Exact ``int f V dx`` for the piecewise-linear interpolant ``f`` of ``values``."""
        return float(values @ (interface_mass_matrix(self.x) @ self.velocity))


def interface_velocity(sol: DiscreteSolution) -> InterfaceFlux:
    form = sol.form
    minus = form.meshes.minus
    r = form.params.mu_minus * (form.A_minus @ sol.f_minus)[minus.interface_nodes]
    V = _mass_solve(minus.x, -r)
    return InterfaceFlux(minus.x.copy(), V, r)


@dataclass(frozen=True, eq=False)
class OneFluidSolution:
    mesh: PhaseMesh
    phi: np.ndarray
    dtn: np.ndarray
    dirichlet_energy: float
    iterations: int
    residual: float


def one_fluid_solve(mesh: PhaseMesh, data: np.ndarray, rel_tol: float = DEFAULT_REL_TOL):
    """Harmonic extension of interface ``data`` into the lower phase, Neumann elsewhere.

    Returns the extension, its Dirichlet energy and the recovered
    Dirichlet-to-Neumann trace ``G`` with ``int G psi_k dx = D(phi, Phi_k)``.
    """
    A = stiffness_matrix(mesh)
    top = mesh.interface_nodes
    free = np.ones(mesh.n_nodes, dtype=bool)
    free[top] = False
    phi = np.zeros(mesh.n_nodes)
    phi[top] = data
    A_ff = A[free][:, free].tocsr()
    rhs = -(A[free][:, top] @ np.asarray(data, dtype=float))
    res = pcg(A_ff, rhs, rtol=rel_tol)
    if not res.converged:
        raise NoConvergence("one-fluid CG did not converge", res.iterations, res.residual)
    phi[free] = res.x
    Aphi = A @ phi
    dtn = _mass_solve(mesh.x, Aphi[top])
    energy = float(phi @ Aphi)
    return OneFluidSolution(mesh, phi, dtn, max(energy, 0.0), res.iterations, res.residual)


def one_fluid_dtn(problem: Problem, nx: int, ny: int, rel_tol: float = DEFAULT_REL_TOL):
    """Nodal samples of ``G(eta) eta`` on the interface for the one-fluid problem."""
    if not problem.params.one_fluid:
        raise ProblemError("one_fluid_dtn needs a one-fluid configuration")
    mesh = build_phase_mesh(problem.domain, problem.eta, nx, ny, "minus")
    return one_fluid_solve(mesh, mesh.interface_y, rel_tol)


@dataclass(frozen=True, eq=False)
class ProblemSolution:
    problem: Problem
    meshes: PhaseMeshes
    solution: DiscreteSolution
    flux: InterfaceFlux = field(repr=False)

    @property
    def energy(self) -> float:
        return self.solution.energy


def solve_problem(
    problem: Problem,
    nx: int,
    ny: int,
    rel_tol: float = DEFAULT_REL_TOL,
    smoothing_width: float = 0.0,
    x_lines=None,
    meshes: PhaseMeshes | None = None,
) -> ProblemSolution:
    """Mesh, assemble, minimize and recover the interface flux of a two-phase problem.

    Prebuilt ``meshes`` (from :func:`refine`, say) take precedence over
    ``nx``, ``ny`` and ``x_lines``.
    """
    if meshes is None:
        meshes = build_meshes(problem, nx, ny, x_lines)
    jump = jump_data(problem.params, meshes.trace_profile(), smoothing_width)
    form = assemble(meshes, problem.params, jump)
    sol = minimize(form, rel_tol)
    return ProblemSolution(problem, meshes, sol, interface_velocity(sol))
