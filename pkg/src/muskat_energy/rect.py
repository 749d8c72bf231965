"""Closed-form and finite-difference solutions of the rectangle model problem.

On ``R = [0, L] x [0, H]`` we seek the harmonic ``u`` with ``u = y`` on the
top and both sides and ``du/dy = 0`` on the bottom. Writing ``u = y - v``,
``v`` vanishes on top and sides and has ``dv/dy = 1`` at the bottom, which
separates into

    v(x, y) = sum_n a_n sin(n pi x / L) sinh(n pi (y - H) / L),
    a_n = [2 (1 - (-1)^n) / (n pi)] [L / (n pi)] / cosh(n pi H / L).

Only odd modes survive. Per mode, ``int_R |grad v_n|^2`` and
``-int_0^L v_n(x, 0) dx`` both equal ``8 L^2 tanh(n pi H / L) / (n pi)^3``,
so ``D_u = L H - D_v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .solver import NoConvergence

__all__ = [
    "RectProblem",
    "RectSolution",
    "fourier_coefficients",
    "rect_energy",
    "tail_bound",
    "fd_rect_solve",
    "fd_rect_extrapolated",
    "richardson",
]


@dataclass(frozen=True)
class RectProblem:
    L: float
    H: float
    N: int = 128

    def __post_init__(self):
        if not (self.L > 0 and self.H > 0):
            raise ValueError("L and H must be positive")
        if self.N < 1:
            raise ValueError("series order N must be >= 1")


@dataclass(frozen=True)
class RectSolution:
    a: np.ndarray
    D_v: float
    D_u: float
    bottom_integral: float
    tail_bound: float
    L: float
    H: float

    @property
    def ratio(self) -> float:
        """``D_u / (L H)``."""
        return self.D_u / (self.L * self.H)


def _sech(t: np.ndarray) -> np.ndarray:
    e = np.exp(-t)
    return 2.0 * e / (1.0 + e * e)


def fourier_coefficients(p: RectProblem) -> np.ndarray:
    """``a_n`` for ``n = 1..N``; even entries are exactly zero."""
    n = np.arange(1, p.N + 1, dtype=float)
    parity = np.where(np.arange(1, p.N + 1) % 2 == 1, 2.0, 0.0)  # 1 - (-1)^n
    k = n * math.pi / p.L
    return 2.0 * parity / (n * math.pi) * (p.L / (n * math.pi)) * _sech(k * p.H)


def tail_bound(p: RectProblem) -> float:
    """Upper bound on the D_u (equivalently D_v) terms with ``n > N``.

    Each omitted odd mode contributes at most ``8 L^2 / (n pi)^3``; the sum
    over odd ``n >= M`` is bounded by ``1/M^3 + 1/(4 M^2)``.
    """
    M = p.N + 1 if p.N % 2 == 0 else p.N + 2
    return 8.0 * p.L**2 / math.pi**3 * (1.0 / M**3 + 1.0 / (4.0 * M**2))


def rect_energy(p: RectProblem) -> RectSolution:
    """Series values of ``D_v``, ``D_u`` and the truncation bound."""
    a = fourier_coefficients(p)
    n = np.arange(1, p.N + 1, dtype=float)
    k = n * math.pi / p.L
    tanh = np.tanh(k * p.H)
    # c_n = a_n cosh(kH), finite even where cosh overflows
    c = 2.0 * np.where(n % 2 == 1, 2.0, 0.0) / (n * math.pi) * (p.L / (n * math.pi))
    # int_R |grad v_n|^2 = a_n^2 k (L/4) sinh(2kH) = c^2 k (L/2) tanh(kH)
    dv_terms = c * c * k * (p.L / 2.0) * tanh
    # int_0^L sin(kx) dx = L (1 - (-1)^n) / (n pi)
    s_int = p.L * np.where(n % 2 == 1, 2.0, 0.0) / (n * math.pi)
    bottom = -math.fsum(c * tanh * s_int)  # int_0^L v(x, 0) dx
    D_v = math.fsum(dv_terms)
    # int_R dv/dy = int_0^L [v(x, H) - v(x, 0)] dx = -bottom
    D_u = p.L * p.H - 2.0 * (-bottom) + D_v
    return RectSolution(a, D_v, D_u, bottom, tail_bound(p), p.L, p.H)


def fd_rect_solve(L: float, H: float, nx: int, ny: int, bottom: str = "neumann") -> float:
    """Discrete Dirichlet energy from the 5-point scheme on a uniform grid.

    The scheme is the minimizer of the edge-trapezoid energy
    ``sum_cells (hx hy / 2) * (sum of squared edge difference quotients)``;
    boundary edges carry half weight, which reproduces the second-order
    ghost-node reflection at a Neumann bottom. ``bottom="dirichlet"`` imposes
    ``u = y`` on the bottom as well.
    """
    if nx < 8 or ny < 8:
        raise ValueError("fd_rect_solve needs nx, ny >= 8")
    hx, hy = L / nx, H / ny
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    # horizontal edges (i, j) - (i+1, j)
    wh = np.full((nx, ny + 1), hy / hx)
    wh[:, 0] *= 0.5
    wh[:, -1] *= 0.5
    # vertical edges (i, j) - (i, j+1)
    wv = np.full((nx + 1, ny), hx / hy)
    wv[0, :] *= 0.5
    wv[-1, :] *= 0.5
    a = np.concatenate([idx[:-1, :].ravel(), idx[:, :-1].ravel()])
    b = np.concatenate([idx[1:, :].ravel(), idx[:, 1:].ravel()])
    w = np.concatenate([wh.ravel(), wv.ravel()])
    n = idx.size
    Lap = sp.coo_matrix(
        (np.concatenate([w, w, -w, -w]), (np.concatenate([a, b, a, b]), np.concatenate([a, b, b, a]))),
        shape=(n, n),
    ).tocsr()
    yy = np.broadcast_to(np.linspace(0.0, H, ny + 1)[None, :], (nx + 1, ny + 1))
    fixed = np.zeros((nx + 1, ny + 1), dtype=bool)
    fixed[0, :] = fixed[-1, :] = True
    fixed[:, -1] = True
    if bottom == "dirichlet":
        fixed[:, 0] = True
    elif bottom != "neumann":
        raise ValueError(f"unknown bottom condition {bottom!r}")
    fixed = fixed.ravel()
    u = np.where(fixed, yy.ravel(), 0.0)
    free = ~fixed
    if free.any():
        A = Lap[free][:, free].tocsc()
        rhs = -(Lap[free][:, fixed] @ u[fixed])
        uf = spsolve(A, rhs)
        if not np.all(np.isfinite(uf)):
            raise NoConvergence("rectangle finite-difference solve failed", 0, float("inf"))
        u[free] = uf
    return float(u @ (Lap @ u))


def richardson(coarse: float, fine: float, order: float = 2.0, ratio: float = 2.0) -> float:
    """Eliminate the leading ``h^order`` term from two grid levels."""
    f = ratio**order
    return (f * fine - coarse) / (f - 1.0)


def fd_rect_extrapolated(L: float, H: float, nx: int, ny: int) -> tuple[float, float, float]:
    """``(D(nx, ny), D(2nx, 2ny), extrapolated)``."""
    coarse = fd_rect_solve(L, H, nx, ny)
    fine = fd_rect_solve(L, H, 2 * nx, 2 * ny)
    return coarse, fine, richardson(coarse, fine)
