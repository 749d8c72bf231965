"""Boundary-fitted quadrilateral meshes of the two fluid phases.

Each phase is the image of a reference rectangle under a vertical
(terrain-following) map: column ``i`` sits at ``x_i`` and its ``ny + 1``
nodes interpolate linearly between the lower and upper bounding graphs of
the phase. Elements therefore have vertical sides and are exactly bilinear
images of the reference square.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import DomainSpec, InterfaceProfile, ProblemError

__all__ = [
    "DegenerateElement",
    "MisalignedMesh",
    "PhaseMesh",
    "GAUSS_X",
    "GAUSS_Y",
    "build_phase_mesh",
    "refine",
    "segment_lines",
    "shape_gradients",
    "element_stiffness",
    "write_mesh_csv",
]

# Horizontal and vertical Gauss orders. On a vertical-sided bilinear element
# the stiffness integrand is a polynomial of degree <= 2 in the vertical
# reference variable, so two points are exact there; horizontally it carries a
# 1/(linear) factor from the Jacobian, for which six points are exact to
# round-off on all but the most strongly tapered columns.
GAUSS_X = 6
GAUSS_Y = 2


class DegenerateElement(ProblemError):
    pass


class MisalignedMesh(ProblemError):
    pass


def _gauss_rule(nx: int, ny: int):
    gx, wx = np.polynomial.legendre.leggauss(nx)
    gy, wy = np.polynomial.legendre.leggauss(ny)
    xi = np.repeat(gx, ny)
    zeta = np.tile(gy, nx)
    w = np.repeat(wx, ny) * np.tile(wy, nx)
    return xi, zeta, w


def shape_gradients(xi, zeta):
    """Reference gradients of the four bilinear shape functions.

    Local node order is (i, j), (i+1, j), (i+1, j+1), (i, j+1). Returns an
    array of shape (nq, 4, 2).
    """
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    sx = np.array([-1.0, 1.0, 1.0, -1.0])
    sz = np.array([-1.0, -1.0, 1.0, 1.0])
    d_xi = 0.25 * sx[None, :] * (1.0 + sz[None, :] * zeta[:, None])
    d_zeta = 0.25 * sz[None, :] * (1.0 + sx[None, :] * xi[:, None])
    return np.stack([d_xi, d_zeta], axis=-1)


def _element_corners(x: np.ndarray, y: np.ndarray):
    """Corner coordinates of all elements, shape (nx, ny, 4, 2)."""
    nx, ny = y.shape[0] - 1, y.shape[1] - 1
    X = np.broadcast_to(x[:, None], y.shape)
    cx = np.stack([X[:-1, :-1], X[1:, :-1], X[1:, 1:], X[:-1, 1:]], axis=-1)
    cy = np.stack([y[:-1, :-1], y[1:, :-1], y[1:, 1:], y[:-1, 1:]], axis=-1)
    return np.stack([cx, cy], axis=-1).reshape(nx, ny, 4, 2)


def _jacobians(corners: np.ndarray, dN: np.ndarray):
    # J[e, q] = sum_a corner[e, a, :] (outer) dN[q, a, :]; rows are (x, y), columns (xi, zeta)
    return np.einsum("...ak,qal->...qkl", corners, dN)


def element_stiffness(corners: np.ndarray, order: tuple[int, int] = (GAUSS_X, GAUSS_Y)):
    """Local 4x4 Dirichlet-energy matrices ``int grad(phi_a) . grad(phi_b)``.

    ``corners`` has shape (..., 4, 2). Returns shape (..., 4, 4).
    """
    xi, zeta, w = _gauss_rule(*order)
    dN = shape_gradients(xi, zeta)
    J = _jacobians(corners, dN)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    inv = np.empty_like(J)
    inv[..., 0, 0] = J[..., 1, 1]
    inv[..., 0, 1] = -J[..., 0, 1]
    inv[..., 1, 0] = -J[..., 1, 0]
    inv[..., 1, 1] = J[..., 0, 0]
    inv /= det[..., None, None]
    # physical gradient = J^{-T} applied to the reference gradient
    G = np.einsum("...qlk,qal->...qak", inv, dN)
    return np.einsum("...qak,...qbk,...q->...ab", G, G, det * w)


@dataclass(frozen=True, eq=False)
class PhaseMesh:
    """Structured mesh of one phase.

    ``x`` has shape (nx+1,), ``y`` has shape (nx+1, ny+1). ``phase`` is
    ``"minus"`` (interface is the top row ``j = ny``) or ``"plus"``
    (interface is the bottom row ``j = 0``). Node ``(i, j)`` has global
    index ``i * (ny + 1) + j``.
    """

    x: np.ndarray
    y: np.ndarray
    phase: str

    @property
    def nx(self) -> int:
        return self.y.shape[0] - 1

    @property
    def ny(self) -> int:
        return self.y.shape[1] - 1

    @property
    def n_nodes(self) -> int:
        return self.y.size

    @property
    def interface_row(self) -> int:
        return self.ny if self.phase == "minus" else 0

    def node_index(self, i, j):
        return np.asarray(i) * (self.ny + 1) + np.asarray(j)

    @cached_property
    def interface_nodes(self) -> np.ndarray:
        return self.node_index(np.arange(self.nx + 1), self.interface_row)

    @property
    def interface_y(self) -> np.ndarray:
        return self.y[:, self.interface_row]

    @cached_property
    def corners(self) -> np.ndarray:
        return _element_corners(self.x, self.y)

    @cached_property
    def element_nodes(self) -> np.ndarray:
        """Global node ids per element, shape (nx*ny, 4), lexicographic in (i, j)."""
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        i, j = i.ravel(), j.ravel()
        return np.stack(
            [
                self.node_index(i, j),
                self.node_index(i + 1, j),
                self.node_index(i + 1, j + 1),
                self.node_index(i, j + 1),
            ],
            axis=1,
        )

    def jacobians(self, order: tuple[int, int] = (GAUSS_X, GAUSS_Y)) -> np.ndarray:
        """Mapping Jacobian determinants at quadrature points, shape (nx, ny, nq)."""
        xi, zeta, _ = _gauss_rule(*order)
        J = _jacobians(self.corners, shape_gradients(xi, zeta))
        return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]

    def area(self) -> float:
        _, _, w = _gauss_rule(GAUSS_X, GAUSS_Y)
        return float(np.sum(self.jacobians() * w))

    def interface_length(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.x), np.diff(self.interface_y))))

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened node coordinates in global index order."""
        X = np.broadcast_to(self.x[:, None], self.y.shape)
        return X.ravel().copy(), self.y.ravel().copy()

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant of ``func(x, y)``."""
        px, py = self.points()
        return np.asarray(func(px, py), dtype=float)


def _check_aligned(x_lines: np.ndarray, pts: np.ndarray, what: str):
    pts = pts[(pts > x_lines[0]) & (pts < x_lines[-1])]
    if pts.size == 0:
        return
    k = np.clip(np.searchsorted(x_lines, pts), 1, x_lines.size - 1)
    near = np.minimum(np.abs(x_lines[k] - pts), np.abs(x_lines[k - 1] - pts))
    tol = 1e-10 * (x_lines[-1] - x_lines[0])
    if np.any(near > tol):
        bad = pts[near > tol][0]
        raise MisalignedMesh(f"{what} breakpoint x = {bad:g} is not on a mesh line")


def segment_lines(breakpoints, halfwidth: float, cells_per_segment: int) -> np.ndarray:
    """Mesh x-lines splitting every segment between consecutive breakpoints evenly.

    The window ends are added to the breakpoints. Short segments (steep
    ramps of a mollified step, say) get the same number of cells as long
    ones, which keeps the resolution along a steep interface comparable to
    the resolution elsewhere.
    """
    pts = np.asarray(breakpoints, dtype=float)
    pts = np.unique(np.concatenate([pts[(pts > -halfwidth) & (pts < halfwidth)], [-halfwidth, halfwidth]]))
    k = int(cells_per_segment)
    if k < 1:
        raise ValueError("cells_per_segment must be positive")
    t = np.arange(k) / k
    inner = (pts[:-1, None] + t[None, :] * np.diff(pts)[:, None]).ravel()
    return np.concatenate([inner, pts[-1:]])


def build_phase_mesh(
    domain: DomainSpec,
    eta: InterfaceProfile,
    nx: int,
    ny: int,
    phase: str = "minus",
    x_lines=None,
) -> PhaseMesh:
    """σ-coordinate mesh of ``phase`` ("minus" below the interface, "plus" above).

    Columns sit on ``x_lines`` when given (their count then overrides
    ``nx``), otherwise on ``nx + 1`` evenly spaced lines across the window.
    """
    if phase not in ("minus", "plus"):
        raise ValueError(f"unknown phase {phase!r}")
    X = domain.halfwidth
    if x_lines is None:
        if nx < 1:
            raise ValueError("nx must be positive")
        x = np.linspace(-X, X, nx + 1)
    else:
        x = np.array(x_lines, dtype=float)
        if x.size < 2 or not np.all(np.diff(x) > 0) or x[0] != -X or x[-1] != X:
            raise MisalignedMesh("x_lines must increase strictly from -X to X")
    if ny < 1:
        raise ValueError("ny must be positive")
    _check_aligned(x, eta.x_nodes, "interface")
    if phase == "minus":
        wall = domain.bottom
    else:
        if domain.top is None:
            raise ValueError("one-fluid domain has no upper phase")
        wall = domain.top
    _check_aligned(x, wall.breakpoints(), "wall")
    e = eta(x)
    b = wall(x)
    lower, upper = (b, e) if phase == "minus" else (e, b)
    gap = upper - lower
    if np.any(gap <= 1e-12 * max(1.0, X)):
        raise DegenerateElement(f"{phase} phase pinches to zero thickness")
    s = np.arange(ny + 1) / ny
    y = lower[:, None] + s[None, :] * gap[:, None]
    # rows at the bounding graphs are set exactly, without the affine round-off
    y[:, 0] = lower
    y[:, -1] = upper
    mesh = PhaseMesh(x, y, phase)
    if np.any(mesh.jacobians() <= 0):
        raise DegenerateElement("non-positive mapping Jacobian")
    return mesh


def refine(mesh: PhaseMesh) -> PhaseMesh:
    """Bisect every element in reference coordinates.

    New nodes are bilinear averages of coarse nodes, so the coarse geometry
    is reproduced exactly and coarse bilinear functions belong to the
    refined space.
    """
    nx, ny = mesh.nx, mesh.ny
    x = np.empty(2 * nx + 1)
    x[::2] = mesh.x
    x[1::2] = 0.5 * (mesh.x[:-1] + mesh.x[1:])
    y = np.empty((2 * nx + 1, 2 * ny + 1))
    y[::2, ::2] = mesh.y
    y[1::2, ::2] = 0.5 * (mesh.y[:-1, :] + mesh.y[1:, :])
    y[:, 1::2] = 0.5 * (y[:, :-2:2] + y[:, 2::2])
    return PhaseMesh(x, y, mesh.phase)


def write_mesh_csv(mesh: PhaseMesh, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x", "y"])
        for i in range(mesh.nx + 1):
            for j in range(mesh.ny + 1):
                w.writerow([i, j, repr(float(mesh.x[i])), repr(float(mesh.y[i, j]))])
