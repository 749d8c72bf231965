"""Physical parameters, interface geometry and scalar interface functionals.

Jumps follow the convention ``[[f]] = f^- - f^+`` (lower phase minus upper
phase), so a stably stratified configuration has ``rho_jump > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ProblemError",
    "NonPositiveDensityJump",
    "BoundaryTouchesInterface",
    "NonCompactSupport",
    "NegativeViscosity",
    "NegativeSurfaceTension",
    "InvalidGeometry",
    "FluidParams",
    "InterfaceProfile",
    "Boundary",
    "DomainSpec",
    "InterfaceFunctionals",
    "Problem",
    "validate_config",
    "l1_parts",
    "l2_squared",
    "curvature",
    "renormalized_area",
    "interface_functionals",
]


class ProblemError(ValueError):
    """A configuration violates one of the standing hypotheses.

    ``violations`` lists every violated hypothesis found during validation,
    not only the one whose class was raised.
    """

    def __init__(self, message: str, violations: list[ProblemError] | None = None):
        super().__init__(message)
        self.violations = violations if violations is not None else [self]


class NonPositiveDensityJump(ProblemError):
    pass


class BoundaryTouchesInterface(ProblemError):
    pass


class NonCompactSupport(ProblemError):
    pass


class NegativeViscosity(ProblemError):
    pass


class NegativeSurfaceTension(ProblemError):
    pass


class InvalidGeometry(ProblemError):
    pass


@dataclass(frozen=True)
class FluidParams:
    mu_plus: float
    mu_minus: float
    rho_plus: float
    rho_minus: float
    sigma: float = 0.0
    one_fluid: bool = False

    @property
    def rho_jump(self) -> float:
        return self.rho_minus - self.rho_plus

    def scaled_density(self, lam: float) -> FluidParams:
        """Return a copy whose density jump is multiplied by ``lam``."""
        return FluidParams(
            self.mu_plus,
            self.mu_minus,
            lam * self.rho_plus,
            lam * self.rho_minus,
            self.sigma,
            self.one_fluid,
        )

    def swapped(self) -> FluidParams:
        """Viscosities exchanged between the phases (used for y -> -y reflection)."""
        return FluidParams(
            self.mu_minus, self.mu_plus, self.rho_plus, self.rho_minus, self.sigma, self.one_fluid
        )


@dataclass(frozen=True, eq=False)
class InterfaceProfile:
    """Piecewise-linear graph ``y = eta(x)``, identically zero outside its nodes."""

    x_nodes: np.ndarray
    eta_values: np.ndarray

    def __post_init__(self):
        x = np.array(self.x_nodes, dtype=float)
        e = np.array(self.eta_values, dtype=float)
        if x.ndim != 1 or x.shape != e.shape or x.size < 2:
            raise InvalidGeometry("x_nodes and eta_values must be 1-D of equal length >= 2")
        if not np.all(np.diff(x) > 0):
            raise InvalidGeometry("x_nodes must be strictly increasing")
        if not np.all(np.isfinite(e)):
            raise InvalidGeometry("eta_values must be finite")
        x.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "x_nodes", x)
        object.__setattr__(self, "eta_values", e)

    @classmethod
    def flat(cls, halfwidth: float) -> InterfaceProfile:
        return cls(np.array([-halfwidth, halfwidth]), np.zeros(2))

    @classmethod
    def tent(cls, height: float = 1.0, halfwidth: float = 1.0, center: float = 0.0):
        x = center + halfwidth * np.array([-1.0, 0.0, 1.0])
        return cls(x, np.array([0.0, height, 0.0]))

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.x_nodes, self.eta_values, left=0.0, right=0.0)

    def __neg__(self) -> InterfaceProfile:
        return InterfaceProfile(self.x_nodes, -self.eta_values)

    def scaled(self, amplitude: float) -> InterfaceProfile:
        return InterfaceProfile(self.x_nodes, amplitude * self.eta_values)

    def reflected(self) -> InterfaceProfile:
        """The profile ``x -> eta(-x)``."""
        return InterfaceProfile(-self.x_nodes[::-1], self.eta_values[::-1])

    def shifted(self, dx: float) -> InterfaceProfile:
        return InterfaceProfile(self.x_nodes + dx, self.eta_values)

    def resample(self, x) -> InterfaceProfile:
        """Exact re-expression on a finer node set containing the current nodes."""
        return InterfaceProfile(np.asarray(x, dtype=float), self(x))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.eta_values) / np.diff(self.x_nodes)

    def is_zero(self) -> bool:
        return not np.any(self.eta_values)


@dataclass(frozen=True)
class Boundary:
    """A rigid wall: either flat at ``level`` or the piecewise-linear graph ``(x, y)``."""

    level: float | None = None
    x: tuple[float, ...] | None = None
    y: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.level is None) == (self.x is None):
            raise InvalidGeometry("a boundary is either flat (level) or a graph (x, y)")
        if self.x is not None:
            if self.y is None or len(self.x) != len(self.y) or len(self.x) < 2:
                raise InvalidGeometry("graph boundary needs matching x and y samples")
            if not np.all(np.diff(self.x) > 0):
                raise InvalidGeometry("graph boundary x samples must increase")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.level is not None:
            return np.full_like(x, self.level)
        return np.interp(x, self.x, self.y)

    def breakpoints(self) -> np.ndarray:
        return np.array(self.x, dtype=float) if self.x is not None else np.empty(0)

    def reflected_y(self) -> Boundary:
        """Mirror image under ``y -> -y``."""
        if self.level is not None:
            return Boundary(level=-self.level)
        return Boundary(x=self.x, y=tuple(-v for v in self.y))


@dataclass(frozen=True)
class DomainSpec:
    """Horizontal window ``[-X, X]`` plus the bounding walls of both phases.

    ``top`` is None for the one-fluid problem.
    """

    halfwidth: float
    bottom: Boundary
    top: Boundary | None

    @classmethod
    def flat(cls, halfwidth: float, depth: float, height: float | None = None):
        height = depth if height is None else height
        return cls(halfwidth, Boundary(level=-depth), Boundary(level=height))

    @classmethod
    def flat_one_fluid(cls, halfwidth: float, depth: float):
        return cls(halfwidth, Boundary(level=-depth), None)

    def swapped(self) -> DomainSpec:
        """Domain seen after the reflection ``y -> -y`` exchanging the phases."""
        if self.top is None:
            raise InvalidGeometry("one-fluid domains cannot be phase-swapped")
        return DomainSpec(self.halfwidth, self.top.reflected_y(), self.bottom.reflected_y())


@dataclass(frozen=True)
class InterfaceFunctionals:
    l1_neg: float
    l1_pos: float
    l2_sq: float
    rarea: float
    kappa: np.ndarray = field(repr=False)

    @property
    def l1(self) -> float:
        return self.l1_neg + self.l1_pos


@dataclass(frozen=True)
class Problem:
    """A configuration that passed :func:`validate_config`."""

    params: FluidParams
    eta: InterfaceProfile
    domain: DomainSpec

    @property
    def rho_jump(self) -> float:
        return self.params.rho_jump

    def with_params(self, params: FluidParams) -> Problem:
        return validate_config(params, self.eta, self.domain)

    def with_eta(self, eta: InterfaceProfile) -> Problem:
        return validate_config(self.params, eta, self.domain)

    def with_domain(self, domain: DomainSpec) -> Problem:
        return validate_config(self.params, self.eta, domain)


def _boundary_gap(eta: InterfaceProfile, wall: Boundary, halfwidth: float, above: bool) -> float:
    # both graphs are piecewise linear, so the gap is extremal at a breakpoint
    pts = np.concatenate([eta.x_nodes, wall.breakpoints(), [-halfwidth, halfwidth]])
    pts = pts[(pts >= -halfwidth) & (pts <= halfwidth)]
    gap = wall(pts) - eta(pts) if above else eta(pts) - wall(pts)
    return float(gap.min())


def validate_config(params: FluidParams, eta: InterfaceProfile, domain: DomainSpec) -> Problem:
    """Check the standing hypotheses and return a :class:`Problem`.

    Every violated hypothesis is collected; the first one is raised and the
    full list is attached as ``violations``.
    """
    found: list[ProblemError] = []
    if params.rho_jump <= 0:
        found.append(
            NonPositiveDensityJump(
                f"density jump rho_minus - rho_plus = {params.rho_jump:g} must be > 0"
            )
        )
    if params.sigma < 0:
        found.append(NegativeSurfaceTension(f"sigma = {params.sigma:g} must be >= 0"))
    if params.one_fluid:
        if params.mu_plus != 0 or params.rho_plus != 0:
            found.append(NegativeViscosity("one-fluid problems need mu_plus = rho_plus = 0"))
        if params.mu_minus <= 0:
            found.append(NegativeViscosity(f"mu_minus = {params.mu_minus:g} must be > 0"))
        if domain.top is not None:
            found.append(InvalidGeometry("one-fluid problems have no upper wall"))
    else:
        if min(params.mu_plus, params.mu_minus) <= 0:
            found.append(
                NegativeViscosity(
                    f"viscosities ({params.mu_plus:g}, {params.mu_minus:g}) must be > 0"
                )
            )
        if domain.top is None:
            found.append(InvalidGeometry("two-phase problems need an upper wall"))
    if eta.eta_values[0] != 0 or eta.eta_values[-1] != 0:
        found.append(NonCompactSupport("eta must vanish at its first and last node"))
    X = domain.halfwidth
    if X <= 0:
        found.append(InvalidGeometry("window halfwidth must be positive"))
    elif eta.x_nodes[0] < -X or eta.x_nodes[-1] > X:
        found.append(NonCompactSupport(f"eta nodes leave the window [-{X:g}, {X:g}]"))
    if X > 0:
        if _boundary_gap(eta, domain.bottom, X, above=False) <= 0:
            found.append(BoundaryTouchesInterface("bottom wall touches or crosses the interface"))
        if domain.top is not None and _boundary_gap(eta, domain.top, X, above=True) <= 0:
            found.append(BoundaryTouchesInterface("top wall touches or crosses the interface"))
    if found:
        first = found[0]
        msg = "; ".join(str(e) for e in found)
        raise type(first)(msg, violations=found)
    return Problem(params, eta, domain)


def _segment_sign_parts(x0, x1, e0, e1):
    """Exact integrals of the negative and positive parts of a linear segment."""
    h = x1 - x0
    neg = np.zeros_like(h)
    pos = np.zeros_like(h)
    same = e0 * e1 >= 0
    mean = 0.5 * (e0 + e1)
    pos[same] = np.where(mean[same] > 0, h[same] * mean[same], 0.0)
    neg[same] = np.where(mean[same] < 0, -h[same] * mean[same], 0.0)
    cross = ~same
    a, b, hc = e0[cross], e1[cross], h[cross]
    # root splits the segment into triangles of lengths h|a|/(|a|+|b|) and h|b|/(|a|+|b|)
    s = np.abs(a) + np.abs(b)
    tri_a = 0.5 * hc * a * a / s
    tri_b = 0.5 * hc * b * b / s
    pos[cross] = np.where(a > 0, tri_a, tri_b)
    neg[cross] = np.where(a < 0, tri_a, tri_b)
    return neg, pos


def l1_parts(eta: InterfaceProfile) -> tuple[float, float]:
    """``(||eta_-||_1, ||eta_+||_1)`` of the piecewise-linear interpolant."""
    x, e = eta.x_nodes, eta.eta_values
    neg, pos = _segment_sign_parts(x[:-1], x[1:], e[:-1], e[1:])
    # fsum keeps the result independent of segment order (reflection symmetry)
    return math.fsum(neg), math.fsum(pos)


def l2_squared(eta: InterfaceProfile) -> float:
    """Exact ``int eta^2 dx`` for the piecewise-linear interpolant."""
    x, e = eta.x_nodes, eta.eta_values
    h = np.diff(x)
    a, b = e[:-1], e[1:]
    return float(np.sum(h * (a * a + a * b + b * b) / 3.0))


def renormalized_area(eta: InterfaceProfile) -> float:
    """``sum_i len_i (sqrt(1 + s_i^2) - 1)`` over the segments."""
    h = np.diff(eta.x_nodes)
    s = eta.slopes
    # sqrt(1+s^2) - 1 = s^2 / (sqrt(1+s^2) + 1), without cancellation for small s
    return math.fsum(h * s * s / (np.sqrt(1.0 + s * s) + 1.0))


def _mollify(x: np.ndarray, e: np.ndarray, width: float) -> np.ndarray:
    # Gaussian weights times dual-cell lengths; endpoints stay pinned at their values
    if width <= 0:
        return e
    dual = np.empty_like(x)
    dual[1:-1] = 0.5 * (x[2:] - x[:-2])
    dual[0] = 0.5 * (x[1] - x[0])
    dual[-1] = 0.5 * (x[-1] - x[-2])
    w = np.exp(-(((x[:, None] - x[None, :]) / width) ** 2)) * dual[None, :]
    out = (w @ e) / w.sum(axis=1)
    out[0], out[-1] = e[0], e[-1]
    return out


def curvature(eta: InterfaceProfile, smoothing_width: float = 0.0) -> np.ndarray:
    """Nodal mean curvature ``-d/dx (eta' / sqrt(1 + eta'^2))``.

    Slopes live on segments; the divergence is a centered difference over the
    dual cell of each node. End nodes see the flat continuation outside the
    profile (slope zero), since eta is zero beyond its nodes.
    """
    x = eta.x_nodes
    if x.size <= 2:
        return np.zeros(x.size)
    e = _mollify(x, eta.eta_values, smoothing_width)
    s = np.diff(e) / np.diff(x)
    flux = np.concatenate([[0.0], s / np.sqrt(1.0 + s * s), [0.0]])
    dual = np.empty_like(x)
    dual[1:-1] = 0.5 * (x[2:] - x[:-2])
    dual[0] = 0.5 * (x[1] - x[0])
    dual[-1] = 0.5 * (x[-1] - x[-2])
    return -(flux[1:] - flux[:-1]) / dual


def interface_functionals(eta: InterfaceProfile, smoothing_width: float = 0.0):
    neg, pos = l1_parts(eta)
    return InterfaceFunctionals(
        l1_neg=neg,
        l1_pos=pos,
        l2_sq=l2_squared(eta),
        rarea=renormalized_area(eta),
        kappa=curvature(eta, smoothing_width),
    )
