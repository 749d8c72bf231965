"""Deterministic interface profile families.

Random profiles use :func:`numpy.random.default_rng` (PCG64) seeded with the
caller's integer seed, and draw in a fixed order: bump count, then for each
bump its center, width and amplitude. Any implementation following the same
draw order reproduces the suite.
"""

from __future__ import annotations

import numpy as np

from .model import InterfaceProfile

__all__ = [
    "flat",
    "tent",
    "mollified_step",
    "gaussian_bumps",
    "random_suite",
    "SUITE_SUPPORT",
    "SUITE_SPACING",
]

SUITE_SUPPORT = 2.0
SUITE_SPACING = 0.125


def flat(halfwidth: float = 1.0) -> InterfaceProfile:
    return InterfaceProfile.flat(halfwidth)


def tent(height: float = 1.0, halfwidth: float = 1.0, center: float = 0.0) -> InterfaceProfile:
    return InterfaceProfile.tent(height, halfwidth, center)


def mollified_step(length: float, height: float, ramp: float, left: float | None = None):
    """Step of ``height`` on ``[left, left + length]`` with linear ramps of width ``ramp`` outside.

    With ``s1 = height * 1[left, left+length]`` and ``s2`` the same step
    widened by ``ramp`` on each side, the profile satisfies ``s1 <= eta <= s2``.
    Defaults to a step centered at the origin.
    """
    if length <= 0 or ramp <= 0:
        raise ValueError("length and ramp must be positive")
    a = -0.5 * length if left is None else left
    b = a + length
    x = np.array([a - ramp, a, b, b + ramp])
    return InterfaceProfile(x, np.array([0.0, height, height, 0.0]))


def gaussian_bumps(
    seed: int,
    count: tuple[int, int] = (1, 3),
    amplitude: tuple[float, float] = (-1.0, 1.0),
    width: tuple[float, float] = (0.2, 0.6),
    support: float = SUITE_SUPPORT,
    spacing: float = SUITE_SPACING,
) -> InterfaceProfile:
    """Sum of Gaussian bumps tapered to vanish outside ``[-support, support]``.

    Sampled at ``spacing`` on the support, so it is exactly piecewise linear on
    any mesh whose column spacing divides ``spacing``. If overlapping bumps
    push ``max |eta|`` past the largest admissible amplitude, the profile is
    rescaled to that amplitude.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(count[0], count[1] + 1))
    m = int(round(2 * support / spacing))
    x = np.linspace(-support, support, m + 1)
    taper = (1.0 - (x / support) ** 2) ** 2
    eta = np.zeros_like(x)
    for _ in range(n):
        c = rng.uniform(-0.75 * support, 0.75 * support)
        s = rng.uniform(*width)
        a = rng.uniform(*amplitude)
        eta += a * np.exp(-(((x - c) / s) ** 2))
    eta *= taper
    eta[0] = eta[-1] = 0.0
    cap = max(abs(amplitude[0]), abs(amplitude[1]))
    peak = np.abs(eta).max()
    if peak > cap:
        eta *= cap / peak
    return InterfaceProfile(x, eta)


def random_suite(n: int, seed: int = 0, elevation: bool = False, **kwargs) -> list[InterfaceProfile]:
    """``n`` bump profiles from consecutive seeds ``seed, seed + 1, ...``."""
    if elevation:
        kwargs.setdefault("amplitude", (0.1, 1.0))
    return [gaussian_bumps(seed + k, **kwargs) for k in range(n)]
