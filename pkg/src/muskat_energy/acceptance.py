"""Acceptance battery shared by ``muskat-energy suite`` and the test suite.

Each criterion returns a :class:`CriterionResult`; nothing is asserted here.
Tolerances are the stated ones and are not tuned per run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import one_fluid_bound_check, saturation_sweep, verify_bound
from .bounds import verify_levels
from .dissipation import euler_dissipation_check
from .model import DomainSpec, FluidParams, InterfaceProfile, validate_config
from .profiles import gaussian_bumps, random_suite
from .rect import RectProblem, fd_rect_extrapolated, fourier_coefficients, rect_energy
from .solver import DEFAULT_REL_TOL, solve_problem

__all__ = [
    "CriterionResult",
    "MU_PAIRS",
    "EULER_DT",
    "ac1_certificate",
    "ac2_saturation",
    "ac3_optimality",
    "ac4_oracle",
    "ac5_dissipation",
    "ac6_truncation",
    "ac7_structure",
    "ac8_one_fluid",
    "CRITERIA",
    "run_all",
]

MU_PAIRS = ((1.0, 1.0), (2.0, 3.0), (1e-3, 1.0))
WINDOW, DEPTH = 4.0, 4.0
NX, NY = 128, 64
SUITE_SIZE = 20
# Explicit capillary steps are stable only for dt of order h^3 / sigma
EULER_DT = {0.0: 1e-2, 0.1: 1e-5}


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{self.key} {'PASS' if self.passed else 'FAIL'} {self.title}: {self.detail}"


def _two_phase(mu, eta, sigma=0.0, X=WINDOW, D=DEPTH):
    return validate_config(FluidParams(mu[0], mu[1], 0.0, 1.0, sigma), eta, DomainSpec.flat(X, D))


def ac1_certificate(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    worst, fails = 0.0, []
    margins = []
    for mu in MU_PAIRS:
        for k, eta in enumerate(random_suite(SUITE_SIZE, seed)):
            r = verify_bound(_two_phase(mu, eta), NX, NY)
            worst = max(worst, r.ratio)
            margins.append(r.margin)
            if not (r.strict_pass and r.ratio < 1):
                fails.append((mu, k, r.ratio))
    dt = time.perf_counter() - t0
    ok = not fails and dt <= 60.0
    return CriterionResult(
        "AC-1",
        "energy-bound certificate",
        ok,
        f"{3 * SUITE_SIZE} runs, max ratio {worst:.4f}, {len(fails)} failures, {dt:.1f} s",
        {"max_ratio": worst, "failures": fails, "seconds": dt, "min_margin": min(margins)},
    )


def ac2_saturation(seed: int = 0) -> CriterionResult:
    flat = _two_phase((1.0, 1.0), InterfaceProfile.flat(2.0))
    r0 = verify_bound(flat, NX, NY)
    zero_ok = r0.E_h == 0 and r0.B == 0 and r0.saturated
    min_margin = np.inf
    for mu in MU_PAIRS:
        for eta in random_suite(SUITE_SIZE, seed):
            r = verify_bound(_two_phase(mu, eta), NX, NY)
            min_margin = min(min_margin, r.margin / r.B)
    ok = zero_ok and min_margin > 0
    return CriterionResult(
        "AC-2",
        "strictness and saturation edge",
        ok,
        f"flat: E_h={r0.E_h:g} B={r0.B:g} saturated={r0.saturated}; "
        f"min relative margin {min_margin:.3e}",
        {"min_relative_margin": min_margin},
    )


def ac3_optimality() -> CriterionResult:
    rect = saturation_sweep("rect_oracle", 1.0, [1.0, 4.0, 8.0, 32.0])
    ratios = [p.ratio for p in rect]
    monotone = all(a < b for a, b in zip(ratios, ratios[1:]))
    rect_ok = monotone and ratios[-1] >= 0.99 - 0.005
    (two,) = saturation_sweep("two_phase", 1.0, [8.0], ramp=1 / 16, mu_plus=1e-3)
    ok = rect_ok and two.ratio >= 0.85
    return CriterionResult(
        "AC-3",
        "optimality sweep",
        ok,
        f"rect ratios {', '.join(f'{r:.5f}' for r in ratios)} (monotone={monotone}); "
        f"two-phase step H/L=8 ratio {two.ratio:.4f} (pin >= 0.85)",
        {"rect_ratios": ratios, "two_phase_ratio": two.ratio},
    )


def ac4_oracle(cells_per_unit: int = 64) -> CriterionResult:
    worst = 0.0
    rows = []
    for H in (0.25, 1.0, 4.0, 8.0):
        p = RectProblem(1.0, H)
        series = rect_energy(p).D_u
        ny = max(8, int(round(cells_per_unit * H)))
        nx = max(8, cells_per_unit)
        _, _, extrap = fd_rect_extrapolated(1.0, H, nx, ny)
        rel = abs(extrap - series) / series
        worst = max(worst, rel)
        rows.append((H, series, extrap, rel))
    even = fourier_coefficients(RectProblem(1.0, 1.0, 256))[1::2]
    parity = bool(np.all(even == 0.0))
    ok = worst <= 1e-3 and parity
    return CriterionResult(
        "AC-4",
        "oracle cross-validation",
        ok,
        f"max relative series/FD gap {worst:.2e}; even a_n exactly zero: {parity}",
        {"rows": rows, "worst": worst},
    )


def ac5_dissipation(seed: int = 0) -> CriterionResult:
    worst_green = 0.0
    ratios = []
    no_decrease = []
    for sigma, dt in EULER_DT.items():
        for k, eta in enumerate(random_suite(SUITE_SIZE, seed)):
            r = euler_dissipation_check(_two_phase((1.0, 1.0), eta, sigma), dt, NX, NY)
            worst_green = max(worst_green, r.green_residual)
            if r.E_h > 0:
                ratios.append(r.delta_ratio)
                if not r.decreased:
                    no_decrease.append((sigma, k))
    lo, hi = min(ratios), max(ratios)
    ok = worst_green <= 1e-8 and not no_decrease and 0.4 <= lo and hi <= 0.6
    return CriterionResult(
        "AC-5",
        "Green identity and Lyapunov step",
        ok,
        f"max Green residual {worst_green:.2e}; dt-halving ratios in [{lo:.4f}, {hi:.4f}]; "
        f"{len(no_decrease)} steps without decrease",
        {"green": worst_green, "ratio_range": (lo, hi), "no_decrease": no_decrease},
    )


def ac6_truncation(seed: int = 0) -> CriterionResult:
    worst_D = worst_X = 0.0
    over = []
    for k, eta in enumerate(random_suite(SUITE_SIZE, seed)):
        mu = (1.0, 1.0)
        e0 = solve_problem(_two_phase(mu, eta), NX, NY).energy
        eD = solve_problem(_two_phase(mu, eta, D=2 * DEPTH), NX, 2 * NY).energy
        eX = solve_problem(_two_phase(mu, eta, X=2 * WINDOW), 2 * NX, NY).energy
        dD, dX = abs(eD - e0) / e0, abs(eX - e0) / e0
        worst_D, worst_X = max(worst_D, dD), max(worst_X, dX)
        if dD > 0.01 or dX > 0.01:
            over.append((k, dD, dX))
    ok = not over
    return CriterionResult(
        "AC-6",
        "truncation robustness",
        ok,
        f"max change doubling D {worst_D:.2%}, doubling X {worst_X:.2%}; "
        f"{len(over)} profiles above 1% ({', '.join(str(o[0]) for o in over)})",
        {"worst_D": worst_D, "worst_X": worst_X, "over": over},
    )


def ac7_structure(seed: int = 0) -> CriterionResult:
    tent = _two_phase((1.0, 1.0), InterfaceProfile.tent(1.0, 1.0))
    bump = _two_phase((2.0, 3.0), random_suite(1, seed)[0])
    msgs, ok = [], True

    # nested refinement, three levels each
    mono = True
    for prob, n in ((tent, (128, 64)), (bump, (64, 32))):
        reps = verify_levels(prob, *n, levels=3)
        E = [r.E_h for r in reps]
        mono &= all(b <= a * (1 + 1e-10) for a, b in zip(E, E[1:]))
        if prob is tent:
            finest = reps[-1]
    ok &= mono
    msgs.append(f"nested monotone={mono}")

    # density scaling
    base = solve_problem(bump, 64, 32).energy
    worst_scale = 0.0
    for lam in (2.0, 3.0, 0.1):
        p = bump.with_params(bump.params.scaled_density(lam))
        e = solve_problem(p, 64, 32).energy
        worst_scale = max(worst_scale, abs(e - lam * lam * base) / (lam * lam * base))
    ok &= worst_scale <= 1e-12
    msgs.append(f"rho scaling {worst_scale:.1e}")

    # reflection x -> -x and phase swap y -> -y
    refl = solve_problem(bump.with_eta(bump.eta.reflected()), 64, 32).energy
    d_refl = abs(refl - base) / base
    swapped = validate_config(bump.params.swapped(), -bump.eta, bump.domain.swapped())
    d_swap = abs(solve_problem(swapped, 64, 32).energy - base) / base
    tol = 10 * DEFAULT_REL_TOL
    ok &= d_refl <= tol and d_swap <= tol
    msgs.append(f"reflection {d_refl:.1e}, swap {d_swap:.1e}")

    # interpolated competitor
    comp_ok = True
    for eta in random_suite(10, seed):
        r = verify_bound(_two_phase((2.0, 3.0), eta), 64, 32)
        comp_ok &= r.competitor_energy >= r.E_h
    within = abs(finest.competitor_energy - finest.B) / finest.B
    comp_ok &= finest.competitor_energy >= finest.E_h and within <= 0.01
    ok &= comp_ok
    msgs.append(f"competitor >= E_h and {within:.2%} from B at {finest.nx}x{finest.ny}")
    return CriterionResult(
        "AC-7",
        "structural invariants",
        bool(ok),
        "; ".join(msgs),
        {"scale": worst_scale, "reflection": d_refl, "swap": d_swap, "competitor_gap": within},
    )


def ac8_one_fluid(seed: int = 0, resolutions=(64, 128, 256)) -> CriterionResult:
    params = FluidParams(0.0, 1.0, 0.0, 1.0, one_fluid=True)
    domain = DomainSpec.flat_one_fluid(WINDOW, DEPTH)
    bound_ok, dtn_ok, stable_ok = True, True, True
    worst_dtn, worst_change = 0.0, 0.0
    for k in range(10):
        def at(n, k=k):
            return gaussian_bumps(seed + k, amplitude=(0.1, 1.0), spacing=2 * WINDOW / n)

        prob = validate_config(params, at(resolutions[0]), domain)
        rep = one_fluid_bound_check(prob, resolutions, profile_at=at)
        bound_ok &= rep.strict_pass
        dtn_ok &= rep.dtn_below_one
        stable_ok &= rep.dtn_change <= 0.02
        worst_dtn = max(worst_dtn, max(lv.max_dtn for lv in rep.levels[-2:]))
        worst_change = max(worst_change, rep.dtn_change)
    ok = bound_ok and dtn_ok and stable_ok
    return CriterionResult(
        "AC-8",
        "one-fluid checks",
        ok,
        f"E_1f < bound: {bound_ok}; max G(eta)eta {worst_dtn:.4f}; "
        f"max change between finest levels {worst_change:.2%}",
        {"max_dtn": worst_dtn, "change": worst_change},
    )


CRITERIA = {
    "AC-1": ac1_certificate,
    "AC-2": ac2_saturation,
    "AC-3": ac3_optimality,
    "AC-4": ac4_oracle,
    "AC-5": ac5_dissipation,
    "AC-6": ac6_truncation,
    "AC-7": ac7_structure,
    "AC-8": ac8_one_fluid,
}


def run_all(seed: int = 0, keys=None) -> list[CriterionResult]:
    out = []
    for key, fn in CRITERIA.items():
        if keys is not None and key not in keys:
            continue
        out.append(fn(seed) if "seed" in fn.__code__.co_varnames else fn())
    return out
