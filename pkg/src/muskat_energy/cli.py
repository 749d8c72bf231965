"""Command-line entry point ``muskat-energy``.

Usage::

    muskat-energy <command> --config <path> [--out <path>] [--seed <u64>] [--levels <n>]

Exit status: 0 when every invariant checked by the command holds, 1 on an
invariant failure, 2 on a configuration error, 3 when a linear solve does
not converge. Failures are listed as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

from .bounds import one_fluid_bound_check, saturation_sweep, verify_levels
from .config import (
    BumpsSpec,
    ConfigError,
    RunConfig,
    build_problem,
    expand_profiles,
    parse_config,
)
from .dissipation import euler_dissipation_check
from .model import ProblemError
from .profiles import gaussian_bumps
from .rect import RectProblem, fd_rect_extrapolated, fourier_coefficients, rect_energy
from .solver import NoConvergence

__all__ = ["SCHEMAS", "RunResult", "run", "format_value", "write_csv", "main"]

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

SCHEMAS = {
    "verify": (
        "profile_id",
        "sigma",
        "nx",
        "ny",
        "level",
        "E_h",
        "B",
        "ratio",
        "competitor_energy",
        "strict_pass",
        "green_residual",
    ),
    "sweep": ("mode", "L", "H", "w", "ratio"),
    "oracle": ("L", "H", "N", "D_v", "D_u", "D_fd", "ratio_LH"),
    "dissipation": (
        "profile_id",
        "sigma",
        "E_h",
        "green_residual",
        "lyapunov_before",
        "lyapunov_after",
        "dt",
        "delta_ratio",
    ),
    "onefluid": ("profile_id", "E_h", "bound", "strict_pass", "max_dtn"),
    "suite": ("criterion", "passed", "detail"),
}


@dataclass
class RunResult:
    command: str
    rows: list[tuple] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def status(self) -> int:
        return EXIT_INVARIANT if self.failures else EXIT_OK


def format_value(v, digits: int) -> str:
    """Booleans as true/false, floats with ``digits`` significant digits."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{digits}g}"
    return str(v)


def write_csv(result: RunResult, digits: int, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SCHEMAS[result.command])
    for row in result.rows:
        w.writerow([format_value(v, digits) for v in row])


def _profiles(cfg: RunConfig):
    return expand_profiles(cfg.problem.profile, cfg.numerics.nx, cfg.problem.domain.halfwidth)


def _green_tol(cfg: RunConfig) -> float:
    return 100.0 * cfg.numerics.rel_tol


def _run_verify(cfg: RunConfig, out: RunResult):
    num = cfg.numerics
    for pid, eta in enumerate(_profiles(cfg)):
        prob = build_problem(cfg.problem, eta)
        reps = verify_levels(prob, num.nx, num.ny, num.levels, num.rel_tol, num.smoothing_width)
        for level, r in enumerate(reps):
            out.rows.append(
                (
                    pid,
                    prob.params.sigma,
                    r.nx,
                    r.ny,
                    level,
                    r.E_h,
                    r.B,
                    r.ratio,
                    r.competitor_energy,
                    r.strict_pass,
                    r.green_residual,
                )
            )
            tag = f"profile {pid} level {level}"
            if r.green_residual > _green_tol(cfg):
                out.failures.append(f"{tag}: Green residual {r.green_residual:.3e}")
            if r.sigma_mode == "exact":
                if not (r.strict_pass or r.saturated):
                    out.failures.append(f"{tag}: E_h = {r.E_h:.6g} not below B = {r.B:.6g}")
                if r.competitor_energy < r.E_h:
                    out.failures.append(f"{tag}: competitor energy below E_h")
        E = [r.E_h for r in reps]
        for k in range(1, len(E)):
            if E[k] > E[k - 1] * (1 + 1e-10):
                out.failures.append(f"profile {pid}: E_h increased from level {k - 1} to {k}")


def _run_sweep(cfg: RunConfig, out: RunResult):
    s = cfg.sweep
    pts = saturation_sweep(
        s.mode,
        s.L,
        s.H_list,
        s.ramp,
        (s.cells_per_segment, s.ny),
        s.mu_plus,
        s.mu_minus,
        cfg.numerics.rel_tol,
        cfg.numerics.N,
    )
    for p in pts:
        out.rows.append((p.mode, p.L, p.H, p.ramp, p.ratio))
        if s.mode == "two_phase" and not 0 < p.ratio < 1:
            out.failures.append(f"H = {p.H:g}: ratio {p.ratio:.6g} outside (0, 1)")
    order = sorted(range(len(pts)), key=lambda k: pts[k].H)
    for a, b in zip(order, order[1:]):
        if pts[b].H > pts[a].H and not pts[b].ratio > pts[a].ratio:
            out.failures.append(f"ratio not increasing from H = {pts[a].H:g} to {pts[b].H:g}")


def _run_oracle(cfg: RunConfig, out: RunResult):
    o = cfg.oracle
    N = cfg.numerics.N
    for H in o.H_list:
        p = RectProblem(o.L, H, N)
        s = rect_energy(p)
        nx = max(8, int(round(o.cells_per_unit * o.L)))
        ny = max(8, int(round(o.cells_per_unit * H)))
        _, _, d_fd = fd_rect_extrapolated(o.L, H, nx, ny)
        out.rows.append((o.L, H, N, s.D_v, s.D_u, d_fd, s.ratio))
        rel = abs(d_fd - s.D_u) / s.D_u
        if rel > 1e-3:
            out.failures.append(f"H = {H:g}: series/FD relative gap {rel:.3e}")
        if abs(s.D_u + s.D_v - o.L * H) > 1e-12 * o.L * H:
            out.failures.append(f"H = {H:g}: D_u + D_v differs from L H")
    if any(fourier_coefficients(RectProblem(o.L, 1.0, N))[1::2] != 0):
        out.failures.append("even Fourier coefficients are not zero")


def _run_dissipation(cfg: RunConfig, out: RunResult):
    num = cfg.numerics
    for pid, eta in enumerate(_profiles(cfg)):
        prob = build_problem(cfg.problem, eta)
        r = euler_dissipation_check(prob, num.dt, num.nx, num.ny, num.rel_tol, num.smoothing_width)
        out.rows.append(
            (
                pid,
                prob.params.sigma,
                r.E_h,
                r.green_residual,
                r.lyapunov_before,
                r.lyapunov_after,
                r.dt,
                r.delta_ratio,
            )
        )
        if r.green_residual > _green_tol(cfg):
            out.failures.append(f"profile {pid}: Green residual {r.green_residual:.3e}")
        if r.E_h > 0:
            if not r.decreased:
                out.failures.append(f"profile {pid}: Lyapunov functional did not decrease")
            if not 0.4 <= r.delta_ratio <= 0.6:
                out.failures.append(f"profile {pid}: dt-halving ratio {r.delta_ratio:.4f}")


def _run_onefluid(cfg: RunConfig, out: RunResult):
    num = cfg.numerics
    spec = cfg.problem.profile
    X = cfg.problem.domain.halfwidth
    res = tuple(num.nx * 2**k for k in range(num.levels))
    per_level = isinstance(spec, BumpsSpec) and spec.spacing == "mesh"
    for pid, eta in enumerate(_profiles(cfg)):
        at = None
        if per_level:
            def at(n, seed=spec.seed + pid):
                return gaussian_bumps(
                    seed, spec.count, spec.amplitude, spec.width, spec.support, 2 * X / n
                )
        prob = build_problem(cfg.problem, eta)
        rep = one_fluid_bound_check(prob, res, num.rel_tol, profile_at=at)
        out.rows.append((pid, rep.E_h, rep.B, rep.strict_pass, rep.max_dtn))
        if rep.saturated:
            continue
        if not rep.strict_pass:
            out.failures.append(f"profile {pid}: E_1f not below the bound")
        if not rep.dtn_below_one:
            out.failures.append(f"profile {pid}: max G(eta)eta = {rep.max_dtn:.6g} >= 1")
        if len(res) > 1 and rep.dtn_change > 0.02:
            out.failures.append(f"profile {pid}: max G(eta)eta changed {rep.dtn_change:.2%}")


def _run_suite(cfg: RunConfig, out: RunResult):
    from .acceptance import run_all

    for r in run_all(cfg.suite.seed):
        out.rows.append((r.key, r.passed, r.detail))
        if not r.passed:
            out.failures.append(r.line())


_COMMANDS = {
    "verify": _run_verify,
    "sweep": _run_sweep,
    "oracle": _run_oracle,
    "dissipation": _run_dissipation,
    "onefluid": _run_onefluid,
    "suite": _run_suite,
}


def run(cfg: RunConfig) -> RunResult:
    """Execute the configured workflow; rows follow :data:`SCHEMAS`."""
    out = RunResult(cfg.command)
    _COMMANDS[cfg.command](cfg, out)
    return out


def _apply_overrides(cfg: RunConfig, command: str, seed, levels) -> RunConfig:
    upd = {"command": command}
    if levels is not None:
        upd["numerics"] = cfg.numerics.model_copy(update={"levels": levels})
    if seed is not None:
        upd["suite"] = cfg.suite.model_copy(update={"seed": seed})
        if isinstance(cfg.problem.profile, BumpsSpec):
            prof = cfg.problem.profile.model_copy(update={"seed": seed})
            upd["problem"] = cfg.problem.model_copy(update={"profile": prof})
    # re-validate so overrides obey the same ranges as file values
    return parse_config(json.dumps(cfg.model_copy(update=upd).model_dump(mode="json")))


def _fail(code: int, failures: list[str]) -> int:
    print(json.dumps({"exit": code, "failures": failures}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="muskat-energy", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True, help="YAML or JSON run configuration")
    ap.add_argument("--out", help="CSV output path (default: output.csv from config, else stdout)")
    ap.add_argument("--seed", type=int, help="seed override for random profiles and the suite")
    ap.add_argument("--levels", type=int, help="number of nested refinement levels")
    args = ap.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        return _fail(EXIT_CONFIG, [f"cannot read config: {exc}"])
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = _apply_overrides(parse_config(text), args.command, args.seed, args.levels)
        result = run(cfg)
    except (ConfigError, ProblemError) as exc:
        return _fail(EXIT_CONFIG, [f"{type(exc).__name__}: {exc}"])
    except NoConvergence as exc:
        return _fail(EXIT_SOLVER, [str(exc)])
    buf = io.StringIO()
    write_csv(result, cfg.output.digits, buf)
    path = args.out or cfg.output.csv
    if path:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if result.failures:
        return _fail(EXIT_INVARIANT, result.failures)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
