"""Run configuration: a strict YAML schema validated with pydantic.

A configuration is a YAML mapping (JSON is accepted too)::

    command: verify
    problem:
      params: {mu_plus: 1, mu_minus: 1, rho_plus: 0, rho_minus: 1, sigma: 0}
      profile: {kind: tent, height: 1, halfwidth: 1}
      domain: {halfwidth: 4, depth: 4, height: 4}
    numerics: {nx: 128, ny: 64, levels: 3}
    output: {csv: out.csv, digits: 12}

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

from typing import Annotated, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .model import Boundary, DomainSpec, FluidParams, InterfaceProfile, Problem, validate_config
from .profiles import SUITE_SPACING, SUITE_SUPPORT, gaussian_bumps, mollified_step

__all__ = [
    "ConfigError",
    "ParseError",
    "SchemaError",
    "RangeError",
    "ParamsConfig",
    "DomainConfig",
    "ProfileSpec",
    "ProblemConfig",
    "NumericsConfig",
    "OutputConfig",
    "SweepConfig",
    "OracleConfig",
    "SuiteConfig",
    "RunConfig",
    "parse_config",
    "emit_config",
    "expand_profiles",
    "build_problem",
]


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    pass


class SchemaError(ConfigError):
    pass


class RangeError(ConfigError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ParamsConfig(_Strict):
    mu_plus: float = Field(1.0, ge=0)
    mu_minus: float = Field(1.0, gt=0)
    rho_plus: float = 0.0
    rho_minus: float = 1.0
    sigma: float = Field(0.0, ge=0)
    one_fluid: bool = False

    @model_validator(mode="after")
    def _density_jump(self):
        if self.rho_minus - self.rho_plus <= 0:
            raise ValueError("density jump rho_minus - rho_plus must be positive")
        if self.one_fluid and (self.mu_plus != 0 or self.rho_plus != 0):
            raise ValueError("one_fluid needs mu_plus = rho_plus = 0")
        if not self.one_fluid and self.mu_plus <= 0:
            raise ValueError("mu_plus must be positive for two-phase runs")
        return self

    def to_params(self) -> FluidParams:
        return FluidParams(
            self.mu_plus, self.mu_minus, self.rho_plus, self.rho_minus, self.sigma, self.one_fluid
        )


class WallConfig(_Strict):
    x: list[float]
    y: list[float]


class DomainConfig(_Strict):
    halfwidth: float = Field(4.0, gt=0)
    depth: float = Field(4.0, gt=0)
    height: float | None = Field(None, gt=0)
    bottom: WallConfig | None = None
    top: WallConfig | None = None

    def to_domain(self, one_fluid: bool) -> DomainSpec:
        bottom = (
            Boundary(x=tuple(self.bottom.x), y=tuple(self.bottom.y))
            if self.bottom
            else Boundary(level=-self.depth)
        )
        if one_fluid:
            return DomainSpec(self.halfwidth, bottom, None)
        if self.top:
            top = Boundary(x=tuple(self.top.x), y=tuple(self.top.y))
        else:
            top = Boundary(level=self.depth if self.height is None else self.height)
        return DomainSpec(self.halfwidth, bottom, top)


class ExplicitNodes(_Strict):
    kind: Literal["explicit_nodes"]
    x: list[float]
    eta: list[float]


class TentSpec(_Strict):
    kind: Literal["tent"]
    height: float = 1.0
    halfwidth: float = Field(1.0, gt=0)
    center: float = 0.0


class StepSpec(_Strict):
    kind: Literal["mollified_step"]
    L: float = Field(1.0, gt=0)
    H: float = Field(1.0, gt=0)
    w: float = Field(0.0625, gt=0)


class BumpsSpec(_Strict):
    kind: Literal["gaussian_bumps"]
    seed: int = Field(0, ge=0, lt=2**64)
    n_profiles: int = Field(1, ge=1, le=10_000)
    count: tuple[int, int] = (1, 3)
    amplitude: tuple[float, float] = (-1.0, 1.0)
    width: tuple[float, float] = (0.2, 0.6)
    support: float = Field(SUITE_SUPPORT, gt=0)
    spacing: float | Literal["mesh"] = SUITE_SPACING

    @model_validator(mode="after")
    def _ranges(self):
        if not 1 <= self.count[0] <= self.count[1]:
            raise ValueError("count must satisfy 1 <= low <= high")
        if not 0 < self.width[0] <= self.width[1]:
            raise ValueError("width must satisfy 0 < low <= high")
        if self.amplitude[0] > self.amplitude[1]:
            raise ValueError("amplitude must satisfy low <= high")
        if self.spacing != "mesh" and not self.spacing > 0:
            raise ValueError("spacing must be positive or 'mesh'")
        return self


class FlatSpec(_Strict):
    kind: Literal["flat"]
    halfwidth: float = Field(1.0, gt=0)


ProfileSpec = Annotated[
    Union[ExplicitNodes, TentSpec, StepSpec, BumpsSpec, FlatSpec], Field(discriminator="kind")
]


class ProblemConfig(_Strict):
    params: ParamsConfig = ParamsConfig()
    profile: ProfileSpec = TentSpec(kind="tent")
    domain: DomainConfig = DomainConfig()


class NumericsConfig(_Strict):
    nx: int = Field(128, ge=2, le=1 << 14)
    ny: int = Field(64, ge=1, le=1 << 14)
    levels: int = Field(3, ge=1, le=8)
    rel_tol: float = Field(1e-10, gt=0, le=1e-4)
    N: int = Field(128, ge=1, le=1 << 20)
    dt: float = Field(1e-2, gt=0)
    smoothing_width: float = Field(0.0, ge=0)


class OutputConfig(_Strict):
    csv: str | None = None
    digits: int = Field(12, ge=1, le=17)


class SweepConfig(_Strict):
    mode: Literal["rect_oracle", "two_phase"] = "rect_oracle"
    L: float = Field(1.0, gt=0)
    H_list: list[Annotated[float, Field(gt=0)]] = [1.0, 4.0, 8.0, 32.0]
    ramp: float | None = Field(None, gt=0)
    mu_plus: float = Field(1e-3, gt=0)
    mu_minus: float = Field(1.0, gt=0)
    cells_per_segment: int = Field(32, ge=1)
    ny: int = Field(128, ge=1)


class OracleConfig(_Strict):
    L: float = Field(1.0, gt=0)
    H_list: list[Annotated[float, Field(gt=0)]] = [0.25, 1.0, 4.0, 8.0]
    cells_per_unit: int = Field(64, ge=8)


class SuiteConfig(_Strict):
    seed: int = Field(0, ge=0, lt=2**64)
    quick: bool = False


class RunConfig(_Strict):
    command: Literal["verify", "sweep", "oracle", "dissipation", "onefluid", "suite"]
    problem: ProblemConfig = ProblemConfig()
    numerics: NumericsConfig = NumericsConfig()
    output: OutputConfig = OutputConfig()
    sweep: SweepConfig = SweepConfig()
    oracle: OracleConfig = OracleConfig()
    suite: SuiteConfig = SuiteConfig()


_RANGE_TYPES = {
    "greater_than",
    "greater_than_equal",
    "less_than",
    "less_than_equal",
    "value_error",
}


def _raise_validation(err: ValidationError):
    issues = err.errors()
    lines = []
    range_only = True
    for e in issues:
        loc = ".".join(str(p) for p in e["loc"])
        if e["type"] == "extra_forbidden":
            lines.append(f"unknown key {loc!r}")
        else:
            lines.append(f"{loc or '<root>'}: {e['msg']}")
        if e["type"] not in _RANGE_TYPES:
            range_only = False
    cls = RangeError if range_only else SchemaError
    raise cls("; ".join(lines)) from None


def parse_config(text: str) -> RunConfig:
    """Parse YAML (or JSON) text into a validated :class:`RunConfig`."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ParseError("configuration must be a mapping at top level")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        _raise_validation(exc)


def emit_config(cfg: RunConfig) -> str:
    """YAML text that :func:`parse_config` maps back to an equal config."""
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)


def expand_profiles(spec, nx: int | None = None, halfwidth: float | None = None):
    """Deterministic list of profiles for a profile spec.

    ``spacing: mesh`` samples bumps at the column spacing ``2 X / nx``.
    """
    if isinstance(spec, ExplicitNodes):
        return [InterfaceProfile(np.asarray(spec.x), np.asarray(spec.eta))]
    if isinstance(spec, TentSpec):
        return [InterfaceProfile.tent(spec.height, spec.halfwidth, spec.center)]
    if isinstance(spec, StepSpec):
        return [mollified_step(spec.L, spec.H, spec.w)]
    if isinstance(spec, FlatSpec):
        return [InterfaceProfile.flat(spec.halfwidth)]
    spacing = spec.spacing
    if spacing == "mesh":
        if nx is None or halfwidth is None:
            raise RangeError("spacing 'mesh' needs the mesh width")
        spacing = 2.0 * halfwidth / nx
    return [
        gaussian_bumps(
            spec.seed + k, spec.count, spec.amplitude, spec.width, spec.support, spacing
        )
        for k in range(spec.n_profiles)
    ]


def build_problem(cfg: ProblemConfig, eta: InterfaceProfile) -> Problem:
    params = cfg.params.to_params()
    return validate_config(params, eta, cfg.domain.to_domain(params.one_fluid))
