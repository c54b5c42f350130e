"""TOML run configuration. Every frequency in the file is in Hz."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .device import DIAMOND_DENSITY, DIAMOND_YOUNGS_MODULUS, BeamGeometry
from .model import SystemParams
from .sweep import AXES


class ConfigError(ValueError):
    pass


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemBlock(_Block):
    """Either absolute splittings (delta_b1, delta_b2) or ratios (omega_over_v, delta_over_a)."""

    omega_m: float = 2e9
    g_collective: float
    v: float
    delta_b1: Optional[float] = None
    delta_b2: Optional[float] = None
    omega_over_v: Optional[float] = None
    delta_over_a: Optional[float] = None
    n_spins: int = 100
    kappa: float = 0.0
    n_th: float = 0.0

    @model_validator(mode="after")
    def _one_form(self):
        absolute = self.delta_b1 is not None or self.delta_b2 is not None
        ratios = self.omega_over_v is not None or self.delta_over_a is not None
        if absolute == ratios:
            raise ValueError("give either delta_b1 and delta_b2, or omega_over_v (and optionally delta_over_a)")
        if absolute and (self.delta_b1 is None or self.delta_b2 is None):
            raise ValueError("delta_b1 and delta_b2 must both be given")
        if ratios and self.omega_over_v is None:
            raise ValueError("omega_over_v is required with delta_over_a")
        return self

    def to_params(self) -> SystemParams:
        if self.delta_b1 is not None:
            return SystemParams.from_hz(
                omega_m=self.omega_m, delta_b1=self.delta_b1, delta_b2=self.delta_b2,
                g_collective=self.g_collective, v=self.v, n_spins=self.n_spins, kappa=self.kappa, n_th=self.n_th,
            )
        return SystemParams.from_ratios(
            self.omega_over_v, self.delta_over_a or 0.0,
            g_hz=self.g_collective, v_hz=self.v, omega_m_hz=self.omega_m,
            n_spins=self.n_spins, kappa_hz=self.kappa, n_th=self.n_th,
        )


class GeometryBlock(_Block):
    length: float
    width: float
    height: float
    density: float = DIAMOND_DENSITY
    youngs_modulus: float = DIAMOND_YOUNGS_MODULUS
    quality_factor: float = 1e6
    temperature: float = 0.01
    n_spins: int = 100

    def to_geometry(self) -> BeamGeometry:
        return BeamGeometry(**self.model_dump(exclude={"n_spins"}))


class RunBlock(_Block):
    horizon: float = Field(1e-3, ge=0)
    samples: int = Field(401, ge=1)
    theta: list[float] = [0.0]
    engine: Literal["gaussian", "fock"] = "gaussian"
    model: Literal["full", "effective", "squeeze-special"] = "effective"
    hp_fraction: float = Field(0.1, gt=0)
    cutoffs: Optional[list[int]] = None
    boundary_tol: Optional[float] = Field(None, gt=0)


class OutputBlock(_Block):
    directory: str = "out"
    formats: list[Literal["csv", "json"]] = ["csv"]


class SweepAxis(_Block):
    name: Literal[AXES]  # type: ignore[valid-type]
    values: list[float] = Field(min_length=1)


class SweepBlock(_Block):
    axes: list[SweepAxis] = Field(default_factory=list, max_length=3)
    workers: int = Field(1, ge=1)


class OptimizeBlock(_Block):
    omega_over_v: tuple[float, float] = (2.0, 2.0)
    delta_over_a: tuple[float, float] = (-1.0, 0.0)
    grid: int = Field(9, ge=2)
    xtol: float = Field(1e-3, gt=0)


class OracleBlock(_Block):
    cutoffs: list[int] = [12, 12]
    samples: int = Field(201, ge=2)
    boundary_tol: float = Field(1e-3, gt=0)


class RunConfig(_Block):
    units: Literal["hz"] = "hz"
    system: Optional[SystemBlock] = None
    geometry: Optional[GeometryBlock] = None
    run: RunBlock = RunBlock()
    output: OutputBlock = OutputBlock()
    sweep: SweepBlock = SweepBlock()
    optimize: OptimizeBlock = OptimizeBlock()
    oracle: OracleBlock = OracleBlock()

    def params(self) -> SystemParams:
        if self.system is None:
            raise ConfigError("[system] block is required for this command")
        try:
            return self.system.to_params()
        except ValueError as exc:
            raise ConfigError(f"[system]: {exc}") from exc


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax: {exc}") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)
