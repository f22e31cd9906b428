"""Run configuration: one validated object drives the CLI, service and pipeline."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    x_max: float = 60.0
    inv_h: int = 256


class KernelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    k_max: float = 64.0 * 3.141592653589793
    n_k: int = 2**16


class WavetrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    N: int = 32
    a1: float = 0.1
    a2: float = 0.65
    a_step: float = 0.01


class FamilySection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    x_a: float = 0.25
    x_b: float = 0.75


class CorrectorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    mode: Literal["picard", "semi_implicit"] = "picard"
    tol: float = 1e-8
    max_iter: int = 60
    damping: float = 0.7
    rho_guard: float = 0.2


class EvolveConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    T: float = 40.0
    dt: float = 0.005
    J: int = 200


class RunConfig(BaseModel):
    """Full pipeline configuration; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    c: float = 1.0
    epsilon: float = 1e-3
    gain: float = 1.0
    B: float = 0.05
    nu: float = -0.25
    grid: GridConfig = Field(default_factory=GridConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    wavetrain: WavetrainConfig = Field(default_factory=WavetrainConfig)
    family: FamilySection = Field(default_factory=FamilySection)
    corrector: CorrectorConfig = Field(default_factory=CorrectorConfig)
    evolve: EvolveConfig = Field(default_factory=EvolveConfig)
    output_dir: str = "out"
    cache_dir: str = "cache"

    @model_validator(mode="after")
    def _cross_checks(self):
        # re-run the module-level admissibility checks so bad configs fail at load
        from .family import FamilyConfig
        from .model import ModelParams

        p = ModelParams(c=self.c, epsilon=self.epsilon, B=self.B, nu=self.nu)
        FamilyConfig(x_a=self.family.x_a, x_b=self.family.x_b,
                     a1=self.wavetrain.a1, a2=self.wavetrain.a2).validate(p)
        if abs(self.gain) > 1.0:
            raise ValueError("|gain| must be <= 1")
        if self.grid.inv_h < 8:
            raise ValueError("1/h must be an integer >= 8")
        return self


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config file, apply dotted-path overrides, validate."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    for key, value in (overrides or {}).items():
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key} collides with a scalar")
        node[parts[-1]] = value
    try:
        return RunConfig(**data)
    except (ValidationError, ConfigError) as e:
        raise ConfigError(str(e)) from e


def parse_set_value(raw: str):
    """Coerce a --set value: JSON literal if possible, bare string otherwise."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw
