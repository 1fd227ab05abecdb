"""Run configuration: JSON file validated before any computation."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

FieldName = Literal["mu_prime", "delta_prime", "delta_d_prime", "M_prime"]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelBlock(_Block):
    dimension: Literal[1, 2] = 1
    L_c: int = Field(2, ge=1, le=4)
    N_c: int = Field(50, ge=1, le=2000)
    t: float = 1.0
    U: float = 0.0
    mu: float = 0.0
    T: float = Field(1.0, gt=0)
    a: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _geometry(self):
        if self.dimension == 2 and self.L_c != 4:
            raise ValueError("two-dimensional runs use L_c = 4")
        return self


class VariationalBlock(_Block):
    mu_prime: float = 0.0
    delta_prime: float = 0.0
    delta_d_prime: float = 0.0
    M_prime: float = 0.0
    active: list[FieldName] = Field(default_factory=lambda: ["mu_prime", "delta_prime"], min_length=1)
    bounds: tuple[float, float] = (-10.0, 10.0)

    @model_validator(mode="after")
    def _bounds(self):
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError("bounds must satisfy lower < upper")
        for name in ("mu_prime", "delta_prime", "delta_d_prime", "M_prime"):
            if not lo <= getattr(self, name) <= hi:
                raise ValueError(f"{name} lies outside bounds")
        return self


class GridBlock(_Block):
    dtau: float = Field(0.05, gt=0)
    n_max: int = Field(2000, ge=2, le=200_000)
    eta: float = Field(float(np.pi / 50), gt=0)


class RieraBlock(_Block):
    m: int = Field(4, ge=1, le=256)
    r: int = Field(8, ge=2, le=16)
    q: int = Field(4, ge=1, le=15)
    lam: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _widths(self):
        if not self.r > self.q:
            raise ValueError("r must exceed q")
        return self


class EmulatorBlock(_Block):
    evolution: Literal["exact", "trotter"] = "exact"
    n_T: int = Field(1, ge=1, le=10_000)
    gibbs: Literal["exact", "riera"] = "exact"
    riera: RieraBlock = Field(default_factory=RieraBlock)
    shots: Optional[int] = Field(None, ge=1)


class BackendBlock(_Block):
    kind: Literal["ed", "emulator"] = "ed"
    emulator: EmulatorBlock = Field(default_factory=EmulatorBlock)


class SolverBlock(_Block):
    h: float = Field(1e-3, gt=0, le=0.1)
    eps_omega: float = Field(1e-5, gt=0)
    max_iter: int = Field(50, ge=0, le=1000)
    max_step: float = Field(0.5, gt=0)


class AxisBlock(_Block):
    start: float
    stop: float
    num: int = Field(21, ge=1, le=1001)

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


class ScanBlock(_Block):
    mu_prime: AxisBlock = Field(default_factory=lambda: AxisBlock(start=-0.5, stop=0.5))
    delta_prime: AxisBlock = Field(default_factory=lambda: AxisBlock(start=-0.5, stop=0.5))


class GibbsStudyBlock(_Block):
    system: Literal["cluster", "number_operator"] = "number_operator"
    target_beta: float = 1.0
    m_values: list[int] = Field(default_factory=lambda: [4], min_length=1)


class ObservablesBlock(_Block):
    target_filling: Optional[float] = Field(None, gt=0, lt=1)
    mu_bracket: tuple[float, float] = (-4.0, 0.0)


class RunConfig(_Block):
    model: ModelBlock = Field(default_factory=ModelBlock)
    variational: VariationalBlock = Field(default_factory=VariationalBlock)
    grid: GridBlock = Field(default_factory=GridBlock)
    backend: BackendBlock = Field(default_factory=BackendBlock)
    solver: SolverBlock = Field(default_factory=SolverBlock)
    scan: ScanBlock = Field(default_factory=ScanBlock)
    gibbs_study: GibbsStudyBlock = Field(default_factory=GibbsStudyBlock)
    observables: ObservablesBlock = Field(default_factory=ObservablesBlock)
    output_dir: str = "out"
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _fields_need_square(self):
        v = self.variational
        if self.model.dimension == 1:
            if v.delta_d_prime != 0 or v.M_prime != 0 or {"delta_d_prime", "M_prime"} & set(v.active):
                raise ValueError("d-wave and Neel fields need the 2x2 cluster (dimension 2)")
        return self


def load_config(path: str | Path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return RunConfig.model_validate(data)
