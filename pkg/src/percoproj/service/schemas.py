"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..percolation import DEFAULT_CELL_BUDGET


class GenerateRequest(BaseModel):
    k: int = Field(ge=2)
    p: float = Field(gt=0.0, lt=1.0)
    depth: int = Field(ge=0)
    seed: int = 0
    cell_budget: int = DEFAULT_CELL_BUDGET


class RegimeInfo(BaseModel):
    branching_mean: float
    supercritical_branching: bool
    projection_regime: bool
    warnings: list[str] = []


class GenerateResponse(BaseModel):
    k: int
    p: float
    seed: int
    max_depth: int
    counts: list[int]
    z_estimates: list[float]
    extinct_at: int | None
    regime: RegimeInfo
    tree_text: str


class DensityRequest(BaseModel):
    tree_text: str | None = None
    generate: GenerateRequest | None = None
    level: int = Field(ge=0)
    direction: str  # 'horizontal' | 'vertical' | 'pi/4' | radians
    window: tuple[float, float] | None = None
    x: float | None = None
    strict: bool = True
    samples: int = Field(default=0, ge=0)


class DensityResponse(BaseModel):
    density: dict
    mass: float
    count: int
    mass_identity_expected: float | None
    point_value: float | None = None
    csv: str | None = None


class ConstantsRequest(BaseModel):
    k: int = Field(ge=2)
    p: float = Field(gt=0.0, lt=1.0)
    delta: float = Field(default=0.1, gt=0.0)
    level: int = Field(default=6, ge=0)
    big_n: int = Field(default=20, ge=1)


class ConstantsResponse(BaseModel):
    report: dict


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyRequest(BaseModel):
    tree_text: str | None = None
    generate: GenerateRequest | None = None
    samples: int = Field(default=200, ge=0)


class VerifyResponse(BaseModel):
    checks: list[CheckModel]
    passed: bool


class ExperimentRequest(BaseModel):
    config: dict
    workers: int = Field(default=1, ge=1)
    dry_run: bool = False


class ExperimentResponse(BaseModel):
    status: str  # 'pass' | 'gate_failed' | 'infeasible' | 'dry_run'
    exit_code: int
    report: dict | None = None
    report_text: str | None = None
    csv: dict[str, str] = {}
    timing: dict[str, float] = {}
    feasibility: dict | None = None
