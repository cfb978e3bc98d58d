"""Request and response models of the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from ..problems import ProblemDocument


class SolverOverrides(BaseModel):
    """Optional per-request overrides of the document's solver section."""

    model_config = ConfigDict(extra="forbid")
    method: Optional[str] = None
    run_all: bool = False
    steps: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None


class ReachRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    document: ProblemDocument
    overrides: SolverOverrides = Field(default_factory=SolverOverrides)


class BoxPayload(BaseModel):
    lower: list[float]
    upper: list[float]


class ResultPayload(BaseModel):
    method: str
    box: BoxPayload
    trajectory_evals: int
    notes: str = ""


class SkippedPayload(BaseModel):
    method: str
    reason: str


class TimingPayload(BaseModel):
    method: str
    wall_time: float
    breakdown: dict[str, float] = Field(default_factory=dict)


class ReachResponse(BaseModel):
    """Boxes and provenance; wall-clock timings are reported separately so
    the deterministic part of the payload is reproducible byte for byte."""

    schema_version: int = 1
    system: str
    seed: int
    results: list[ResultPayload]
    skipped: list[SkippedPayload]
    timings: list[TimingPayload]


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    document: ProblemDocument
    samples: int = Field(default=1000, ge=1)
    seed: int = 0
    include_cloud: bool = False


class MethodReportPayload(BaseModel):
    method: str
    containment_fraction: float
    worst_slack: float
    width_ratio: list[float]
    sound: bool


class ValidateResponse(BaseModel):
    schema_version: int = 1
    system: str
    seed: int
    samples: int
    reports: list[MethodReportPayload]
    skipped: list[SkippedPayload]
    all_sound: bool
    cloud: Optional[list[list[float]]] = None


class BenchTrafficRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n: int = 3
    tf: float = 30.0
    overrides: SolverOverrides = Field(default_factory=SolverOverrides)


class BenchTrafficResponse(BaseModel):
    document: ProblemDocument
    reach: ReachResponse
