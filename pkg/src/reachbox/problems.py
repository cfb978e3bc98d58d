"""Problem documents: the versioned JSON schema and its translation to models.

A document describes one reachability job: the system (a named builtin or
inline vector-field expressions), the problem boxes and time range, optional
capability data, and solver settings.  Documents are validated with pydantic
so schema violations report a path into the offending field.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .dynamics import ContractionData, ReachProblem, SystemModel
from .exceptions import ExprSyntaxError, InputError, ReachboxError
from .expressions import VectorFieldSpec
from .intervals import Box, IntervalMatrix
from .sensitivity import USER_SUPPLIED, SensitivityBounds
from .solver import MethodChoice, SolverSettings
from .traffic import TrafficParams, build_traffic, traffic_problem

__all__ = [
    "ProblemDocument",
    "SCHEMA_VERSION",
    "build_job",
    "parse_document",
    "Job",
]

SCHEMA_VERSION = 1

_METHOD_CHOICES = (MethodChoice.AUTO,) + MethodChoice.ALL


class BoxModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    lower: list[float]
    upper: list[float]


class IntervalMatrixModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    lower: list[list[float]]
    upper: list[list[float]]


class SystemSection(BaseModel):
    """Exactly one of `builtin` or `components` selects the system."""

    model_config = ConfigDict(extra="forbid")
    builtin: Optional[str] = None
    params: dict = Field(default_factory=dict)
    kind: Literal["continuous", "discrete"] = "continuous"
    n_x: Optional[int] = None
    n_p: Optional[int] = None
    components: Optional[list[str]] = None
    jacobian_x: Optional[list[list[str]]] = None
    jacobian_p: Optional[list[list[str]]] = None
    additive_input: bool = False
    invariant_space: Optional[BoxModel] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.builtin is None) == (self.components is None):
            raise ValueError("exactly one of 'builtin' or 'components' must be given")
        if self.components is not None and (self.n_x is None or self.n_p is None):
            raise ValueError("inline systems must declare n_x and n_p")
        return self


class ProblemSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    t0: float = 0.0
    tf: Optional[float] = None
    x0: BoxModel
    p: BoxModel
    input_mode: Literal["constant", "time_varying"] = "constant"


class ContractionModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    matrix: Optional[list[list[float]]] = None
    scalar: Optional[float] = None
    input_influence: Optional[list[float]] = None


class JacobianBoundsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    x: IntervalMatrixModel
    p: IntervalMatrixModel


class SensitivityBoundsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    sx: IntervalMatrixModel
    sp: IntervalMatrixModel


class CapabilitiesSection(BaseModel):
    """Optional system information the methods can exploit.

    jacobian_bounds is either explicit interval matrices, the string
    "derive" (evaluate the system's Jacobian expressions over the problem
    region, the default), or null to forbid Jacobian-based methods.
    """

    model_config = ConfigDict(extra="forbid")
    contraction: Optional[ContractionModel] = None
    jacobian_bounds: Union[JacobianBoundsModel, Literal["derive"], None] = "derive"
    sensitivity_bounds: Optional[SensitivityBoundsModel] = None


class SolverSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    method: str = MethodChoice.AUTO
    steps: int = Field(default=200, ge=1)
    seed: int = 0
    sf_samples: Optional[int] = Field(default=None, ge=1)
    sf_restarts: int = Field(default=5, ge=0)
    dimension_cap: int = Field(default=20, ge=1)
    ia_panels: int = Field(default=32, ge=1)
    taylor_order: int = Field(default=20, ge=1)
    self_check_samples: int = Field(default=100, ge=0)

    @model_validator(mode="after")
    def _known_method(self):
        if self.method not in _METHOD_CHOICES:
            raise ValueError(f"unknown method {self.method!r}; "
                             f"choose from {', '.join(_METHOD_CHOICES)}")
        return self


class ProblemDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    schema_version: int = SCHEMA_VERSION
    system: SystemSection
    problem: Optional[ProblemSection] = None
    capabilities: CapabilitiesSection = Field(default_factory=CapabilitiesSection)
    solver: SolverSection = Field(default_factory=SolverSection)

    @model_validator(mode="after")
    def _version(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}; "
                             f"this build reads version {SCHEMA_VERSION}")
        return self


class Job:
    """A validated document resolved into executable objects."""

    def __init__(self, system: SystemModel, problem: ReachProblem,
                 settings: SolverSettings, method: str, label: str):
        self.system = system
        self.problem = problem
        self.settings = settings
        self.method = method
        self.label = label


def _box(m: BoxModel) -> Box:
    return Box(m.lower, m.upper)


def _interval_matrix(m: IntervalMatrixModel) -> IntervalMatrix:
    return IntervalMatrix(np.array(m.lower), np.array(m.upper))


def _builtin_system(section: SystemSection):
    if section.builtin != "traffic":
        raise InputError(f"unknown builtin system {section.builtin!r}")
    known = set(TrafficParams.__dataclass_fields__)
    bad = set(section.params) - known
    if bad:
        raise InputError(f"unknown traffic parameters: {', '.join(sorted(bad))}")
    params = dict(section.params)
    if "inflow" in params:
        params["inflow"] = tuple(params["inflow"])
    prm = TrafficParams(**params)
    return build_traffic(prm), traffic_problem(prm)


def _inline_system(section: SystemSection) -> SystemModel:
    try:
        spec = VectorFieldSpec.from_strings(
            section.n_x, section.n_p, section.components,
            section.jacobian_x, section.jacobian_p)
    except ExprSyntaxError as exc:
        raise InputError(f"expression error in system definition: {exc}") from exc
    invariant = _box(section.invariant_space) if section.invariant_space else None
    return SystemModel.from_spec(
        section.kind, spec,
        additive_input=section.additive_input,
        invariant_space=invariant,
        name="inline")


def build_job(doc: ProblemDocument) -> Job:
    """Resolve a validated document into a runnable job.

    Raises InputError for semantic problems the schema cannot catch
    (dimension mismatches, unknown builtins, malformed expressions).
    """
    try:
        if doc.system.builtin is not None:
            system, default_problem = _builtin_system(doc.system)
        else:
            system, default_problem = _inline_system(doc.system), None

        caps = doc.capabilities
        if caps.contraction is not None:
            system.contraction = ContractionData(
                matrix=caps.contraction.matrix,
                scalar=caps.contraction.scalar,
                input_influence=caps.contraction.input_influence)
        if caps.jacobian_bounds is None:
            # explicit null forbids Jacobian-based derivation
            system.jacobian_bounds = None
            if system.spec is not None:
                system.spec = VectorFieldSpec(
                    system.spec.n_x, system.spec.n_p, system.spec.components)
        elif isinstance(caps.jacobian_bounds, JacobianBoundsModel):
            system.jacobian_bounds = (
                _interval_matrix(caps.jacobian_bounds.x),
                _interval_matrix(caps.jacobian_bounds.p))
        if caps.sensitivity_bounds is not None:
            system.sensitivity_bounds = SensitivityBounds(
                sx=_interval_matrix(caps.sensitivity_bounds.sx),
                sp=_interval_matrix(caps.sensitivity_bounds.sp),
                provenance=USER_SUPPLIED, guaranteed=True)

        if doc.problem is not None:
            problem = ReachProblem(
                t0=doc.problem.t0, tf=doc.problem.tf,
                x0=_box(doc.problem.x0), p=_box(doc.problem.p),
                input_mode=doc.problem.input_mode)
        elif default_problem is not None:
            problem = default_problem
        else:
            raise InputError("inline systems require a 'problem' section")
        problem.check_system(system)

        s = doc.solver
        settings = SolverSettings(
            steps=s.steps, seed=s.seed, sf_samples=s.sf_samples,
            sf_restarts=s.sf_restarts, dimension_cap=s.dimension_cap,
            ia_panels=s.ia_panels, taylor_order=s.taylor_order,
            self_check_samples=s.self_check_samples)
    except InputError:
        raise
    except (ReachboxError, ValueError, TypeError) as exc:
        raise InputError(str(exc)) from exc
    return Job(system, problem, settings, doc.solver.method, system.name)


def parse_document(payload: dict) -> ProblemDocument:
    """Validate a raw JSON payload; InputError carries the field paths."""
    try:
        return ProblemDocument.model_validate(payload)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            path = ".".join(str(part) for part in err["loc"]) or "<root>"
            lines.append(f"{path}: {err['msg']}")
        raise InputError("invalid problem document: " + "; ".join(lines)) from exc
