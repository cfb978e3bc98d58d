"""reachbox: guaranteed interval over-approximations of reachable sets.

Library layers: interval arithmetic (`intervals`), expression parsing and
interval evaluation (`expressions`), system models and integration
(`dynamics`), the reachability methods (`methods`), sensitivity bounds
(`sensitivity`), and the dispatching solver (`solver`).  The HTTP service
lives under `reachbox.service`; the command line is a thin client of it.
"""

__version__ = "0.1.0"

from .dynamics import (
    ContractionData,
    ReachProblem,
    ReachResult,
    StepSignal,
    SystemModel,
    flow,
    sensitivities,
    step_map,
)
from .exceptions import (
    CapabilityError,
    ConvergenceError,
    DimensionError,
    DivergenceError,
    DomainError,
    ExprSyntaxError,
    InputError,
    ReachboxError,
    SoundnessError,
    SoundnessWarning,
)
from .expressions import VectorFieldSpec, eval_interval, eval_real, jacobian_bounds, parse
from .intervals import (
    Box,
    Interval,
    IntervalMatrix,
    box_center_halfwidth,
    contains,
    hull,
    intersect,
    interval_expm,
    interval_mat_add,
    interval_mat_mul,
)
from .methods import (
    MonotoneSigns,
    check_monotonicity,
    ct_mixed_mono_reach,
    dt_mixed_mono_reach,
    growth_bound_reach,
    monotone_reach,
    sd_mixed_mono_reach,
    sign_matrix,
)
from .sensitivity import (
    SensitivityBounds,
    bounds_via_interval_arithmetic,
    bounds_via_sampling_falsification,
)
from .solver import MethodChoice, SolverSettings, solve, solve_all
from .traffic import TrafficParams, build_traffic, traffic_problem
from .validation import MethodReport, containment_report, sample_cloud

__all__ = [
    "__version__",
    "Box", "Interval", "IntervalMatrix",
    "box_center_halfwidth", "hull", "intersect", "contains",
    "interval_mat_add", "interval_mat_mul", "interval_expm",
    "VectorFieldSpec", "parse", "eval_real", "eval_interval", "jacobian_bounds",
    "SystemModel", "ReachProblem", "ReachResult", "ContractionData", "StepSignal",
    "flow", "sensitivities", "step_map",
    "MonotoneSigns", "check_monotonicity", "sign_matrix",
    "growth_bound_reach", "ct_mixed_mono_reach", "monotone_reach",
    "sd_mixed_mono_reach", "dt_mixed_mono_reach",
    "SensitivityBounds", "bounds_via_interval_arithmetic",
    "bounds_via_sampling_falsification",
    "MethodChoice", "SolverSettings", "solve", "solve_all",
    "TrafficParams", "build_traffic", "traffic_problem",
    "MethodReport", "sample_cloud", "containment_report",
    "ReachboxError", "DimensionError", "DomainError", "ExprSyntaxError",
    "ConvergenceError", "DivergenceError", "CapabilityError", "SoundnessError",
    "InputError", "SoundnessWarning",
]
