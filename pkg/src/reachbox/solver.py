"""Dispatcher between reachability problems and the method library.

solve() validates the problem, picks the most suitable method from the
declared capabilities (or honors an explicit request after checking its
preconditions), and returns the resulting box with provenance.  solve_all()
runs every applicable method and records a reason for each skipped one.

Automatic selection order for continuous systems: contraction data drives
the growth bound; otherwise available (or derivable) Jacobian bounds drive
continuous-time mixed-monotonicity; otherwise the sampled-data method runs
with sampling/falsification bounds.  Discrete systems use the discrete-time
mixed-monotonicity method or fail.  The monotone method never enters the
automatic order (it is subsumed by mixed-monotonicity); it is reachable
explicitly and through solve_all when the sign check passes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .dynamics import ReachProblem, ReachResult, SystemModel
from .exceptions import (
    CapabilityError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    ReachboxError,
)
from .expressions import jacobian_bounds as derive_jacobian_bounds
from .intervals import Interval
from .methods import (
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

__all__ = ["MethodChoice", "SolverSettings", "solve", "solve_all", "METHOD_ORDER"]


class MethodChoice:
    """Method identifiers accepted by solve()."""

    AUTO = "auto"
    GROWTH_BOUND = "growth_bound"
    CT_MIXED_MONO = "ct_mixed_mono"
    MONOTONE = "monotone"
    SD_MIXED_MONO_IA = "sd_mixed_mono_ia"
    SD_MIXED_MONO_SF = "sd_mixed_mono_sf"
    DT_MIXED_MONO = "dt_mixed_mono"

    ALL = (GROWTH_BOUND, CT_MIXED_MONO, MONOTONE,
           SD_MIXED_MONO_IA, SD_MIXED_MONO_SF, DT_MIXED_MONO)


# solve_all result order follows the method catalogue order; the monotone
# method slots after the mixed-monotonicity result it coincides with
METHOD_ORDER = MethodChoice.ALL


@dataclass
class SolverSettings:
    """Tunable solver parameters with their defaults.

    sf_samples defaults to 100 * (n_x + n_p) when left unset.
    """

    steps: int = 200
    seed: int = 0
    sf_samples: int | None = None
    sf_restarts: int = 5
    dimension_cap: int = 20
    ia_panels: int = 32
    taylor_order: int = 20
    self_check_samples: int = 100


def _derived_jacobian_region(sys: SystemModel, prob: ReachProblem):
    """Region over which expression Jacobian bounds are evaluated.

    The declared invariant space is used when present; otherwise the initial
    box, which is only sound when trajectories stay inside it (the caller's
    obligation, reported in the result notes).
    """
    x_region = sys.invariant_space if sys.invariant_space is not None else prob.x0
    t_hi = prob.tf if prob.tf is not None else prob.t0
    return Interval(prob.t0, t_hi), x_region


def resolve_jacobian_bounds(sys: SystemModel, prob: ReachProblem):
    """Declared Jacobian bounds, or bounds derived from expressions, or None."""
    if sys.jacobian_bounds is not None:
        return sys.jacobian_bounds, "declared Jacobian bounds"
    if sys.spec is not None and sys.spec.has_jacobians:
        t_range, x_region = _derived_jacobian_region(sys, prob)
        jx, jp = derive_jacobian_bounds(sys.spec, t_range, x_region, prob.p)
        region = "invariant space" if sys.invariant_space is not None else "initial box"
        return (jx, jp), f"Jacobian bounds derived from expressions over the {region}"
    return None, "no Jacobian bounds declared or derivable"


def _sensitivity_bounds_ia(sys, prob, settings) -> SensitivityBounds:
    if sys.sensitivity_bounds is not None:
        return sys.sensitivity_bounds
    bounds, note = resolve_jacobian_bounds(sys, prob)
    if bounds is None:
        raise CapabilityError(
            "interval-arithmetic sensitivity bounds need Jacobian bounds; " + note)
    jx, jp = bounds
    return bounds_via_interval_arithmetic(
        sys, prob, jx, jp,
        panels=settings.ia_panels, order=settings.taylor_order,
        steps=settings.steps, self_check_samples=settings.self_check_samples,
        seed=settings.seed, dimension_cap=settings.dimension_cap)


def _sensitivity_bounds_sf(sys, prob, settings) -> SensitivityBounds:
    return bounds_via_sampling_falsification(
        sys, prob,
        samples=settings.sf_samples, restarts=settings.sf_restarts,
        rng_seed=settings.seed, steps=settings.steps,
        dimension_cap=settings.dimension_cap)


def _monotone_signs(sys, prob):
    bounds, note = resolve_jacobian_bounds(sys, prob)
    if bounds is None:
        raise CapabilityError("the monotone method needs Jacobian sign information; " + note)
    jx_signs = sign_matrix(bounds[0])
    jp_signs = sign_matrix(bounds[1])
    signs = check_monotonicity(jx_signs, jp_signs)
    if signs is None:
        raise CapabilityError("system is not monotone (GF(2) sign check failed)")
    return signs, (jx_signs, jp_signs)


def _run(method: str, sys: SystemModel, prob: ReachProblem,
         settings: SolverSettings) -> ReachResult:
    """Run one explicit method, verifying its preconditions."""
    cap_start = time.perf_counter()
    breakdown: dict = {}

    if method == MethodChoice.GROWTH_BOUND:
        if sys.contraction is None:
            raise CapabilityError("growth bound requires contraction data "
                                  "(matrix, scalar, or growth function)")
        result = growth_bound_reach(sys, prob, sys.contraction, settings.steps)

    elif method == MethodChoice.CT_MIXED_MONO:
        bounds, note = resolve_jacobian_bounds(sys, prob)
        if bounds is None:
            raise CapabilityError("continuous-time mixed-monotonicity requires "
                                  "Jacobian bounds; " + note)
        cap_time = time.perf_counter() - cap_start
        result = ct_mixed_mono_reach(sys, prob, bounds[0], bounds[1], settings.steps)
        result.notes = f"{result.notes}; {note}"
        breakdown["capability"] = cap_time

    elif method == MethodChoice.MONOTONE:
        signs, sign_data = _monotone_signs(sys, prob)
        cap_time = time.perf_counter() - cap_start
        result = monotone_reach(sys, prob, signs, settings.steps, sign_data=sign_data)
        breakdown["capability"] = cap_time

    elif method == MethodChoice.SD_MIXED_MONO_IA:
        sb = _sensitivity_bounds_ia(sys, prob, settings)
        cap_time = time.perf_counter() - cap_start
        result = sd_mixed_mono_reach(sys, prob, sb.sx, sb.sp, settings.steps)
        result.notes = f"sensitivity bounds: {sb.provenance} ({sb.notes})"
        breakdown["capability"] = cap_time
        breakdown.update(sb.timings)

    elif method == MethodChoice.SD_MIXED_MONO_SF:
        sb = _sensitivity_bounds_sf(sys, prob, settings)
        cap_time = time.perf_counter() - cap_start
        result = sd_mixed_mono_reach(sys, prob, sb.sx, sb.sp, settings.steps)
        result.notes = f"sensitivity bounds: {sb.provenance} ({sb.notes})"
        breakdown["capability"] = cap_time
        breakdown.update(sb.timings)

    elif method == MethodChoice.DT_MIXED_MONO:
        bounds, note = resolve_jacobian_bounds(sys, prob)
        if bounds is None:
            raise CapabilityError("discrete-time mixed-monotonicity requires "
                                  "Jacobian bounds; " + note)
        cap_time = time.perf_counter() - cap_start
        result = dt_mixed_mono_reach(sys, prob, bounds[0], bounds[1])
        result.notes = note
        breakdown["capability"] = cap_time

    else:
        raise DomainError(f"unknown method {method!r}")

    result.method = method
    breakdown["reach"] = result.wall_time
    result.wall_time = time.perf_counter() - cap_start
    result.breakdown = breakdown
    return result


def _check_kind(method: str, sys: SystemModel):
    continuous_only = method in (MethodChoice.GROWTH_BOUND, MethodChoice.CT_MIXED_MONO,
                                 MethodChoice.MONOTONE, MethodChoice.SD_MIXED_MONO_IA,
                                 MethodChoice.SD_MIXED_MONO_SF)
    if continuous_only and not sys.is_continuous:
        raise CapabilityError(f"{method} applies to continuous systems only")
    if method == MethodChoice.DT_MIXED_MONO and sys.is_continuous:
        raise CapabilityError("dt_mixed_mono applies to discrete systems only")


def _auto_method(sys: SystemModel, prob: ReachProblem) -> str:
    if sys.is_continuous:
        if sys.contraction is not None:
            return MethodChoice.GROWTH_BOUND
        bounds, _ = resolve_jacobian_bounds(sys, prob)
        if bounds is not None:
            return MethodChoice.CT_MIXED_MONO
        if prob.input_mode != "constant":
            raise CapabilityError(
                "no applicable method: without contraction data or Jacobian "
                "bounds only the sampled-data fallback remains, and it "
                "requires constant input mode")
        return MethodChoice.SD_MIXED_MONO_SF
    bounds, note = resolve_jacobian_bounds(sys, prob)
    if bounds is not None:
        return MethodChoice.DT_MIXED_MONO
    raise CapabilityError("no applicable method for this discrete system: " + note)


def solve(sys: SystemModel, prob: ReachProblem, choice: str = MethodChoice.AUTO,
          settings: SolverSettings | None = None) -> ReachResult:
    """Compute a reachable-set over-approximation box.

    choice "auto" picks the first applicable method in the catalogue order;
    an explicit choice fails with a CapabilityError naming the missing
    requirement when its preconditions do not hold.
    """
    settings = settings or SolverSettings()
    prob.check_system(sys)
    if choice == MethodChoice.AUTO:
        choice = _auto_method(sys, prob)
    elif choice not in MethodChoice.ALL:
        raise DomainError(f"unknown method choice {choice!r}")
    _check_kind(choice, sys)
    return _run(choice, sys, prob, settings)


def solve_all(sys: SystemModel, prob: ReachProblem,
              settings: SolverSettings | None = None):
    """Run every method whose preconditions hold.

    Returns (results, skipped) where skipped is a list of (method, reason)
    pairs; every catalogue method appears in exactly one of the two lists.
    Per-method failures are recorded, not raised.
    """
    settings = settings or SolverSettings()
    prob.check_system(sys)
    results: list[ReachResult] = []
    skipped: list[tuple[str, str]] = []
    for method in METHOD_ORDER:
        try:
            _check_kind(method, sys)
            results.append(_run(method, sys, prob, settings))
        except (ReachboxError, ConvergenceError, DivergenceError) as exc:
            skipped.append((method, str(exc)))
    return results, skipped
