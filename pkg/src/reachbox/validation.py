"""Monte-Carlo validation of computed over-approximations.

Draws random initial states and inputs (plus piecewise-constant input
signals when the problem admits time-varying inputs), integrates them, and
reports how the successor cloud sits inside each method's box.  A sound
method with sound capability data must contain the whole cloud; a detected
violation flags the capability data as unsound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ReachProblem, ReachResult, StepSignal, SystemModel, flow, step_map

__all__ = ["MethodReport", "sample_cloud", "containment_report", "SOUNDNESS_TOL"]

# slack below this is counted as a genuine containment violation rather
# than floating-point noise
SOUNDNESS_TOL = 1e-9


@dataclass(frozen=True)
class MethodReport:
    """Containment summary of one method's box against the sampled cloud."""

    method: str
    containment_fraction: float
    worst_slack: float
    width_ratio: tuple
    sound: bool


def sample_cloud(sys: SystemModel, prob: ReachProblem, samples: int, seed: int,
                 steps: int = 200) -> np.ndarray:
    """Successor states of `samples` random (x0, p) draws, shape (n_x, samples).

    Constant inputs are drawn uniformly from the input box; when the problem
    declares time-varying inputs, each sample gets an independent
    piecewise-constant signal on the integration grid.
    """
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(prob.x0.lower, prob.x0.upper, (samples, sys.n_x)).T
    if not sys.is_continuous:
        p = rng.uniform(prob.p.lower, prob.p.upper, (samples, sys.n_p)).T
        return step_map(sys, prob.t0, x0, p)
    if prob.input_mode == "time_varying":
        draws = rng.uniform(prob.p.lower, prob.p.upper, (steps, samples, sys.n_p))
        p = StepSignal(np.swapaxes(draws, 1, 2))
    else:
        p = rng.uniform(prob.p.lower, prob.p.upper, (samples, sys.n_p)).T
    return flow(sys, prob.t0, prob.tf, x0, p, steps)


def containment_report(cloud: np.ndarray, results: list[ReachResult],
                       tol: float = SOUNDNESS_TOL) -> list[MethodReport]:
    """Per-method containment fraction, worst face slack, and width ratios.

    worst_slack is the smallest signed distance of any sample to any box
    face (negative means a sample escaped); width_ratio compares the cloud
    hull width to the box width per dimension (1.0 means the box is tight
    in that dimension).
    """
    hull_lo = cloud.min(axis=1)
    hull_hi = cloud.max(axis=1)
    reports = []
    for r in results:
        lo = r.over_approx.lower[:, None]
        hi = r.over_approx.upper[:, None]
        slack = min(float(np.min(cloud - lo)), float(np.min(hi - cloud)))
        inside = np.all((cloud >= lo - tol) & (cloud <= hi + tol), axis=0)
        width = r.over_approx.width
        hull_width = hull_hi - hull_lo
        ratio = np.where(width > 0.0, hull_width / np.maximum(width, 1e-300),
                         np.where(hull_width > 0.0, np.inf, 1.0))
        reports.append(MethodReport(
            method=r.method,
            containment_fraction=float(np.mean(inside)),
            worst_slack=slack,
            width_ratio=tuple(float(v) for v in ratio),
            sound=slack >= -tol,
        ))
    return reports
