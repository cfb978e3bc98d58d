"""Sensitivity bounds for the sampled-data mixed-monotonicity method.

Two routes produce entrywise bounds on the sensitivity matrices over the
initial-state and input boxes:

  - interval arithmetic over global Jacobian bounds, via the Taylor series
    of an interval matrix exponential (guaranteed, often conservative);
  - sampling plus falsification, which takes the entrywise hull of sampled
    sensitivity matrices and then tries to push each bound outward with
    derivative-free local searches (much tighter, but without guarantees).
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .dynamics import ReachProblem, SystemModel, sensitivities
from .exceptions import (
    CapabilityError,
    DivergenceError,
    DomainError,
    SoundnessWarning,
)
from .intervals import IntervalMatrix, interval_expm, interval_mat_mul

__all__ = [
    "SensitivityBounds",
    "bounds_via_interval_arithmetic",
    "bounds_via_sampling_falsification",
]

USER_SUPPLIED = "user_supplied"
INTERVAL_ARITHMETIC = "interval_arithmetic"
SAMPLING_FALSIFICATION = "sampling_falsification"

# pattern-search parameters: initial radius is a quarter of the box width,
# halved on failure until below the relative floor
_RADIUS_START = 0.25
_RADIUS_FLOOR = 1e-6
_MAX_SEARCH_ITERS = 500


@dataclass(frozen=True)
class SensitivityBounds:
    """Entrywise bounds on S_x and S_p with their provenance.

    guaranteed is True only for user-supplied and interval-arithmetic
    bounds; the sampling route cannot certify the enclosure.
    """

    sx: IntervalMatrix
    sp: IntervalMatrix
    provenance: str
    guaranteed: bool
    notes: str = ""
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in (USER_SUPPLIED, INTERVAL_ARITHMETIC, SAMPLING_FALSIFICATION):
            raise DomainError(f"unknown provenance {self.provenance!r}")
        if self.guaranteed and self.provenance == SAMPLING_FALSIFICATION:
            raise DomainError("sampling/falsification bounds cannot be guaranteed")


# ---------------------------------------------------------------------------
# Interval arithmetic route
# ---------------------------------------------------------------------------

def _interval_exp_integral(jx: IntervalMatrix, tau: float, panels: int,
                           order: int) -> IntervalMatrix:
    """Enclosure of the integral of e^{J t} over [0, tau].

    Node enclosures at the Simpson grid are chained from one sub-step
    enclosure; each panel contributes its width times the hull of its three
    node enclosures.
    """
    n = jx.shape[0]
    h_node = tau / (2 * panels)
    e_node = interval_expm(jx, h_node, order)
    node = IntervalMatrix.identity(n)
    nodes = [node]
    for _ in range(2 * panels):
        node = interval_mat_mul(node, e_node)
        nodes.append(node)
    h = tau / panels
    total_lo = np.zeros((n, n))
    total_hi = np.zeros((n, n))
    for k in range(panels):
        trio = nodes[2 * k: 2 * k + 3]
        total_lo += h * np.minimum.reduce([m.lower for m in trio])
        total_hi += h * np.maximum.reduce([m.upper for m in trio])
    return IntervalMatrix(total_lo, total_hi)


def bounds_via_interval_arithmetic(sys: SystemModel, prob: ReachProblem,
                                   jx: IntervalMatrix, jp: IntervalMatrix,
                                   panels: int = 32, order: int = 20,
                                   steps: int = 200,
                                   self_check_samples: int = 100,
                                   seed: int = 0,
                                   dimension_cap: int = 20) -> SensitivityBounds:
    """Guaranteed sensitivity bounds from global Jacobian bounds.

    S_x is enclosed by the interval Taylor exponential of jx over the time
    range (this also covers time-varying Jacobians along trajectories), and
    S_p by the integral enclosure of e^{J t} multiplied by jp.

    A sampling self-check verifies that randomly sampled sensitivities fall
    inside the result and warns otherwise; it is skipped above the dimension
    cap, where its cost would dwarf the bound computation itself.
    """
    if not sys.is_continuous:
        raise CapabilityError("sensitivity bounds apply to continuous systems")
    prob.check_system(sys)
    if not (jx.is_finite() and jp.is_finite()):
        raise CapabilityError("interval-arithmetic bounds need finite Jacobian bounds")
    tau = prob.tf - prob.t0

    started = time.perf_counter()
    sx = interval_expm(jx, tau, order)
    integral = _interval_exp_integral(jx, tau, panels, order)
    sp = interval_mat_mul(integral, jp)
    t_expm = time.perf_counter() - started

    notes = f"Taylor order {order}, {panels} quadrature panels"
    t_check = 0.0
    if self_check_samples > 0 and sys.n_x <= dimension_cap and sys.has_jacobian_evaluators():
        check_start = time.perf_counter()
        points = _sample_box(prob, self_check_samples, seed)
        sxs, sps = sensitivities(sys, prob.t0, prob.tf, points[: sys.n_x],
                                 points[sys.n_x:], steps, check_finite=False)
        ok = _finite_mask(sxs, sps)
        tol = 1e-9
        bad = 0
        for b in np.nonzero(ok)[0]:
            if not (sx.contains_matrix(sxs[:, :, b], tol) and sp.contains_matrix(sps[:, :, b], tol)):
                bad += 1
        t_check = time.perf_counter() - check_start
        if bad:
            warnings.warn(
                f"interval-arithmetic sensitivity bounds exclude {bad}/{int(ok.sum())} "
                "sampled sensitivity matrices; the supplied Jacobian bounds are "
                "likely unsound for this problem", SoundnessWarning, stacklevel=2)
        notes += f", self-check on {int(ok.sum())} samples"
    else:
        notes += ", self-check skipped"

    return SensitivityBounds(
        sx=sx, sp=sp, provenance=INTERVAL_ARITHMETIC, guaranteed=True, notes=notes,
        timings={"interval_expm": t_expm, "self_check": t_check})


# ---------------------------------------------------------------------------
# Sampling + falsification route
# ---------------------------------------------------------------------------

def _sample_box(prob: ReachProblem, count: int, seed: int) -> np.ndarray:
    """Low-discrepancy (x0, p) samples stacked as rows of length n_x + n_p."""
    low = np.concatenate([prob.x0.lower, prob.p.lower])
    width = np.concatenate([prob.x0.width, prob.p.width])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sobol = qmc.Sobol(d=low.size, scramble=True, seed=seed)
        unit = sobol.random(count)
    return (low[None, :] + unit * width[None, :]).T  # (d, count)


def _finite_mask(sxs: np.ndarray, sps: np.ndarray) -> np.ndarray:
    return np.isfinite(sxs).all(axis=(0, 1)) & np.isfinite(sps).all(axis=(0, 1))


class _Envelope:
    """Entrywise min/max of all sensitivity matrices seen so far."""

    def __init__(self, n_x, n_p):
        self.min_sx = np.full((n_x, n_x), np.inf)
        self.max_sx = np.full((n_x, n_x), -np.inf)
        self.min_sp = np.full((n_x, n_p), np.inf)
        self.max_sp = np.full((n_x, n_p), -np.inf)

    def update(self, sxs, sps, ok):
        if not np.any(ok):
            return
        self.min_sx = np.minimum(self.min_sx, sxs[:, :, ok].min(axis=2))
        self.max_sx = np.maximum(self.max_sx, sxs[:, :, ok].max(axis=2))
        self.min_sp = np.minimum(self.min_sp, sps[:, :, ok].min(axis=2))
        self.max_sp = np.maximum(self.max_sp, sps[:, :, ok].max(axis=2))

    def bound(self, mat, i, j, direction):
        source = {("sx", 1): self.max_sx, ("sx", -1): self.min_sx,
                  ("sp", 1): self.max_sp, ("sp", -1): self.min_sp}[(mat, direction)]
        return source[i, j]


class _SearchTask:
    """Pattern search hunting for a violation of one bound direction.

    Runs sequential searches from random starts; the consecutive-clean
    counter resets whenever this bound moved during a search (no matter
    which evaluation moved it).
    """

    def __init__(self, mat, i, j, direction, rng, low, width, restarts):
        self.mat = mat
        self.i = i
        self.j = j
        self.direction = direction
        self.rng = rng
        self.low = low
        self.width = width
        self.active_dims = np.nonzero(width > 0.0)[0]
        self.restarts = restarts
        self.clean = 0
        self.done = restarts <= 0
        self.center = None
        self.center_val = None
        self.radius = None
        self.iters = 0
        self.bound_at_start = None
        self.pending = None  # "center" or "probes"

    def request_points(self, envelope):
        """Points to evaluate this round; starts a new search if idle."""
        if self.done:
            return []
        if self.center is None:
            self.center = self.low + self.rng.uniform(size=self.low.size) * self.width
            self.radius = _RADIUS_START * self.width
            self.iters = 0
            self.bound_at_start = envelope.bound(self.mat, self.i, self.j, self.direction)
            self.pending = "center"
            return [self.center]
        self.pending = "probes"
        pts = []
        for d in self.active_dims:
            for sign in (1.0, -1.0):
                probe = self.center.copy()
                probe[d] += sign * self.radius[d]
                pts.append(np.clip(probe, self.low, self.low + self.width))
        return pts

    def consume(self, values, envelope):
        """Digest objective values of the requested points."""
        if self.pending == "center":
            self.center_val = values[0]
            if np.isnan(values[0]) or self.active_dims.size == 0:
                self._end_search(envelope)  # diverged start or nothing to vary
            return
        improved = None
        best = self.center_val
        for v in values:
            if np.isnan(v):
                continue
            if self.direction * (v - best) > 0.0:
                best = v
                improved = v
        if improved is not None:
            # re-center on the best probe (same construction as request_points)
            idx = values.index(improved)
            probe = self.center.copy()
            d = self.active_dims[idx // 2]
            sign = 1.0 if idx % 2 == 0 else -1.0
            probe[d] += sign * self.radius[d]
            self.center = np.clip(probe, self.low, self.low + self.width)
            self.center_val = improved
        else:
            self.radius = 0.5 * self.radius
        self.iters += 1
        converged = np.all(self.radius[self.active_dims]
                           < _RADIUS_FLOOR * self.width[self.active_dims]) \
            if self.active_dims.size else True
        if converged or self.iters >= _MAX_SEARCH_ITERS:
            self._end_search(envelope)

    def _end_search(self, envelope):
        now = envelope.bound(self.mat, self.i, self.j, self.direction)
        if now != self.bound_at_start:
            self.clean = 0
        else:
            self.clean += 1
        self.center = None
        if self.clean >= self.restarts:
            self.done = True


def bounds_via_sampling_falsification(sys: SystemModel, prob: ReachProblem,
                                      samples: int | None = None,
                                      restarts: int = 5,
                                      rng_seed: int = 0,
                                      steps: int = 200,
                                      dimension_cap: int = 20) -> SensitivityBounds:
    """Empirical sensitivity bounds: sampled hull plus falsification searches.

    Phase 1 evaluates the sensitivity matrices on a low-discrepancy sample of
    (x0, p) pairs and takes the entrywise hull.  Phase 2 runs a pattern
    search per matrix entry and bound direction from `restarts` random
    starts; every evaluation anywhere updates every bound, and an entry's
    restart counter resets whenever its bound moves.  Deterministic for a
    fixed rng_seed.  Refused above the dimension cap since the sample count
    needed for a decent hull grows exponentially with dimension.
    """
    if not sys.is_continuous:
        raise CapabilityError("sensitivity bounds apply to continuous systems")
    if prob.input_mode != "constant":
        raise CapabilityError("sampling/falsification requires constant input mode")
    prob.check_system(sys)
    if not sys.has_jacobian_evaluators():
        raise CapabilityError("sampling/falsification needs Jacobian evaluators")
    if sys.n_x > dimension_cap:
        raise CapabilityError(
            f"sampling/falsification refused: n_x = {sys.n_x} exceeds the dimension "
            f"cap {dimension_cap}; the number of samples required grows "
            "exponentially with the state dimension")

    n, m = sys.n_x, sys.n_p
    if samples is None:
        samples = 100 * (n + m)
    if samples < 1:
        raise DomainError("samples must be >= 1")

    started = time.perf_counter()

    def evaluate(points):
        """Batched sensitivity evaluation; returns (sxs, sps, ok mask)."""
        sxs, sps = sensitivities(sys, prob.t0, prob.tf, points[:n], points[n:],
                                 steps, check_finite=False)
        return sxs, sps, _finite_mask(sxs, sps)

    # phase 1: low-discrepancy hull
    pts = _sample_box(prob, samples, rng_seed)
    sxs, sps, ok = evaluate(pts)
    good = int(ok.sum())
    if good < samples:
        if good * 2 < samples:
            raise DivergenceError(
                f"{samples - good} of {samples} sampled trajectories diverged")
        warnings.warn(f"skipped {samples - good} divergent samples during "
                      "sensitivity sampling", stacklevel=2)
    env = _Envelope(n, m)
    env.update(sxs, sps, ok)

    # phase 2: falsification by concurrent pattern searches
    falsifications = 0
    if restarts > 0:
        low = np.concatenate([prob.x0.lower, prob.p.lower])
        width = np.concatenate([prob.x0.width, prob.p.width])
        entries = [("sx", i, j) for i in range(n) for j in range(n)]
        entries += [("sp", i, k) for i in range(n) for k in range(m)]
        seeds = np.random.SeedSequence(rng_seed).spawn(2 * len(entries))
        tasks = []
        for e_idx, (mat, i, j) in enumerate(entries):
            for d_idx, direction in enumerate((1, -1)):
                rng = np.random.default_rng(seeds[2 * e_idx + d_idx])
                tasks.append(_SearchTask(mat, i, j, direction, rng, low, width, restarts))

        while any(not t.done for t in tasks):
            requests = [(t, t.request_points(env)) for t in tasks if not t.done]
            flat = [p for _, pts_t in requests for p in pts_t]
            if not flat:
                break
            batch = np.column_stack(flat)
            sxs, sps, ok = evaluate(batch)
            before_max = env.max_sx.copy(), env.max_sp.copy()
            before_min = env.min_sx.copy(), env.min_sp.copy()
            env.update(sxs, sps, ok)
            falsifications += int(np.sum(env.max_sx > before_max[0])
                                  + np.sum(env.max_sp > before_max[1])
                                  + np.sum(env.min_sx < before_min[0])
                                  + np.sum(env.min_sp < before_min[1]))
            cursor = 0
            for t, pts_t in requests:
                vals = []
                for b in range(cursor, cursor + len(pts_t)):
                    if not ok[b]:
                        vals.append(float("nan"))
                    elif t.mat == "sx":
                        vals.append(float(sxs[t.i, t.j, b]))
                    else:
                        vals.append(float(sps[t.i, t.j, b]))
                cursor += len(pts_t)
                t.consume(vals, env)

    sx = IntervalMatrix(env.min_sx, env.max_sx)
    sp = IntervalMatrix(env.min_sp, env.max_sp)
    return SensitivityBounds(
        sx=sx, sp=sp, provenance=SAMPLING_FALSIFICATION, guaranteed=False,
        notes=f"{samples} samples, {restarts} restarts, "
              f"{falsifications} falsification updates",
        timings={"sampling_falsification": time.perf_counter() - started})
