"""System models, reachability problems, trajectory and sensitivity integration.

Continuous-time flows are evaluated with classical fixed-step RK4; the
integration error is neglected (reported results are floating-point, not
rigorously rounded).  Sensitivity matrices come from the variational
equations integrated on the same grid.  Everything here is pure and safe for
concurrent use; batched variants evaluate many initial conditions at once by
stacking them on a trailing axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import CapabilityError, DimensionError, DivergenceError, DomainError
from .expressions import VectorFieldSpec
from .intervals import Box, IntervalMatrix

__all__ = [
    "ContractionData",
    "SystemModel",
    "ReachProblem",
    "ReachResult",
    "StepSignal",
    "flow",
    "sensitivities",
    "step_map",
    "integrate_rk4",
]

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class ContractionData:
    """Contraction/growth information for the growth-bound method.

    Exactly one of matrix, scalar or growth_fn is set:
      - matrix: componentwise contraction matrix (off-diagonal entries
        bound absolute Jacobian values, so they must be >= 0);
      - scalar: upper bound on the logarithmic norm of the state Jacobian;
      - growth_fn: user growth function G(tau, dx, dp) -> nonneg vector,
        monotone in dx and dp (accepted on trust, not verified).
    input_influence optionally bounds |f(t,x,p) - f(t,x,p*)| componentwise
    for systems without additive input.
    """

    matrix: np.ndarray | None = None
    scalar: float | None = None
    growth_fn: object | None = None
    input_influence: np.ndarray | None = None

    def __post_init__(self):
        variants = sum(v is not None for v in (self.matrix, self.scalar, self.growth_fn))
        if variants != 1:
            raise DomainError("exactly one of matrix, scalar, growth_fn must be set")
        if self.matrix is not None:
            m = np.array(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionError("contraction matrix must be square")
            off = m - np.diag(np.diag(m))
            if np.any(off < 0.0):
                raise DomainError("contraction matrix off-diagonal entries must be >= 0")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        if self.input_influence is not None:
            v = np.array(self.input_influence, dtype=float)
            if np.any(v < 0.0):
                raise DomainError("input influence vector must be componentwise >= 0")
            v.setflags(write=False)
            object.__setattr__(self, "input_influence", v)

    @property
    def variant(self) -> str:
        if self.matrix is not None:
            return "matrix"
        if self.scalar is not None:
            return "scalar"
        return "custom"


@dataclass
class SystemModel:
    """A continuous- or discrete-time system with optional capability data.

    field evaluates the vector field f(t, x, p) (continuous) or the map
    F(t, x, p) (discrete).  When vectorized is True the callable must accept
    x of shape (n_x, B) with p of shape (n_p, B) or (n_p, 1) and broadcast;
    otherwise batched evaluations fall back to a column loop.

    Capability data (contraction, Jacobian bounds, sensitivity bounds) is
    trusted as given; its validity over the relevant region, including the
    invariant space staying invariant, is the caller's obligation.
    """

    kind: str
    n_x: int
    n_p: int
    field: object
    vectorized: bool = False
    spec: VectorFieldSpec | None = None
    jac_x: object | None = None
    jac_p: object | None = None
    jacobian_bounds: tuple | None = None
    contraction: ContractionData | None = None
    sensitivity_bounds: object | None = None
    additive_input: bool = False
    invariant_space: Box | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise DomainError(f"unknown system kind {self.kind!r}")
        if self.n_x < 1 or self.n_p < 1:
            raise DimensionError("n_x and n_p must be >= 1")
        if self.additive_input and (self.kind != CONTINUOUS or self.n_p != self.n_x):
            raise DomainError("additive input requires a continuous system with n_p == n_x")
        if self.jacobian_bounds is not None:
            jx, jp = self.jacobian_bounds
            if jx.shape != (self.n_x, self.n_x) or jp.shape != (self.n_x, self.n_p):
                raise DimensionError("declared Jacobian bounds have wrong shapes")

    @classmethod
    def from_spec(cls, kind: str, spec: VectorFieldSpec, **kwargs) -> "SystemModel":
        """Build a model whose field and Jacobians come from expressions."""
        return cls(
            kind=kind,
            n_x=spec.n_x,
            n_p=spec.n_p,
            field=spec.field_fn(),
            vectorized=True,
            spec=spec,
            jac_x=spec.jac_x_fn(),
            jac_p=spec.jac_p_fn(),
            **kwargs,
        )

    @property
    def is_continuous(self) -> bool:
        return self.kind == CONTINUOUS

    def has_jacobian_evaluators(self) -> bool:
        return self.jac_x is not None and self.jac_p is not None


@dataclass(frozen=True)
class ReachProblem:
    """Terminal-time reachability query: initial box, input box, time range.

    tf is present exactly for continuous-time problems.  input_mode
    "constant" restricts admissible inputs to constant vectors in the input
    box; "time_varying" admits measurable signals into the box and rules out
    the sampled-data method.
    """

    t0: float
    tf: float | None
    x0: Box
    p: Box
    input_mode: str = "constant"

    def __post_init__(self):
        if self.tf is not None and not self.tf > self.t0:
            raise DomainError(f"tf={self.tf} must exceed t0={self.t0}")
        if self.input_mode not in ("constant", "time_varying"):
            raise DomainError(f"unknown input mode {self.input_mode!r}")

    def check_system(self, sys: SystemModel):
        if sys.is_continuous and self.tf is None:
            raise DomainError("continuous-time problem requires tf")
        if not sys.is_continuous and self.tf is not None:
            raise DomainError("discrete-time problem must not set tf")
        if self.x0.dim != sys.n_x:
            raise DimensionError(f"x0 has dimension {self.x0.dim}, system has n_x={sys.n_x}")
        if self.p.dim != sys.n_p:
            raise DimensionError(f"p has dimension {self.p.dim}, system has n_p={sys.n_p}")


@dataclass
class ReachResult:
    """Over-approximation box plus provenance of how it was computed."""

    over_approx: Box
    method: str
    trajectory_evals: int
    wall_time: float
    notes: str = ""
    breakdown: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StepSignal:
    """Piecewise-constant input signal sampled on the integration grid.

    values has shape (steps, n_p) or (steps, n_p, B) for batched runs.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _batched_field(sys: SystemModel):
    """Field callable accepting (n_x, B) states; loops when not vectorized."""
    if sys.vectorized:
        return sys.field

    def fn(t, x, p):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.asarray(sys.field(t, x, p), dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.empty_like(x)
        for b in range(x.shape[1]):
            pb = p[:, b] if p.ndim > 1 and p.shape[1] > 1 else np.ravel(p)
            out[:, b] = sys.field(t, x[:, b], pb)
        return out

    return fn


def _input_at(p, steps: int, n_p: int):
    """Return a lookup step -> input value for constant or signal inputs."""
    if isinstance(p, StepSignal):
        vals = p.values
        if vals.shape[0] != steps or vals.shape[1] != n_p:
            raise DimensionError(
                f"signal has shape {vals.shape}, expected ({steps}, {n_p}, ...)")
        return lambda k: vals[k]
    arr = np.asarray(p, dtype=float)
    if arr.shape[0] != n_p:
        raise DimensionError(f"input vector has length {arr.shape[0]}, expected {n_p}")
    return lambda k: arr


def flow(sys: SystemModel, t0: float, tf: float, x0, p, steps: int = 200,
         check_finite: bool = True):
    """RK4 successor state Phi(tf; t0, x0, p) of a continuous system.

    x0 may be a single state (n_x,) or a batch (n_x, B); p is a constant
    vector, a batched constant (n_p, B) or (n_p, 1), or a StepSignal.
    Raises DivergenceError with the failure time if the state leaves the
    finite floats; with check_finite=False divergent batch columns are
    instead left as non-finite values for the caller to filter.
    """
    if not sys.is_continuous:
        raise CapabilityError("flow is defined for continuous systems")
    if tf < t0:
        raise DomainError("flow requires tf >= t0")
    x = np.array(x0, dtype=float)
    if x.shape[0] != sys.n_x:
        raise DimensionError(f"x0 has dimension {x.shape[0]}, expected {sys.n_x}")
    if tf == t0:
        return x
    if steps < 1:
        raise DomainError("steps must be >= 1")
    f = _batched_field(sys)
    p_at = _input_at(p, steps, sys.n_p)
    h = (tf - t0) / steps
    with np.errstate(all="ignore"):
        for k in range(steps):
            t = t0 + k * h
            pk = p_at(k)
            k1 = f(t, x, pk)
            k2 = f(t + 0.5 * h, x + (0.5 * h) * k1, pk)
            k3 = f(t + 0.5 * h, x + (0.5 * h) * k2, pk)
            k4 = f(t + h, x + h * k3, pk)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if check_finite and not np.all(np.isfinite(x)):
                raise DivergenceError(f"trajectory diverged at t={t + h:.6g}", time=t + h)
    return x


def integrate_rk4(rhs, t0: float, tf: float, y0, steps: int):
    """Fixed-step RK4 for an arbitrary right-hand side rhs(t, y) -> dy."""
    y = np.array(y0, dtype=float)
    if tf == t0:
        return y
    if tf < t0:
        raise DomainError("integration requires tf >= t0")
    h = (tf - t0) / steps
    for k in range(steps):
        t = t0 + k * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"trajectory diverged at t={t + h:.6g}", time=t + h)
    return y


def _jac_evaluators(sys: SystemModel):
    if not sys.has_jacobian_evaluators():
        raise CapabilityError(
            "sensitivity integration needs Jacobian evaluators "
            "(expression matrices or callbacks)")
    return sys.jac_x, sys.jac_p


def _batched_matrix_eval(fn, rows, cols, vectorized):
    """Matrix evaluator accepting batched states when the base one cannot."""
    if vectorized:
        return fn

    def wrapped(t, x, p):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.asarray(fn(t, x, p), dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.empty((rows, cols, x.shape[1]))
        for b in range(x.shape[1]):
            pb = p[:, b] if p.ndim > 1 and p.shape[1] > 1 else np.ravel(p)
            out[:, :, b] = fn(t, x[:, b], pb)
        return out

    return wrapped


def sensitivities(sys: SystemModel, t0: float, tf: float, x0, p, steps: int = 200,
                  check_finite: bool = True):
    """Sensitivity matrices (S_x, S_p) of the flow map at (x0, p).

    Integrates the variational equations dS_x = J_x S_x, dS_p = J_x S_p + J_p
    coupled with the state on the same RK4 grid, from S_x = I and S_p = 0.
    Constant input only.  Batched when x0 has shape (n_x, B); then the
    returned matrices have a trailing batch axis.
    """
    if not sys.is_continuous:
        raise CapabilityError("sensitivities are defined for continuous systems")
    jac_x_fn, jac_p_fn = _jac_evaluators(sys)
    n, m = sys.n_x, sys.n_p
    jac_x_fn = _batched_matrix_eval(jac_x_fn, n, n, sys.vectorized)
    jac_p_fn = _batched_matrix_eval(jac_p_fn, n, m, sys.vectorized)
    f = _batched_field(sys)

    x = np.array(x0, dtype=float)
    batch = x.shape[1:]
    sx = np.zeros((n, n) + batch)
    sx[np.arange(n), np.arange(n)] = 1.0
    sp = np.zeros((n, m) + batch)
    if tf == t0:
        return sx, sp
    if tf < t0:
        raise DomainError("sensitivities require tf >= t0")

    p_arr = np.asarray(p, dtype=float)

    def rhs(t, state):
        xs, sxs, sps = state
        fx = f(t, xs, p_arr)
        jx = jac_x_fn(t, xs, p_arr)
        jp = jac_p_fn(t, xs, p_arr)
        dsx = np.einsum("ij...,jk...->ik...", jx, sxs)
        dsp = np.einsum("ij...,jk...->ik...", jx, sps) + jp
        return fx, dsx, dsp

    h = (tf - t0) / steps
    state = (x, sx, sp)
    with np.errstate(all="ignore"):
        for k in range(steps):
            t = t0 + k * h
            k1 = rhs(t, state)
            k2 = rhs(t + 0.5 * h, _axpy(state, k1, 0.5 * h))
            k3 = rhs(t + 0.5 * h, _axpy(state, k2, 0.5 * h))
            k4 = rhs(t + h, _axpy(state, k3, h))
            state = tuple(
                s + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
                for s, a, b, c, d in zip(state, k1, k2, k3, k4))
            if check_finite and not np.all(np.isfinite(state[0])):
                raise DivergenceError(f"trajectory diverged at t={t + h:.6g}", time=t + h)
    return state[1], state[2]


def _axpy(state, deriv, a):
    return tuple(s + a * d for s, d in zip(state, deriv))


def step_map(sys: SystemModel, t0: float, x, p):
    """Single evaluation of the discrete map F(t0, x, p)."""
    if sys.is_continuous:
        raise CapabilityError("step_map is defined for discrete systems")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != sys.n_x:
        raise DimensionError(f"x has dimension {x.shape[0]}, expected {sys.n_x}")
    f = _batched_field(sys)
    out = np.asarray(f(t0, x, np.asarray(p, dtype=float)), dtype=float)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"map produced non-finite output at t={t0}", time=t0)
    return out
