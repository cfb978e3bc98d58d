"""Built-in benchmark: vehicle-density model of a diverging traffic network.

Link 1 feeds links 2 and 3 evenly; traffic then flows down two chains
(2 -> 4 -> 6 -> ... and 3 -> 5 -> 7 -> ...), so the link count is odd.  Flows
between links saturate via min terms (free flow, capacity, downstream
congestion), which makes the vector field piecewise affine and nonsmooth.

The Jacobian entries are supplied as clipped switching expressions: each min
term contributes its slope scaled by a steep 0/1 ramp of the margin between
that term and the smallest competing term.  Pointwise these agree with the
true derivative almost everywhere; over a box their natural interval
extension spans exactly the slopes the min can realize, which is what the
bound-based methods need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ContractionData, ReachProblem, SystemModel
from .exceptions import DomainError
from .expressions import VectorFieldSpec, jacobian_bounds
from .intervals import Box, Interval
from .methods import contraction_matrix_from_bounds

__all__ = ["TrafficParams", "build_traffic", "traffic_problem", "default_initial_box"]


@dataclass(frozen=True)
class TrafficParams:
    """Network size and flow parameters (defaults from the benchmark model)."""

    n_x: int = 3
    time_constant: float = 30.0   # T, seconds
    capacity: float = 40.0        # c, max flow between links
    free_speed: float = 0.5       # v, free-flow rate
    jam_density: float = 320.0    # densities above this block inflow
    congestion_rate: float = 1.0 / 6.0   # w
    split_ratio: float = 0.75     # beta, fraction continuing down a chain
    inflow: tuple = (4.0 / 3.0, 2.0)     # uncertain constant inflow to link 1

    def __post_init__(self):
        if self.n_x < 3 or self.n_x % 2 == 0:
            raise DomainError(
                f"traffic network needs an odd link count >= 3, got {self.n_x}")
        if self.inflow[0] > self.inflow[1]:
            raise DomainError("inflow interval is inverted")


def _num(v: float) -> str:
    return repr(float(v))


def _step(margin: str) -> str:
    # ~0/1 indicator of margin > 0, with a 1e-9-wide ramp at the switch
    return f"max(0, min(1, 0.5 + ({margin}) * 1e9))"


def _build_expressions(prm: TrafficParams):
    n = prm.n_x
    T = prm.time_constant
    c = _num(prm.capacity)
    v = prm.free_speed
    w = prm.congestion_rate
    beta = prm.split_ratio
    jam = _num(prm.jam_density)

    def vx(i):
        return f"{_num(v)}*x{i}"

    def room_k(j):
        # 2w(jam - x_j), admission into link j as seen by the diverge
        return f"{_num(2 * w)}*({jam} - x{j})"

    def room_l(j):
        # w(jam - x_j)/beta, admission into link j along a chain
        return f"{_num(w / beta)}*({jam} - x{j})"

    k_terms = [c, vx(1), room_k(2), room_k(3)]
    k_str = f"min({', '.join(k_terms)})"

    def l_terms(i):
        # outflow of link i toward link i+2; the admission term disappears
        # for the last two links, which have no downstream neighbor
        if i + 2 <= n:
            return [c, vx(i), room_l(i + 2)]
        return [c, vx(i)]

    def l_str(i):
        return f"min({', '.join(l_terms(i))})"

    components = [f"-({k_str})/{_num(T)} + p1"]
    for i in (2, 3):
        components.append(f"(({k_str})/2 - {l_str(i)})/{_num(T)} + p{i}")
    for i in range(4, n + 1):
        up = f"min({', '.join([c, vx(i - 2), room_l(i)])})"
        components.append(
            f"({_num(beta)}*({up}) - {l_str(i)})/{_num(T)} + p{i}")

    def others(terms, skip):
        return [t for idx, t in enumerate(terms) if idx != skip]

    def active(terms, which):
        # indicator that terms[which] is the smallest of terms
        rest = others(terms, which)
        rest_min = rest[0] if len(rest) == 1 else f"min({', '.join(rest)})"
        return _step(f"({rest_min}) - ({terms[which]})")

    jac = [["0"] * n for _ in range(n)]
    # row 1: f1 = -k/T
    jac[0][0] = f"-{_num(v / T)}*{active(k_terms, 1)}"
    jac[0][1] = f"{_num(2 * w / T)}*{active(k_terms, 2)}"
    jac[0][2] = f"{_num(2 * w / T)}*{active(k_terms, 3)}"
    # rows 2, 3: f_i = (k/2 - l_i)/T
    for i in (2, 3):
        terms = l_terms(i)
        row = jac[i - 1]
        row[0] = f"{_num(v / (2 * T))}*{active(k_terms, 1)}"
        # k/2 depends on x2 and x3 through the admission terms
        own = f"-{_num(w / T)}*{active(k_terms, i)} - {_num(v / T)}*{active(terms, 1)}"
        other = 5 - i
        row[i - 1] = own
        row[other - 1] = f"-{_num(w / T)}*{active(k_terms, other)}"
        if i + 2 <= n:
            row[i + 1] = f"{_num(w / (beta * T))}*{active(terms, 2)}"
    # rows >= 4: f_i = (beta * l(i-2, i) - l(i, i+2))/T
    for i in range(4, n + 1):
        up_terms = [c, vx(i - 2), room_l(i)]
        down_terms = l_terms(i)
        row = jac[i - 1]
        row[i - 3] = f"{_num(beta * v / T)}*{active(up_terms, 1)}"
        row[i - 1] = (f"-{_num(w / T)}*{active(up_terms, 2)}"
                      f" - {_num(v / T)}*{active(down_terms, 1)}")
        if i + 2 <= n:
            row[i + 1] = f"{_num(w / (beta * T))}*{active(down_terms, 2)}"

    jac_p = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return components, jac, jac_p


def build_traffic(params: TrafficParams | None = None) -> SystemModel:
    """Continuous traffic model with additive input and derived capabilities.

    The input vector has the same dimension as the state; only p1 (the
    inflow) is uncertain in the standard problem.  Jacobian bound
    expressions are attached for derivation, and a contraction matrix is
    precomputed from the Jacobian bounds over the invariant density range
    [0, jam]^n.
    """
    prm = params or TrafficParams()
    components, jac, jac_p = _build_expressions(prm)
    spec = VectorFieldSpec.from_strings(prm.n_x, prm.n_x, components, jac, jac_p)
    density_range = Box(np.zeros(prm.n_x), np.full(prm.n_x, prm.jam_density))
    input_range = Box(np.zeros(prm.n_x),
                      np.concatenate([[prm.inflow[1]], np.zeros(prm.n_x - 1)]))
    jx, _ = jacobian_bounds(spec, Interval(0.0, 0.0), density_range, input_range)
    contraction = ContractionData(matrix=contraction_matrix_from_bounds(jx))
    return SystemModel.from_spec(
        "continuous", spec,
        additive_input=True,
        contraction=contraction,
        invariant_space=density_range,
        name=f"traffic-{prm.n_x}",
    )


def default_initial_box(n_x: int) -> Box:
    """Benchmark initial densities: the 3-link study box, or [100, 200]^n."""
    if n_x == 3:
        return Box([150.0, 180.0, 100.0], [200.0, 300.0, 220.0])
    return Box(np.full(n_x, 100.0), np.full(n_x, 200.0))


def traffic_problem(params: TrafficParams | None = None,
                    t0: float = 0.0, tf: float = 30.0,
                    x0: Box | None = None) -> ReachProblem:
    """Standard reachability query: uncertain constant inflow on link 1."""
    prm = params or TrafficParams()
    x0 = x0 if x0 is not None else default_initial_box(prm.n_x)
    p_lower = np.zeros(prm.n_x)
    p_upper = np.zeros(prm.n_x)
    p_lower[0] = prm.inflow[0]
    p_upper[0] = prm.inflow[1]
    return ReachProblem(t0, tf, x0, Box(p_lower, p_upper), input_mode="constant")
