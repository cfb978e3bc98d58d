"""Shared test corpus: small systems with known structure.

Each corpus entry carries a system, a matching problem, and what we know
about it (monotone or not, closed-form data where available), so property
tests can sweep the whole corpus.
"""

from dataclasses import dataclass

import numpy as np
import pytest

from reachbox import (
    Box,
    ContractionData,
    ReachProblem,
    SystemModel,
    VectorFieldSpec,
)
from reachbox.traffic import TrafficParams, build_traffic, traffic_problem


@dataclass
class CorpusSystem:
    name: str
    system: SystemModel
    problem: ReachProblem
    monotone: bool
    linear_matrix: np.ndarray | None = None  # A for f = A x + p, when linear


def _linear_spec(a, jac_p=None):
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    comps = []
    for i in range(n):
        terms = [f"{a[i, j]!r}*x{j + 1}" for j in range(n) if a[i, j] != 0.0]
        comps.append(" + ".join(terms) if terms else "0")
    if jac_p is None:  # additive input
        comps = [f"{c} + p{i + 1}" for i, c in enumerate(comps)]
        jac_p = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    jac_x = [[repr(a[i, j]) for j in range(n)] for i in range(n)]
    return VectorFieldSpec.from_strings(n, len(jac_p[0]), comps, jac_x, jac_p)


METZLER2_A = np.array([[-2.0, 1.0], [1.0, -2.0]])
METZLER3_A = np.array([[-3.0, 1.0, 0.5], [0.5, -2.0, 1.0], [1.0, 0.2, -2.5]])
MIXED3_A = np.array([[-1.0, 0.5, -0.4], [0.3, -1.0, -0.6], [-0.2, -0.5, -1.0]])


def make_metzler2():
    spec = _linear_spec(METZLER2_A)
    sys2 = SystemModel.from_spec(
        "continuous", spec, additive_input=True,
        contraction=ContractionData(matrix=METZLER2_A), name="metzler2")
    prob = ReachProblem(0.0, 0.7, Box([0.0, 0.0], [1.0, 2.0]),
                        Box([-0.1, -0.1], [0.1, 0.1]))
    return CorpusSystem("metzler2", sys2, prob, monotone=True,
                        linear_matrix=METZLER2_A)


def make_metzler3():
    spec = _linear_spec(METZLER3_A)
    sys3 = SystemModel.from_spec(
        "continuous", spec, additive_input=True,
        contraction=ContractionData(matrix=METZLER3_A), name="metzler3")
    prob = ReachProblem(0.0, 0.5, Box([0.0, -0.5, 0.2], [0.4, 0.5, 1.0]),
                        Box([0.0, 0.0, -0.2], [0.3, 0.0, 0.2]))
    return CorpusSystem("metzler3", sys3, prob, monotone=True,
                        linear_matrix=METZLER3_A)


def make_cooperative_nonlinear():
    spec = VectorFieldSpec.from_strings(
        2, 2,
        ["-2*x1 + 0.25*x2^2 + p1", "x1 - x2 + p2"],
        [["-2", "0.5*x2"], ["1", "-1"]],
        [["1", "0"], ["0", "1"]])
    sysn = SystemModel.from_spec(
        "continuous", spec, additive_input=True,
        invariant_space=Box([0.0, 0.0], [1.0, 1.0]), name="coop_nl")
    prob = ReachProblem(0.0, 1.0, Box([0.1, 0.2], [0.3, 0.5]),
                        Box([0.0, 0.0], [0.1, 0.05]))
    return CorpusSystem("coop_nl", sysn, prob, monotone=True)


def make_competitive2():
    # both couplings negative: monotone for the orthant order (x1, -x2)
    spec = VectorFieldSpec.from_strings(
        2, 1,
        ["-x1 - 0.5*x2 + p1", "-0.8*x1 - x2"],
        [["-1", "-0.5"], ["-0.8", "-1"]],
        [["1"], ["0"]])
    sysc = SystemModel.from_spec("continuous", spec, name="competitive2")
    prob = ReachProblem(0.0, 0.8, Box([0.0, 0.0], [1.0, 1.0]),
                        Box([-0.1], [0.1]))
    return CorpusSystem("competitive2", sysc, prob, monotone=True)


def make_mixed3():
    # sign pattern (1,2)+ (1,3)- (2,3)-: monotone with epsilon = (0, 0, 1)
    spec = _linear_spec(MIXED3_A, jac_p=None)
    sysm = SystemModel.from_spec(
        "continuous", spec, additive_input=True, name="mixed3")
    prob = ReachProblem(0.0, 0.6, Box([-0.2, 0.0, 0.1], [0.4, 0.6, 0.8]),
                        Box([-0.05, 0.0, 0.0], [0.05, 0.0, 0.1]))
    return CorpusSystem("mixed3", sysm, prob, monotone=True,
                        linear_matrix=MIXED3_A)


def make_sign_stable_not_monotone():
    # J12 < 0 but J21 > 0: sign-stable yet fails the parity check
    spec = VectorFieldSpec.from_strings(
        2, 1,
        ["-x1 - x2 + p1", "x1 - x2"],
        [["-1", "-1"], ["1", "-1"]],
        [["1"], ["0"]])
    syss = SystemModel.from_spec("continuous", spec, name="rotating2")
    prob = ReachProblem(0.0, 0.5, Box([0.0, 0.0], [1.0, 1.0]),
                        Box([0.0], [0.0]))
    return CorpusSystem("rotating2", syss, prob, monotone=False,
                        linear_matrix=np.array([[-1.0, -1.0], [1.0, -1.0]]))


def corpus():
    return [
        make_metzler2(),
        make_metzler3(),
        make_cooperative_nonlinear(),
        make_competitive2(),
        make_mixed3(),
        make_sign_stable_not_monotone(),
    ]


@pytest.fixture(scope="session")
def full_corpus():
    return corpus()


@pytest.fixture(scope="session")
def monotone_corpus(full_corpus):
    return [c for c in full_corpus if c.monotone]


@pytest.fixture(scope="session")
def traffic3_system():
    return build_traffic(TrafficParams(n_x=3))


@pytest.fixture(scope="session")
def traffic3_problem():
    return traffic_problem(TrafficParams(n_x=3))
