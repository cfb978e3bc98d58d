"""Interval arithmetic, boxes, interval matrices, interval matrix exponential."""

import math

import numpy as np
import pytest
import scipy.linalg

from reachbox import (
    Box,
    DimensionError,
    DomainError,
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


class TestBox:
    def test_center_halfwidth_basic(self):
        center, halfwidth = box_center_halfwidth(Box([1.0], [3.0]))
        assert center == pytest.approx([2.0])
        assert halfwidth == pytest.approx([1.0])

    def test_center_halfwidth_point(self):
        center, halfwidth = box_center_halfwidth(Box([-1.0], [-1.0]))
        assert center == pytest.approx([-1.0])
        assert halfwidth == pytest.approx([0.0])

    def test_center_halfwidth_benchmark_box(self):
        center, halfwidth = box_center_halfwidth(Box([150.0, 180.0], [200.0, 300.0]))
        assert center == pytest.approx([175.0, 240.0])
        assert halfwidth == pytest.approx([25.0, 60.0])

    def test_reconstruction_is_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            lo = rng.uniform(-1e6, 1e6, 4)
            hi = lo + rng.uniform(0.0, 1e3, 4)
            b = Box(lo, hi)
            center, halfwidth = box_center_halfwidth(b)
            np.testing.assert_allclose(center - halfwidth, b.lower, rtol=0, atol=1e-9)

    def test_inverted_box_rejected(self):
        with pytest.raises(DomainError):
            Box([1.0, 0.0], [0.0, 1.0])

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(DimensionError):
            Box([0.0], [1.0, 2.0])

    def test_hull_intersect_contains(self):
        assert hull(Box([0.0], [1.0]), Box([2.0], [3.0])) == Box([0.0], [3.0])
        assert intersect(Box([0.0], [2.0]), Box([1.0], [3.0])) == Box([1.0], [2.0])
        assert intersect(Box([0.0], [1.0]), Box([2.0], [3.0])) is None
        assert contains(Box([0.0], [3.0]), Box([1.0], [2.0]))
        assert not contains(Box([1.0], [2.0]), Box([0.0], [3.0]))

    def test_hull_idempotent_commutative(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            lo = rng.uniform(-5, 5, 3)
            a = Box(lo, lo + rng.uniform(0, 2, 3))
            lo2 = rng.uniform(-5, 5, 3)
            b = Box(lo2, lo2 + rng.uniform(0, 2, 3))
            assert hull(a, a) == a
            assert hull(a, b) == hull(b, a)
            meet = intersect(a, b)
            if meet is not None:
                assert intersect(a, b) == intersect(b, a)
                assert intersect(meet, meet) == meet


class TestIntervalMatrix:
    def test_degenerate_product(self):
        a = IntervalMatrix([[1.0]], [[1.0]])
        b = IntervalMatrix([[2.0]], [[2.0]])
        r = interval_mat_mul(a, b)
        assert r.lower[0, 0] == 2.0 and r.upper[0, 0] == 2.0

    def test_endpoint_product(self):
        r = interval_mat_mul(IntervalMatrix([[-1.0]], [[1.0]]),
                             IntervalMatrix([[2.0]], [[3.0]]))
        assert r.lower[0, 0] == -3.0 and r.upper[0, 0] == 3.0

    def test_identity_product(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(3, 3))
        r = interval_mat_mul(IntervalMatrix.identity(3), IntervalMatrix.from_point(m))
        np.testing.assert_allclose(r.lower, m, atol=1e-14)
        np.testing.assert_allclose(r.upper, m, atol=1e-14)

    def test_add_and_shape_checks(self):
        a = IntervalMatrix(np.zeros((2, 3)), np.ones((2, 3)))
        s = interval_mat_add(a, a)
        assert s.upper.max() == 2.0
        with pytest.raises(DimensionError):
            interval_mat_add(a, IntervalMatrix.identity(2))
        with pytest.raises(DimensionError):
            interval_mat_mul(a, a)

    def test_infinite_entries_rejected_in_arithmetic(self):
        inf = IntervalMatrix([[-np.inf]], [[1.0]])  # storage is fine
        with pytest.raises(DomainError):
            interval_mat_add(inf, inf)
        with pytest.raises(DomainError):
            interval_mat_mul(inf, inf)

    def test_product_enclosure_property(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            al = rng.normal(size=(3, 2))
            bl = rng.normal(size=(2, 4))
            a = IntervalMatrix(al, al + rng.uniform(0, 1, (3, 2)))
            b = IntervalMatrix(bl, bl + rng.uniform(0, 1, (2, 4)))
            prod = interval_mat_mul(a, b)
            for _ in range(20):
                pa = rng.uniform(a.lower, a.upper)
                pb = rng.uniform(b.lower, b.upper)
                assert prod.contains_matrix(pa @ pb, tol=1e-11)

    def test_sum_enclosure_property(self):
        rng = np.random.default_rng(5)
        al = rng.normal(size=(2, 2))
        a = IntervalMatrix(al, al + 1.0)
        s = interval_mat_add(a, a)
        for _ in range(50):
            pa = rng.uniform(a.lower, a.upper)
            pb = rng.uniform(a.lower, a.upper)
            assert s.contains_matrix(pa + pb, tol=1e-12)


class TestIntervalExpm:
    def test_scalar_point_matrix(self):
        e = interval_expm(IntervalMatrix([[-1.0]], [[-1.0]]), 1.0)
        assert e.lower[0, 0] <= math.exp(-1) <= e.upper[0, 0]
        assert e.width[0, 0] <= 1e-9

    def test_zero_matrix_gives_identity(self):
        for tau in (0.0, 1.0, 17.5):
            e = interval_expm(IntervalMatrix.zeros((3, 3)), tau)
            assert e.contains_matrix(np.eye(3), tol=1e-15)
            assert np.max(e.width) <= 1e-12

    def test_two_by_two_corner_containment(self):
        c = IntervalMatrix([[-1.0, 0.9], [0.9, -1.0]], [[-1.0, 1.1], [1.1, -1.0]])
        e = interval_expm(c, 0.1)
        rng = np.random.default_rng(6)
        corners = [c.lower, c.upper,
                   np.array([[-1.0, 0.9], [1.1, -1.0]]),
                   np.array([[-1.0, 1.1], [0.9, -1.0]])]
        samples = [rng.uniform(c.lower, c.upper) for _ in range(30)]
        for m in corners + samples:
            assert e.contains_matrix(scipy.linalg.expm(m * 0.1), tol=1e-12)

    def test_width_monotone_in_order(self):
        c = IntervalMatrix([[-1.0, 0.3], [0.1, -0.8]], [[-0.8, 0.5], [0.3, -0.6]])
        for tau in (0.4, 0.9, 3.0):
            w_low = np.max(interval_expm(c, tau, order=10).width)
            w_high = np.max(interval_expm(c, tau, order=15).width)
            assert w_high <= w_low + 1e-15

    def test_point_matrix_matches_reference(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            m = rng.normal(size=(3, 3))
            m *= 1.0 / max(1.0, np.abs(m).sum(axis=1).max())  # ||C||_inf <= 1
            e = interval_expm(IntervalMatrix.from_point(m), 1.0)
            ref = scipy.linalg.expm(m)
            assert np.max(np.abs(e.lower - ref)) <= 1e-9
            assert np.max(np.abs(e.upper - ref)) <= 1e-9

    def test_large_tau_auto_splits(self):
        c = IntervalMatrix([[-2.0]], [[-2.0]])
        e = interval_expm(c, 10.0)
        assert e.lower[0, 0] <= math.exp(-20.0) <= e.upper[0, 0]
        assert e.width[0, 0] <= 1e-12

    def test_preconditions(self):
        with pytest.raises(DimensionError):
            interval_expm(IntervalMatrix(np.zeros((2, 3)), np.zeros((2, 3))), 1.0)
        with pytest.raises(DomainError):
            interval_expm(IntervalMatrix.identity(2), -1.0)
        with pytest.raises(DomainError):
            interval_expm(IntervalMatrix([[-np.inf]], [[0.0]]), 1.0)


class TestScalarInterval:
    def test_arith_enclosure_fuzz(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            a = sorted(rng.uniform(-3, 3, 2))
            b = sorted(rng.uniform(-3, 3, 2))
            ia, ib = Interval(*a), Interval(*b)
            for op, iop in ((lambda x, y: x + y, ia + ib),
                            (lambda x, y: x - y, ia - ib),
                            (lambda x, y: x * y, ia * ib)):
                for _ in range(10):
                    x = rng.uniform(*a)
                    y = rng.uniform(*b)
                    assert iop.lo - 1e-12 <= op(x, y) <= iop.hi + 1e-12

    def test_division_by_zero_interval(self):
        with pytest.raises(DomainError):
            Interval(1.0, 2.0) / Interval(-1.0, 1.0)

    def test_transcendental_ranges(self):
        s = Interval(0.0, 7.0).sin()
        assert s.lo == -1.0 and s.hi == 1.0
        s2 = Interval(0.1, 1.0).sin()
        assert s2.lo == pytest.approx(math.sin(0.1))
        assert s2.hi == pytest.approx(math.sin(1.0))
        c = Interval(0.0, math.pi).cos()
        assert c.lo == pytest.approx(-1.0) and c.hi == pytest.approx(1.0)
        assert Interval(-2.0, 3.0).power(2) == Interval(0.0, 9.0)
        assert abs(Interval(-4.0, 1.0)) == Interval(0.0, 4.0)
