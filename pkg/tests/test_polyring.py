import numpy as np
import pytest

from app.errors import ParameterError
from app.kernels.counters import OpCounter
from app.kernels.modmath import Modulus
from app.kernels.polyring import (
    ConvolutionResult,
    Polynomial,
    RingParams,
    convolve_slices,
    cw_mul,
    negacyclic_schoolbook,
    poly_add,
    poly_neg,
    poly_sub,
    random_poly,
    reduce_cyclic,
    reduce_negacyclic,
    scalar_mul,
    schoolbook_convolution,
)


def test_ring_dimension_must_be_power_of_two(q17):
    with pytest.raises(ParameterError):
        RingParams(6, q17)
    with pytest.raises(ParameterError):
        RingParams(1, q17)


def test_polynomial_rejects_bad_shapes_and_ranges(ring4):
    with pytest.raises(ParameterError):
        Polynomial(np.array([1, 2, 3], dtype=np.uint64), ring4)
    with pytest.raises(ParameterError):
        Polynomial(np.array([1, 2, 3, 17], dtype=np.uint64), ring4)


def test_from_ints_reduces_negatives(ring4):
    p = Polynomial.from_ints([-1, 18, 0, 5], ring4)
    assert p.tolist() == [16, 1, 0, 5]
    assert p.centered() == [-1, 1, 0, 5]


class TestAddition:
    def test_symmetric_sum(self, ring4, poly):
        assert poly_add(poly([1, 2, 3, 4], ring4), poly([4, 3, 2, 1], ring4)).tolist() == [5, 5, 5, 5]

    def test_identity(self, ring4, poly):
        p = poly([9, 0, 16, 3], ring4)
        assert poly_add(p, Polynomial.zero(ring4)) == p

    def test_boundary(self):
        ring = RingParams(2, Modulus(65537))
        p = poly_add(Polynomial.from_ints([65000, 0], ring), Polynomial.from_ints([1000, 0], ring))
        assert p.tolist() == [463, 0]

    def test_ring_mismatch(self, ring4, cyclic_ring4, poly):
        with pytest.raises(ParameterError):
            poly_add(poly([1, 2, 3, 4], ring4), poly([1, 2, 3, 4], cyclic_ring4))

    def test_sub_and_neg(self, ring4, poly):
        p, r = poly([1, 2, 3, 4], ring4), poly([4, 3, 2, 1], ring4)
        assert poly_sub(p, r).tolist() == [14, 16, 1, 3]
        assert poly_add(p, poly_neg(p)) == Polynomial.zero(ring4)

    def test_counter(self, ring4, poly):
        counter = OpCounter()
        poly_add(poly([1, 2, 3, 4], ring4), poly([4, 3, 2, 1], ring4), counter)
        assert (counter.mod_adds, counter.poly_adds) == (4, 1)


class TestCoefficientWise:
    def test_identity(self, ring4, poly):
        assert cw_mul(poly([1, 2, 3, 4], ring4), poly([1, 1, 1, 1], ring4)).tolist() == [1, 2, 3, 4]

    def test_zero_absorption(self, ring4, poly):
        assert cw_mul(poly([13, 0, 0, 0], ring4), poly([13, 5, 5, 5], ring4)).tolist() == [16, 0, 0, 0]

    def test_annihilator(self, ring4):
        assert cw_mul(random_poly(ring4, 3), Polynomial.zero(ring4)) == Polynomial.zero(ring4)

    def test_scalar_mul(self, ring4, poly):
        assert scalar_mul(poly([1, 2, 3, 4], ring4), -1).tolist() == [16, 15, 14, 13]


class TestConvolution:
    def test_hand_expansion(self, q17):
        ring = RingParams(2, q17)
        out = schoolbook_convolution(Polynomial.from_ints([1, 2], ring), Polynomial.from_ints([3, 4], ring))
        assert out.tolist() == [3, 10, 8]

    def test_square(self, ring4, poly):
        p = poly([1, 2, 3, 4], ring4)
        assert schoolbook_convolution(p, p).tolist() == [1, 4, 10, 3, 8, 7, 16]

    def test_identity_pads(self, ring4, poly):
        p = poly([5, 6, 7, 8], ring4)
        assert schoolbook_convolution(p, Polynomial.one(ring4)).tolist() == [5, 6, 7, 8, 0, 0, 0]

    def test_op_counts(self, ring4, poly):
        counter = OpCounter()
        schoolbook_convolution(poly([1, 2, 3, 4], ring4), poly([1, 2, 3, 4], ring4), counter)
        assert (counter.mod_muls, counter.mod_adds, counter.poly_muls) == (16, 9, 1)

    @pytest.mark.parametrize("n", [2 << k for k in range(10)])
    def test_op_counts_up_to_1024(self, n):
        ring = RingParams(n, Modulus(65537))
        counter = OpCounter()
        out = schoolbook_convolution(random_poly(ring, n), random_poly(ring, n + 1), counter)
        assert len(out.tolist()) == 2 * n - 1
        assert (counter.mod_muls, counter.mod_adds) == (n * n, (n - 1) ** 2)

    def test_rectangular_slices(self, q17):
        counter = OpCounter()
        out = convolve_slices(np.array([1, 2, 3], dtype=np.uint64), np.array([1, 1], dtype=np.uint64), q17, counter)
        assert out.tolist() == [1, 3, 5, 3]
        assert (counter.mod_muls, counter.mod_adds) == (6, 2)


class TestReduction:
    def test_negacyclic_small(self, q17):
        ring = RingParams(2, q17)
        assert reduce_negacyclic(ConvolutionResult(np.array([1, 2, 1], dtype=np.uint64), q17), ring).tolist() == [0, 2]

    def test_negacyclic_n4(self, ring4, q17):
        c = ConvolutionResult(np.array([1, 4, 10, 3, 8, 7, 16], dtype=np.uint64), q17)
        assert reduce_negacyclic(c, ring4).tolist() == [10, 14, 11, 3]

    def test_cyclic(self, q17, cyclic_ring4):
        ring = RingParams(2, q17, cyclic_ring4.reduction)
        assert reduce_cyclic(ConvolutionResult(np.array([1, 2, 1], dtype=np.uint64), q17), ring).tolist() == [2, 2]
        c = ConvolutionResult(np.array([1, 4, 10, 3, 8, 7, 16], dtype=np.uint64), q17)
        assert reduce_cyclic(c, cyclic_ring4).tolist() == [9, 11, 9, 3]

    def test_low_degree_is_identity(self, ring4, q17):
        c = ConvolutionResult(np.array([3, 1, 4], dtype=np.uint64), q17)
        assert reduce_negacyclic(c, ring4).tolist() == [3, 1, 4, 0]

    def test_reduction_kind_must_match(self, cyclic_ring4, q17):
        c = ConvolutionResult(np.array([1, 2, 1], dtype=np.uint64), q17)
        with pytest.raises(ParameterError):
            reduce_negacyclic(c, cyclic_ring4)

    def test_negacyclic_schoolbook(self, ring4, poly):
        p = poly([1, 2, 3, 4], ring4)
        assert negacyclic_schoolbook(p, p).tolist() == [10, 14, 11, 3]


class TestRandomPoly:
    def test_same_seed_same_poly(self):
        ring = RingParams(256, Modulus(65537))
        assert random_poly(ring, 42) == random_poly(ring, 42)

    def test_distinct_seeds_differ(self):
        ring = RingParams(64, Modulus(65537))
        assert all(random_poly(ring, 2 * s) != random_poly(ring, 2 * s + 1) for s in range(100))
