import numpy as np
import pytest

from app.errors import ParameterError
from app.kernels.counters import OpCounter
from app.kernels.modmath import RootSet, generate_ntt_prime
from app.kernels.ntt import (
    bit_reverse,
    build_twiddle_table,
    butterfly_ct,
    butterfly_gs,
    ct_iteration,
    direct_ntt,
    direct_ntt_nwc,
    fast_cyclic_mul,
    fast_negacyclic_mul,
    gs_iteration,
    negacyclic_mul_op_counts,
    ntt_forward,
    ntt_forward_nwc,
    ntt_inverse,
    ntt_inverse_nwc,
    twiddle_table,
)
from app.kernels.polyring import Polynomial, Reduction, RingParams, negacyclic_schoolbook, random_poly, reduce_cyclic, schoolbook_convolution


class TestCyclicTransform:
    def test_hand_example(self, ring4, table4, poly):
        assert ntt_forward(poly([1, 2, 3, 4], ring4), table4).tolist() == [10, 7, 15, 6]

    def test_inverse_hand_example(self, ring4, table4, poly):
        assert ntt_inverse(poly([10, 7, 15, 6], ring4), table4).tolist() == [1, 2, 3, 4]

    def test_delta_and_constant(self, ring4, table4, poly):
        assert ntt_forward(poly([7, 0, 0, 0], ring4), table4).tolist() == [7, 7, 7, 7]
        assert ntt_inverse(poly([7, 7, 7, 7], ring4), table4).tolist() == [7, 0, 0, 0]

    def test_zero(self, ring4, table4):
        zero = Polynomial.zero(ring4)
        assert ntt_forward(zero, table4) == zero
        assert ntt_inverse(zero, table4) == zero

    def test_matches_direct_sum(self):
        m = generate_ntt_prime(30, 64, seed=1)
        ring = RingParams(64, m)
        table = twiddle_table(64, m)
        p = random_poly(ring, 8)
        assert ntt_forward(p, table).tolist() == direct_ntt(p, table.roots.omega, m)


class TestNegacyclicTransform:
    def test_hand_example(self, q17, poly):
        ring = RingParams(2, q17)
        table = build_twiddle_table(RootSet.from_psi(2, 4, q17))
        assert ntt_forward_nwc(poly([1, 1], ring), table).tolist() == [5, 14]
        assert ntt_inverse_nwc(poly([5, 14], ring), table).tolist() == [1, 1]
        assert ntt_forward_nwc(poly([6, 0], ring), table).tolist() == [6, 6]

    @pytest.mark.parametrize("n", [2, 8, 128])
    def test_round_trip_and_direct_sum(self, n):
        m = generate_ntt_prime(40, n, seed=n)
        table = twiddle_table(n, m)
        p = random_poly(RingParams(n, m), n)
        forward = ntt_forward_nwc(p, table)
        assert forward.tolist() == direct_ntt_nwc(p, table.roots.psi, m)
        assert ntt_inverse_nwc(forward, table) == p

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [4 << k for k in range(11)])
    def test_both_variants_round_trip_on_random_polynomials(self, n):
        m = generate_ntt_prime(30, n, seed=n)
        table = twiddle_table(n, m)
        ring = RingParams(n, m)
        rng = np.random.default_rng(n)
        for _ in range(100):
            p = random_poly(ring, rng)
            assert ntt_inverse(ntt_forward(p, table), table) == p
            assert ntt_inverse_nwc(ntt_forward_nwc(p, table), table) == p

    def test_table_mismatch(self, table4, q17):
        with pytest.raises(ParameterError):
            ntt_forward_nwc(Polynomial.zero(RingParams(8, q17)), table4)


class TestButterflies:
    def test_ct(self, q17):
        assert butterfly_ct(3, 5, 2, q17) == (13, 10)
        assert butterfly_ct(9, 0, 1, q17) == (9, 9)
        assert butterfly_ct(0, 1, 1, q17) == (1, 16)

    def test_gs_inverts_ct_up_to_two(self, q17):
        u, v = butterfly_ct(3, 5, 2, q17)
        # w^-1 = 9 (2 * 9 = 18 = 1)
        assert butterfly_gs(u, v, 9, q17) == (6, 10)

    def test_gs_edge_cases(self, q17):
        assert butterfly_gs(7, 7, 5, q17) == (14, 0)
        assert butterfly_gs(0, 0, 5, q17) == (0, 0)


class TestStages:
    def test_composed_stages_match_direct_sum(self):
        m = generate_ntt_prime(30, 8, seed=2)
        table = twiddle_table(8, m)
        p = random_poly(RingParams(8, m), 4)
        state = p
        for stage in range(3):
            state = ct_iteration(state, stage, table)
        assert bit_reverse(state.coeffs).tolist() == direct_ntt_nwc(p, table.roots.psi, m)

    def test_gs_stages_undo_ct_stages(self):
        m = generate_ntt_prime(30, 8, seed=2)
        table = twiddle_table(8, m)
        p = random_poly(RingParams(8, m), 5)
        state = p
        for stage in range(3):
            state = ct_iteration(state, stage, table)
        for stage in (2, 1, 0):
            state = gs_iteration(state, stage, table)
        # without the 1/n scaling every coefficient comes back multiplied by n
        assert state.tolist() == [(8 * c) % m.q for c in p.tolist()]

    def test_stage_on_zero(self, ring4, table4):
        zero = Polynomial.zero(ring4)
        assert ct_iteration(zero, 1, table4) == zero

    def test_stage_out_of_range(self, ring4, table4):
        with pytest.raises(ParameterError):
            ct_iteration(Polynomial.zero(ring4), 2, table4)

    def test_stage_counts(self, ring4, table4, poly):
        counter = OpCounter()
        ct_iteration(poly([1, 2, 3, 4], ring4), 0, table4, counter)
        assert (counter.mod_muls, counter.mod_adds) == (2, 4)


class TestFastMultiplication:
    def test_negacyclic_hand_examples(self, q17, ring4, table4, poly):
        ring2 = RingParams(2, q17)
        table2 = build_twiddle_table(RootSet.from_psi(2, 4, q17))
        assert fast_negacyclic_mul(poly([1, 1], ring2), poly([1, 1], ring2), table2).tolist() == [0, 2]
        p = poly([1, 2, 3, 4], ring4)
        assert fast_negacyclic_mul(p, p, table4).tolist() == [10, 14, 11, 3]
        assert fast_negacyclic_mul(p, Polynomial.one(ring4), table4) == p

    def test_cyclic_hand_examples(self, q17, cyclic_ring4, table4, poly):
        ring2 = RingParams(2, q17, Reduction.CYCLIC)
        table2 = build_twiddle_table(RootSet.from_psi(2, 4, q17))
        assert fast_cyclic_mul(poly([1, 1], ring2), poly([1, 1], ring2), table2).tolist() == [2, 2]
        p = poly([1, 2, 3, 4], cyclic_ring4)
        assert fast_cyclic_mul(p, p, table4).tolist() == [9, 11, 9, 3]
        assert fast_cyclic_mul(p, Polynomial.one(cyclic_ring4), table4) == p

    @pytest.mark.parametrize("n", [16, 256])
    def test_agrees_with_schoolbook(self, n):
        m = generate_ntt_prime(50, n, seed=n)
        table = twiddle_table(n, m)
        ring = RingParams(n, m)
        a, b = random_poly(ring, 1), random_poly(ring, 2)
        assert fast_negacyclic_mul(a, b, table) == negacyclic_schoolbook(a, b)

    def test_cyclic_agrees_with_schoolbook(self):
        m = generate_ntt_prime(30, 32, seed=3)
        ring = RingParams(32, m, Reduction.CYCLIC)
        a, b = random_poly(ring, 1), random_poly(ring, 2)
        assert fast_cyclic_mul(a, b, twiddle_table(32, m)) == reduce_cyclic(schoolbook_convolution(a, b), ring)

    def test_reduction_mismatch(self, cyclic_ring4, table4, poly):
        p = poly([1, 2, 3, 4], cyclic_ring4)
        with pytest.raises(ParameterError):
            fast_negacyclic_mul(p, p, table4)

    def test_op_counts_match_counter(self):
        m = generate_ntt_prime(30, 64, seed=4)
        ring = RingParams(64, m)
        counter = OpCounter()
        fast_negacyclic_mul(random_poly(ring, 1), random_poly(ring, 2), twiddle_table(64, m), counter)
        expected = negacyclic_mul_op_counts(64)
        assert (counter.mod_adds, counter.mod_muls, counter.poly_muls) == (
            expected.mod_adds,
            expected.mod_muls,
            expected.poly_muls,
        )
