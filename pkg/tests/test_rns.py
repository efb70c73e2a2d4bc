import numpy as np
import pytest

from app.errors import NttUnfriendlyModulus, ParameterError, PrimeSearchError
from app.kernels.modmath import is_prime
from app.kernels.polyring import Polynomial, RingParams, negacyclic_schoolbook
from app.kernels.rns import (
    RnsBasis,
    build_basis,
    dcrt_add,
    dcrt_from_ntt,
    dcrt_mul,
    dcrt_to_ntt,
    decompose,
    exact_negacyclic_product,
    reconstruct,
    reconstruct_centered,
)

TOY = RnsBasis.from_moduli([5, 7])


class TestBasis:
    def test_big_q(self):
        assert TOY.big_q == 35
        assert RnsBasis.from_moduli([17]).big_q == 17

    def test_rejects_repeated_or_empty(self):
        with pytest.raises(ParameterError):
            RnsBasis.from_moduli([17, 17])
        with pytest.raises(ParameterError):
            RnsBasis(())

    def test_ntt_friendliness_checked(self):
        with pytest.raises(NttUnfriendlyModulus):
            RnsBasis.from_moduli([17, 7], n=4)

    def test_build_basis(self):
        basis = build_basis(3, 20, 1024)
        assert len(set(basis.moduli)) == 3
        assert all(q.bit_length() == 20 and (q - 1) % 2048 == 0 and is_prime(q) for q in basis.moduli)

    def test_build_basis_exhausted(self):
        with pytest.raises(PrimeSearchError):
            build_basis(3, 5, 4)


class TestDecomposeReconstruct:
    def test_toy_residues(self):
        p = decompose([23, 0, 34, 0], TOY)
        assert [t.tolist() for t in p.towers] == [[3, 0, 4, 0], [2, 0, 6, 0]]

    def test_toy_reconstruct(self):
        assert reconstruct(decompose([23, 0, 34, 1], TOY), TOY) == [23, 0, 34, 1]

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            decompose([35, 0], TOY)

    def test_wide_basis_round_trip(self):
        basis = build_basis(64, 60, 2)
        rng = np.random.default_rng(0)
        values = [int.from_bytes(rng.bytes(480), "little") % basis.big_q for _ in range(2)]
        p = decompose(values, basis)
        for tower, q in zip(p.towers, basis.moduli):
            assert tower.tolist() == [v % q for v in values]
        assert reconstruct(p, basis) == values

    @pytest.mark.parametrize("k", [1, 2, 4, 8])
    def test_random_round_trip_per_tower_count(self, k):
        basis = build_basis(k, 30, 16, seed=k)
        rng = np.random.default_rng(k)
        for _ in range(100):
            values = [int.from_bytes(rng.bytes(32), "little") % basis.big_q for _ in range(16)]
            assert reconstruct(decompose(values, basis), basis) == values

    def test_scalar_residues(self):
        assert TOY.residues(23) == (3, 2)
        assert TOY.residues(0) == (0, 0)
        assert TOY.residues(34) == (4, 6)
        assert TOY.combine((3, 2)) == 23
        assert TOY.combine((0, 0)) == 0

    def test_scalar_residues_reject_bad_input(self):
        with pytest.raises(ParameterError):
            TOY.residues(35)
        with pytest.raises(ParameterError) as exc:
            TOY.combine((3,))
        assert exc.value.code == "BASIS_MISMATCH"

    def test_centered(self):
        assert reconstruct_centered(decompose([34, 1], TOY), TOY) == [-1, 1]


class TestTowerArithmetic:
    def test_add_wraps(self):
        out = dcrt_add(decompose([23, 0], TOY), decompose([30, 0], TOY))
        assert reconstruct(out, TOY) == [18, 0]

    def test_add_identity(self):
        x = decompose([11, 29], TOY)
        assert reconstruct(dcrt_add(x, decompose([0, 0], TOY)), TOY) == [11, 29]

    def test_random_add_pairs(self):
        basis = build_basis(3, 30, 8, seed=1)
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = [int(v) % basis.big_q for v in rng.integers(0, 2**62, size=8, dtype=np.uint64)]
            y = [int(v) % basis.big_q for v in rng.integers(0, 2**62, size=8, dtype=np.uint64)]
            out = reconstruct(dcrt_add(decompose(x, basis), decompose(y, basis)), basis)
            assert out == [(a + b) % basis.big_q for a, b in zip(x, y)]

    def test_mul_small_basis_matches_big_integer_product(self):
        basis = RnsBasis.from_moduli([17, 97], n=4)
        a, b = [1, 2, 3, 4], [1600, 5, 1000, 77]
        out = reconstruct(dcrt_mul(decompose(a, basis), decompose(b, basis)), basis)
        full = [0] * 7
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                full[i + j] += x * y
        expected = [(full[k] - (full[k + 4] if k + 4 < 7 else 0)) % 1649 for k in range(4)]
        assert out == expected

    def test_mul_identity(self):
        basis = build_basis(2, 30, 16)
        x = list(range(16))
        one = [1] + [0] * 15
        assert reconstruct(dcrt_mul(decompose(x, basis), decompose(one, basis)), basis) == x

    def test_tower_order_and_workers_do_not_change_result(self):
        basis = build_basis(4, 30, 32, seed=2)
        rng = np.random.default_rng(3)
        x = decompose([int(v) for v in rng.integers(0, 2**40, size=32)], basis)
        y = decompose([int(v) for v in rng.integers(0, 2**40, size=32)], basis)
        reference = reconstruct(dcrt_mul(x, y), basis)
        assert reconstruct(dcrt_mul(x, y, order=[3, 1, 0, 2]), basis) == reference
        assert reconstruct(dcrt_mul(x, y, workers=4), basis) == reference

    def test_invalid_order(self):
        x = decompose([1, 2], TOY)
        with pytest.raises(ParameterError):
            dcrt_add(x, x, order=[0, 0])

    def test_basis_mismatch(self):
        other = RnsBasis.from_moduli([5, 11])
        with pytest.raises(ParameterError):
            dcrt_add(decompose([1, 2], TOY), decompose([1, 2], other))

    def test_ntt_form_round_trip(self):
        basis = build_basis(2, 30, 8)
        x = decompose(list(range(8)), basis)
        hat = dcrt_to_ntt(x)
        assert hat.ntt_form
        assert dcrt_from_ntt(hat).towers == x.towers


def test_exact_negacyclic_product_matches_integer_oracle():
    basis = build_basis(3, 60, 8, seed=9)
    rng = np.random.default_rng(5)
    a = [int(v) for v in rng.integers(-(2**40), 2**40, size=8)]
    b = [int(v) for v in rng.integers(-(2**40), 2**40, size=8)]
    expected = [0] * 8
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            k = i + j
            if k < 8:
                expected[k] += x * y
            else:
                expected[k - 8] -= x * y
    assert exact_negacyclic_product(a, b, basis) == expected


def test_exact_product_rejects_small_basis():
    basis = build_basis(1, 30, 4)
    with pytest.raises(ParameterError):
        exact_negacyclic_product([2**20] * 4, [2**20] * 4, basis)


def test_exact_product_agrees_with_mod_q_schoolbook():
    basis = build_basis(3, 60, 16, seed=1)
    ring = RingParams(16, basis.towers[0])
    a = Polynomial.from_ints(list(range(16)), ring)
    b = Polynomial.from_ints(list(range(16, 32)), ring)
    exact = exact_negacyclic_product(a.tolist(), b.tolist(), basis)
    assert Polynomial.from_ints(exact, ring) == negacyclic_schoolbook(a, b)
