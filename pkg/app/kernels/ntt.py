"""Number theoretic transforms over Z_q.

Forward transforms run Cooley-Tukey stages (natural order in, bit-reversed order
out); inverse transforms run Gentleman-Sande stages (bit-reversed in, natural out)
with the 1/n scaling folded into the last stage. The public ``ntt_*`` functions
convert to and from natural order so they agree with the direct sums; the fast
multipliers skip that permutation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from app.errors import ParameterError
from app.kernels.counters import OpCounter
from app.kernels.modmath import (
    Modulus,
    RootSet,
    find_roots,
    mod_add,
    mod_add_vec,
    mod_mul_barrett,
    mod_mul_vec,
    mod_pow,
    mod_sub,
    mod_sub_vec,
)
from app.kernels.polyring import Polynomial, Reduction, require_same_ring


def log2_exact(n: int) -> int:
    return n.bit_length() - 1


def _reverse_bits(value: int, bits: int) -> int:
    result = 0
    for _ in range(bits):
        result = (result << 1) | (value & 1)
        value >>= 1
    return result


@lru_cache(maxsize=32)
def bit_reverse_indices(n: int) -> np.ndarray:
    bits = log2_exact(n)
    indices = np.array([_reverse_bits(i, bits) for i in range(n)], dtype=np.intp)
    indices.setflags(write=False)
    return indices


def bit_reverse(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    return values[bit_reverse_indices(len(values))]


def _power_table(base: int, count: int, m: Modulus) -> list[int]:
    powers = [1 % m.q] * count
    for e in range(1, count):
        powers[e] = mod_mul_barrett(powers[e - 1], base, m)
    return powers


def _frozen_u64(values: list[int]) -> np.ndarray:
    array = np.array(values, dtype=np.uint64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TwiddleTable:
    """Per-stage twiddles, indexed by ``2**stage + group``; entry 0 is 1."""

    roots: RootSet
    forward_twiddles: np.ndarray
    inverse_twiddles: np.ndarray
    cyclic_forward: np.ndarray
    cyclic_inverse: np.ndarray

    @property
    def n(self) -> int:
        return self.roots.n

    @property
    def modulus(self) -> Modulus:
        return self.roots.modulus

    @property
    def stages(self) -> int:
        return log2_exact(self.n)


def build_twiddle_table(roots: RootSet) -> TwiddleTable:
    n, m = roots.n, roots.modulus
    bits = log2_exact(n)
    psi_pow = _power_table(roots.psi, n, m)
    psi_inv_pow = _power_table(roots.psi_inv, n, m)
    omega_pow = _power_table(roots.omega, n, m)
    omega_inv_pow = _power_table(roots.omega_inv, n, m)

    forward = [psi_pow[_reverse_bits(k, bits)] for k in range(n)]
    inverse = [psi_inv_pow[_reverse_bits(k, bits)] for k in range(n)]
    cyclic_forward = [1] * n
    cyclic_inverse = [1] * n
    for k in range(1, n):
        stage = log2_exact(k)
        group = k - (1 << stage)
        exponent = (n >> (stage + 1)) * _reverse_bits(group, stage)
        cyclic_forward[k] = omega_pow[exponent]
        cyclic_inverse[k] = omega_inv_pow[exponent]
    return TwiddleTable(
        roots=roots,
        forward_twiddles=_frozen_u64(forward),
        inverse_twiddles=_frozen_u64(inverse),
        cyclic_forward=_frozen_u64(cyclic_forward),
        cyclic_inverse=_frozen_u64(cyclic_inverse),
    )


@lru_cache(maxsize=64)
def twiddle_table(n: int, m: Modulus) -> TwiddleTable:
    return build_twiddle_table(find_roots(n, m))


def butterfly_ct(u: int, v: int, w: int, m: Modulus) -> tuple[int, int]:
    wv = mod_mul_barrett(v, w, m)
    return mod_add(u, wv, m), mod_sub(u, wv, m)


def butterfly_gs(u: int, v: int, w: int, m: Modulus) -> tuple[int, int]:
    return mod_add(u, v, m), mod_mul_barrett(mod_sub(u, v, m), w, m)


def butterfly_ct_vec(u: np.ndarray, v: np.ndarray, w: np.ndarray, m: Modulus) -> tuple[np.ndarray, np.ndarray]:
    wv = mod_mul_vec(v, w, m)
    return mod_add_vec(u, wv, m), mod_sub_vec(u, wv, m)


def butterfly_gs_vec(u: np.ndarray, v: np.ndarray, w: np.ndarray, m: Modulus) -> tuple[np.ndarray, np.ndarray]:
    return mod_add_vec(u, v, m), mod_mul_vec(mod_sub_vec(u, v, m), w, m)


def stage_layout(n: int, stage: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index arrays (upper, lower, twiddle) of the n/2 butterflies of one stage.

    Butterfly b = group * half + k pairs a[2*group*half + k] with the element
    ``half`` positions above it; the stride halves at every stage.
    """
    groups = 1 << stage
    half = n // (2 * groups)
    group = np.repeat(np.arange(groups, dtype=np.intp), half)
    offset = np.tile(np.arange(half, dtype=np.intp), groups)
    upper = 2 * group * half + offset
    return upper, upper + half, groups + group


def _check_stage(n: int, stage: int) -> None:
    if not 0 <= stage < log2_exact(n):
        raise ParameterError(
            code="STAGE_OUT_OF_RANGE",
            message=f"stage must be in [0, {log2_exact(n)}), got {stage}",
            details={"n": n, "stage": stage},
        )


def _ct_stage(a: np.ndarray, stage: int, twiddles: np.ndarray, m: Modulus, counter: OpCounter | None) -> np.ndarray:
    n = len(a)
    groups = 1 << stage
    blocks = a.reshape(groups, 2, n // (2 * groups))
    w = twiddles[groups : 2 * groups].reshape(groups, 1)
    out = np.empty_like(blocks)
    out[:, 0, :], out[:, 1, :] = butterfly_ct_vec(blocks[:, 0, :], blocks[:, 1, :], w, m)
    if counter is not None:
        counter.mod_muls += n // 2
        counter.mod_adds += n
    return out.reshape(n)


def _gs_stage(
    a: np.ndarray, stage: int, twiddles: np.ndarray, m: Modulus, counter: OpCounter | None, scale: int | None = None
) -> np.ndarray:
    n = len(a)
    groups = 1 << stage
    blocks = a.reshape(groups, 2, n // (2 * groups))
    w = twiddles[groups : 2 * groups].reshape(groups, 1)
    if scale is not None:
        w = mod_mul_vec(w, np.uint64(scale), m)
    out = np.empty_like(blocks)
    out[:, 0, :], out[:, 1, :] = butterfly_gs_vec(blocks[:, 0, :], blocks[:, 1, :], w, m)
    if counter is not None:
        counter.mod_muls += n // 2
        counter.mod_adds += n
    if scale is not None:
        out[:, 0, :] = mod_mul_vec(out[:, 0, :], np.uint64(scale), m)
        if counter is not None:
            counter.mod_muls += n // 2
    return out.reshape(n)


def ct_transform(a: np.ndarray, twiddles: np.ndarray, m: Modulus, counter: OpCounter | None = None) -> np.ndarray:
    """All Cooley-Tukey stages: natural order in, bit-reversed order out."""
    for stage in range(log2_exact(len(a))):
        a = _ct_stage(a, stage, twiddles, m, counter)
    return a


def gs_transform(
    a: np.ndarray, twiddles: np.ndarray, n_inv: int, m: Modulus, counter: OpCounter | None = None
) -> np.ndarray:
    """All Gentleman-Sande stages including the 1/n scaling: bit-reversed in, natural out."""
    stages = log2_exact(len(a))
    for stage in range(stages - 1, -1, -1):
        a = _gs_stage(a, stage, twiddles, m, counter, scale=n_inv if stage == 0 else None)
    return a


def _check_table(p: Polynomial, t: TwiddleTable) -> None:
    if p.params.n != t.n or p.params.modulus != t.modulus:
        raise ParameterError(
            code="DIMENSION_MISMATCH",
            message=f"polynomial (n={p.params.n}, q={p.params.q}) does not match twiddle table (n={t.n}, q={t.modulus.q})",
            details={"n": p.params.n, "table_n": t.n},
        )


def ntt_forward(a: Polynomial, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    _check_table(a, t)
    return Polynomial(bit_reverse(ct_transform(a.coeffs, t.cyclic_forward, t.modulus, counter)), a.params)


def ntt_inverse(a_hat: Polynomial, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    _check_table(a_hat, t)
    coeffs = gs_transform(bit_reverse(a_hat.coeffs), t.cyclic_inverse, t.roots.n_inv, t.modulus, counter)
    return Polynomial(coeffs, a_hat.params)


def ntt_forward_nwc(a: Polynomial, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    _check_table(a, t)
    return Polynomial(bit_reverse(ct_transform(a.coeffs, t.forward_twiddles, t.modulus, counter)), a.params)


def ntt_inverse_nwc(a_hat: Polynomial, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    _check_table(a_hat, t)
    coeffs = gs_transform(bit_reverse(a_hat.coeffs), t.inverse_twiddles, t.roots.n_inv, t.modulus, counter)
    return Polynomial(coeffs, a_hat.params)


def ct_iteration(state: Polynomial, stage: int, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    """One in-place Cooley-Tukey stage of the negacyclic transform (n/2 butterflies)."""
    _check_table(state, t)
    _check_stage(t.n, stage)
    return Polynomial(_ct_stage(state.coeffs, stage, t.forward_twiddles, t.modulus, counter), state.params)


def gs_iteration(state: Polynomial, stage: int, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    """One Gentleman-Sande stage of the negacyclic inverse, without the 1/n scaling."""
    _check_table(state, t)
    _check_stage(t.n, stage)
    return Polynomial(_gs_stage(state.coeffs, stage, t.inverse_twiddles, t.modulus, counter), state.params)


def _require_reduction(p: Polynomial, reduction: Reduction) -> None:
    if p.params.reduction is not reduction:
        raise ParameterError(
            code="REDUCTION_MISMATCH",
            message=f"expected a {reduction.value} ring, got {p.params.reduction.value}",
        )


def fast_negacyclic_mul(p1: Polynomial, p2: Polynomial, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    params = require_same_ring(p1, p2)
    _check_table(p1, t)
    _require_reduction(p1, Reduction.NEGACYCLIC)
    m = t.modulus
    a_hat = ct_transform(p1.coeffs, t.forward_twiddles, m, counter)
    b_hat = ct_transform(p2.coeffs, t.forward_twiddles, m, counter)
    c_hat = mod_mul_vec(a_hat, b_hat, m)
    if counter is not None:
        counter.mod_muls += params.n
        counter.poly_muls += 1
    return Polynomial(gs_transform(c_hat, t.inverse_twiddles, t.roots.n_inv, m, counter), params)


def fast_cyclic_mul(p1: Polynomial, p2: Polynomial, t: TwiddleTable, counter: OpCounter | None = None) -> Polynomial:
    params = require_same_ring(p1, p2)
    _check_table(p1, t)
    _require_reduction(p1, Reduction.CYCLIC)
    m = t.modulus
    a_hat = ct_transform(p1.coeffs, t.cyclic_forward, m, counter)
    b_hat = ct_transform(p2.coeffs, t.cyclic_forward, m, counter)
    c_hat = mod_mul_vec(a_hat, b_hat, m)
    if counter is not None:
        counter.mod_muls += params.n
        counter.poly_muls += 1
    return Polynomial(gs_transform(c_hat, t.cyclic_inverse, t.roots.n_inv, m, counter), params)


def negacyclic_mul_op_counts(n: int) -> OpCounter:
    """Modular op tally of one transform-based negacyclic product."""
    stages = log2_exact(n)
    return OpCounter(
        mod_adds=3 * n * stages,
        mod_muls=3 * (n // 2) * stages + n + n // 2,
        poly_muls=1,
    )


def direct_ntt(a: Polynomial, root: int, m: Modulus) -> list[int]:
    """O(n^2) reference: a_hat_j = sum_i root^(ij) a_i."""
    n, q = a.params.n, m.q
    coeffs = a.tolist()
    return [sum(mod_pow(root, (i * j) % (q - 1), m) * coeffs[i] for i in range(n)) % q for j in range(n)]


def direct_ntt_nwc(a: Polynomial, psi: int, m: Modulus) -> list[int]:
    """O(n^2) reference: a_hat_j = sum_i psi^(2ij + i) a_i."""
    n, q = a.params.n, m.q
    coeffs = a.tolist()
    return [sum(mod_pow(psi, (2 * i * j + i) % (q - 1), m) * coeffs[i] for i in range(n)) % q for j in range(n)]
