"""Textbook BFV over a single word-size modulus q.

Ciphertexts are (c0, c1[, c2]) with decryption c0 + c1*s + c2*s^2. Fresh
encryptions carry the scaled message in c0. The ciphertext tensor product is computed
over the integers on an auxiliary RNS basis and then rescaled by t/q.
"""
from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from math import log2

import numpy as np

from app.errors import ParameterError
from app.kernels.counters import OpCounter
from app.kernels.modmath import generate_ntt_prime, is_power_of_two
from app.kernels.ntt import fast_negacyclic_mul, twiddle_table
from app.kernels.polyring import (
    Polynomial,
    Reduction,
    RingParams,
    make_rng,
    poly_add,
    poly_neg,
    random_poly,
    scalar_mul,
)
from app.kernels.rns import RnsBasis, build_basis, exact_negacyclic_product

LOGGER = logging.getLogger("pimhe.he")

PolyMultiplier = Callable[[Polynomial, Polynomial], Polynomial]
TensorMultiplier = Callable[[Sequence[int], Sequence[int]], list[int]]

AUX_PRIME_BITS = 60
_AUX_SEED = 0x5EED


@dataclass(frozen=True)
class SchemeParams:
    ring: RingParams
    t: int
    noise_stddev: float = 3.2
    decomp_base: int = 1 << 16
    delta: int = field(init=False)

    def __post_init__(self) -> None:
        if self.ring.reduction is not Reduction.NEGACYCLIC:
            raise ParameterError(code="REDUCTION_MISMATCH", message="BFV needs the negacyclic ring x^n + 1")
        if not 2 <= self.t < self.ring.q:
            raise ParameterError(
                code="INVALID_PLAINTEXT_MODULUS",
                message=f"plaintext modulus must satisfy 2 <= t < q, got t={self.t}",
                details={"t": self.t, "q": self.ring.q},
            )
        if self.noise_stddev < 0:
            raise ParameterError(code="INVALID_NOISE", message="noise_stddev must be >= 0")
        if self.decomp_base < 2 or not is_power_of_two(self.decomp_base):
            raise ParameterError(
                code="INVALID_DECOMP_BASE",
                message=f"decomp_base must be a power of 2 >= 2, got {self.decomp_base}",
            )
        object.__setattr__(self, "delta", self.ring.q // self.t)

    @property
    def q(self) -> int:
        return self.ring.q

    @property
    def n(self) -> int:
        return self.ring.n

    @property
    def decomp_bits(self) -> int:
        return self.decomp_base.bit_length() - 1

    @property
    def decomp_digits(self) -> int:
        return -(-self.q.bit_length() // self.decomp_bits)

    @classmethod
    def build(
        cls, n: int, q_bits: int = 60, t: int = 65537, *, seed: int = 0, noise_stddev: float = 3.2
    ) -> SchemeParams:
        modulus = generate_ntt_prime(q_bits, n, seed)
        return cls(RingParams(n, modulus), t, noise_stddev)


@dataclass(frozen=True)
class KeyMaterial:
    sk: Polynomial
    pk: tuple[Polynomial, Polynomial]
    # ek[i] = (a_i, -(a_i*s + e_i) + base^i * s^2)
    ek: tuple[tuple[Polynomial, Polynomial], ...]


@dataclass(frozen=True)
class Ciphertext:
    elements: tuple[Polynomial, ...]

    def __post_init__(self) -> None:
        elements = tuple(self.elements)
        if len(elements) not in (2, 3):
            raise ParameterError(
                code="INVALID_CIPHERTEXT", message=f"ciphertexts have 2 or 3 elements, got {len(elements)}"
            )
        if len({e.params for e in elements}) != 1:
            raise ParameterError(code="RING_MISMATCH", message="ciphertext elements belong to different rings")
        object.__setattr__(self, "elements", elements)

    @property
    def degree(self) -> int:
        return len(self.elements) - 1

    @property
    def params(self) -> RingParams:
        return self.elements[0].params


def default_multiplier(ring: RingParams) -> PolyMultiplier:
    table = twiddle_table(ring.n, ring.modulus)
    return lambda p1, p2: fast_negacyclic_mul(p1, p2, table)


@lru_cache(maxsize=16)
def aux_basis(n: int, q_bits: int) -> RnsBasis:
    """Auxiliary basis wide enough for n * (q/2)^2 plus sign."""
    towers = (n.bit_length() + 2 * q_bits) // (AUX_PRIME_BITS - 1) + 1
    return build_basis(towers, AUX_PRIME_BITS, n, seed=_AUX_SEED)


def default_tensor(params: SchemeParams) -> TensorMultiplier:
    basis = aux_basis(params.n, params.q.bit_length())
    return lambda a, b: exact_negacyclic_product(a, b, basis)


def sample_ternary(ring: RingParams, rng: np.random.Generator) -> Polynomial:
    return Polynomial.from_ints(rng.integers(-1, 2, size=ring.n).tolist(), ring)


def sample_noise(ring: RingParams, stddev: float, rng: np.random.Generator) -> Polynomial:
    """Centered binomial with variance stddev^2, clipped to 6 standard deviations."""
    if stddev == 0:
        return Polynomial.zero(ring)
    eta = max(1, round(2 * stddev * stddev))
    bound = int(6 * stddev)
    e = rng.binomial(2 * eta, 0.5, size=ring.n) - eta
    return Polynomial.from_ints(np.clip(e, -bound, bound).tolist(), ring)


def _check_degree(c: Ciphertext, allowed: tuple[int, ...], operation: str) -> None:
    if c.degree not in allowed:
        raise ParameterError(
            code="DEGREE_MISMATCH",
            message=f"{operation} expects degree {' or '.join(map(str, allowed))}, got {c.degree}",
            details={"degree": c.degree},
        )


def keygen(params: SchemeParams, seed: int, *, multiplier: PolyMultiplier | None = None) -> KeyMaterial:
    mul = multiplier or default_multiplier(params.ring)
    rng = make_rng(seed)
    ring = params.ring
    s = sample_ternary(ring, rng)
    a = random_poly(ring, rng)
    e = sample_noise(ring, params.noise_stddev, rng)
    pk = (a, poly_neg(poly_add(mul(a, s), e)))

    s2 = mul(s, s)
    ek = []
    for i in range(params.decomp_digits):
        a_i = random_poly(ring, rng)
        e_i = sample_noise(ring, params.noise_stddev, rng)
        shifted = scalar_mul(s2, pow(params.decomp_base, i, params.q))
        ek.append((a_i, poly_add(poly_neg(poly_add(mul(a_i, s), e_i)), shifted)))
    LOGGER.debug("keygen done", extra={"n": ring.n, "q_bits": params.q.bit_length(), "ek_digits": len(ek)})
    return KeyMaterial(sk=s, pk=pk, ek=tuple(ek))


def encode(m: Sequence[int], params: SchemeParams) -> Polynomial:
    values = [int(v) for v in m]
    if len(values) > params.n or any(not 0 <= v < params.t for v in values):
        raise ParameterError(
            code="PLAINTEXT_OUT_OF_RANGE",
            message=f"plaintext must hold at most {params.n} values in [0, {params.t})",
            details={"t": params.t, "n": params.n},
        )
    return Polynomial.from_ints(values + [0] * (params.n - len(values)), params.ring)


def encrypt(
    m: Sequence[int],
    keys: KeyMaterial,
    params: SchemeParams,
    seed: int,
    *,
    ephemeral: Polynomial | None = None,
    multiplier: PolyMultiplier | None = None,
) -> Ciphertext:
    """c = (u*b + e1 + delta*m, u*a + e2); ``ephemeral`` fixes u instead of sampling it."""
    mul = multiplier or default_multiplier(params.ring)
    plain = encode(m, params)
    rng = make_rng(seed)
    u = ephemeral if ephemeral is not None else sample_ternary(params.ring, rng)
    e1 = sample_noise(params.ring, params.noise_stddev, rng)
    e2 = sample_noise(params.ring, params.noise_stddev, rng)
    a, b = keys.pk
    c0 = poly_add(poly_add(mul(u, b), e1), scalar_mul(plain, params.delta))
    c1 = poly_add(mul(u, a), e2)
    return Ciphertext((c0, c1))


def _phase(c: Ciphertext, keys: KeyMaterial, mul: PolyMultiplier) -> Polynomial:
    s = keys.sk
    x = poly_add(c.elements[0], mul(c.elements[1], s))
    if c.degree == 2:
        x = poly_add(x, mul(c.elements[2], mul(s, s)))
    return x


def decrypt(c: Ciphertext, keys: KeyMaterial, params: SchemeParams, *, multiplier: PolyMultiplier | None = None) -> list[int]:
    _check_degree(c, (1, 2), "decrypt")
    x = _phase(c, keys, multiplier or default_multiplier(params.ring)).coeffs.astype(object)
    q, t = params.q, params.t
    return [int(v) for v in (x * t + q // 2) // q % t]


def noise_budget(c: Ciphertext, keys: KeyMaterial, params: SchemeParams) -> float:
    """Remaining bits before decryption fails: log2(delta/2) - log2(|noise|_inf)."""
    _check_degree(c, (1, 2), "noise_budget")
    x = _phase(c, keys, default_multiplier(params.ring))
    m = encode(decrypt(c, keys, params), params)
    noise = poly_add(x, poly_neg(scalar_mul(m, params.delta))).centered()
    peak = max(abs(v) for v in noise)
    headroom = log2(params.delta / 2)
    return headroom if peak == 0 else max(0.0, headroom - log2(peak))


def eval_add(c1: Ciphertext, c2: Ciphertext, *, counter: OpCounter | None = None) -> Ciphertext:
    if c1.degree != c2.degree or c1.params != c2.params:
        raise ParameterError(
            code="DEGREE_MISMATCH",
            message="eval_add needs ciphertexts of equal degree over the same ring",
            details={"left": c1.degree, "right": c2.degree},
        )
    return Ciphertext(tuple(poly_add(x, y, counter) for x, y in zip(c1.elements, c2.elements)))


def eval_add_plain(c: Ciphertext, m: Sequence[int], params: SchemeParams) -> Ciphertext:
    scaled = scalar_mul(encode(m, params), params.delta)
    return Ciphertext((poly_add(c.elements[0], scaled), *c.elements[1:]))


def eval_mult_plain(
    c: Ciphertext, m: Sequence[int], params: SchemeParams, *, multiplier: PolyMultiplier | None = None
) -> Ciphertext:
    mul = multiplier or default_multiplier(params.ring)
    plain = encode(m, params)
    return Ciphertext(tuple(mul(e, plain) for e in c.elements))


def _rescale(values: Sequence[int], params: SchemeParams) -> Polynomial:
    q, t = params.q, params.t
    # round(t*v/q) for signed v
    return Polynomial.from_ints([(2 * t * v + q) // (2 * q) for v in values], params.ring)


def eval_mult(
    c1: Ciphertext,
    c2: Ciphertext,
    params: SchemeParams,
    *,
    tensor: TensorMultiplier | None = None,
    counter: OpCounter | None = None,
) -> Ciphertext:
    _check_degree(c1, (1,), "eval_mult")
    _check_degree(c2, (1,), "eval_mult")
    if c1.params != c2.params:
        raise ParameterError(code="RING_MISMATCH", message="eval_mult operands belong to different rings")
    product = tensor or default_tensor(params)
    a0, a1 = (e.centered() for e in c1.elements)
    b0, b1 = (e.centered() for e in c2.elements)
    d0 = product(a0, b0)
    d1 = [x + y for x, y in zip(product(a0, b1), product(a1, b0))]
    d2 = product(a1, b1)
    if counter is not None:
        counter.poly_muls += 4
        counter.poly_adds += 1
    return Ciphertext((_rescale(d0, params), _rescale(d1, params), _rescale(d2, params)))


def relinearize(
    c: Ciphertext, keys: KeyMaterial, params: SchemeParams, *, multiplier: PolyMultiplier | None = None
) -> Ciphertext:
    _check_degree(c, (2,), "relinearize")
    mul = multiplier or default_multiplier(params.ring)
    c0, c1, c2 = c.elements
    mask = np.uint64(params.decomp_base - 1)
    for i, (a_i, b_i) in enumerate(keys.ek):
        digit = Polynomial((c2.coeffs >> np.uint64(i * params.decomp_bits)) & mask, params.ring)
        c0 = poly_add(c0, mul(digit, b_i))
        c1 = poly_add(c1, mul(digit, a_i))
    return Ciphertext((c0, c1))


def plaintext_product(m1: Sequence[int], m2: Sequence[int], params: SchemeParams) -> list[int]:
    """Reference ring product of two plaintexts in Z_t[x]/(x^n + 1)."""
    n, t = params.n, params.t
    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)
    a[: len(m1)] = [int(v) % t for v in m1]
    b[: len(m2)] = [int(v) % t for v in m2]
    full = np.convolve(a % t, b % t) % t
    folded = full[:n].copy()
    folded[: n - 1] -= full[n:]
    return [int(v) for v in folded % t]
