"""Polynomials over Z_q[x] and the quotient rings Z_q[x]/(x^n + 1), Z_q[x]/(x^n - 1).

Coefficients are little-endian by degree: index k holds the coefficient of x^k.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.errors import ParameterError
from app.kernels.counters import OpCounter
from app.kernels.modmath import (
    Modulus,
    as_residues,
    is_power_of_two,
    mod_add_vec,
    mod_mul_vec,
    mod_neg_vec,
    mod_sub_vec,
)


class Reduction(str, Enum):
    NEGACYCLIC = "NegacyclicXnPlus1"
    CYCLIC = "CyclicXnMinus1"


@dataclass(frozen=True)
class RingParams:
    n: int
    modulus: Modulus
    reduction: Reduction = Reduction.NEGACYCLIC

    def __post_init__(self) -> None:
        if self.n < 2 or not is_power_of_two(self.n):
            raise ParameterError(
                code="INVALID_RING_DIMENSION",
                message=f"ring dimension must be a power of 2 and >= 2, got {self.n}",
                details={"n": self.n},
            )

    @property
    def q(self) -> int:
        return self.modulus.q


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.uint64, copy=True)
    values.setflags(write=False)
    return values


def _check_bound(values: np.ndarray, q: int) -> None:
    if values.size and int(values.max()) >= q:
        raise ParameterError(
            code="COEFFICIENT_OUT_OF_RANGE",
            message=f"coefficients must lie in [0, {q})",
            details={"q": q, "max": int(values.max())},
        )


@dataclass(frozen=True, eq=False)
class Polynomial:
    coeffs: np.ndarray
    params: RingParams

    def __post_init__(self) -> None:
        coeffs = _frozen(self.coeffs)
        if coeffs.shape != (self.params.n,):
            raise ParameterError(
                code="DIMENSION_MISMATCH",
                message=f"expected {self.params.n} coefficients, got {coeffs.shape}",
                details={"n": self.params.n},
            )
        _check_bound(coeffs, self.params.q)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_ints(cls, values, params: RingParams) -> Polynomial:
        """Build from arbitrary (possibly negative) integers, reducing mod q."""
        return cls(np.array([int(v) % params.q for v in values], dtype=np.uint64), params)

    @classmethod
    def zero(cls, params: RingParams) -> Polynomial:
        return cls(np.zeros(params.n, dtype=np.uint64), params)

    @classmethod
    def one(cls, params: RingParams) -> Polynomial:
        coeffs = np.zeros(params.n, dtype=np.uint64)
        coeffs[0] = 1
        return cls(coeffs, params)

    def tolist(self) -> list[int]:
        return [int(c) for c in self.coeffs]

    def centered(self) -> list[int]:
        """Representatives in (-q/2, q/2]."""
        q = self.params.q
        half = q // 2
        return [c - q if c > half else c for c in self.tolist()]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash((self.params, self.coeffs.tobytes()))

    def __repr__(self) -> str:
        return f"Polynomial(n={self.params.n}, q={self.params.q}, coeffs={self.tolist()[:8]}{'...' if self.params.n > 8 else ''})"


@dataclass(frozen=True, eq=False)
class ConvolutionResult:
    coeffs: np.ndarray
    modulus: Modulus

    def __post_init__(self) -> None:
        coeffs = _frozen(self.coeffs)
        _check_bound(coeffs, self.modulus.q)
        object.__setattr__(self, "coeffs", coeffs)

    def tolist(self) -> list[int]:
        return [int(c) for c in self.coeffs]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConvolutionResult):
            return NotImplemented
        return self.modulus == other.modulus and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash((self.modulus, self.coeffs.tobytes()))


def require_same_ring(p1: Polynomial, p2: Polynomial) -> RingParams:
    if p1.params != p2.params:
        raise ParameterError(
            code="RING_MISMATCH",
            message="operands belong to different rings",
            details={"left": (p1.params.n, p1.params.q), "right": (p2.params.n, p2.params.q)},
        )
    return p1.params


def poly_add(p1: Polynomial, p2: Polynomial, counter: OpCounter | None = None) -> Polynomial:
    params = require_same_ring(p1, p2)
    if counter is not None:
        counter.mod_adds += params.n
        counter.poly_adds += 1
    return Polynomial(mod_add_vec(p1.coeffs, p2.coeffs, params.modulus), params)


def poly_sub(p1: Polynomial, p2: Polynomial, counter: OpCounter | None = None) -> Polynomial:
    params = require_same_ring(p1, p2)
    if counter is not None:
        counter.mod_adds += params.n
        counter.poly_adds += 1
    return Polynomial(mod_sub_vec(p1.coeffs, p2.coeffs, params.modulus), params)


def poly_neg(p: Polynomial) -> Polynomial:
    return Polynomial(mod_neg_vec(p.coeffs, p.params.modulus), p.params)


def scalar_mul(p: Polynomial, scalar: int, counter: OpCounter | None = None) -> Polynomial:
    if counter is not None:
        counter.mod_muls += p.params.n
    return Polynomial(mod_mul_vec(p.coeffs, np.uint64(scalar % p.params.q), p.params.modulus), p.params)


def cw_mul(p1: Polynomial, p2: Polynomial, counter: OpCounter | None = None) -> Polynomial:
    params = require_same_ring(p1, p2)
    if counter is not None:
        counter.mod_muls += params.n
    return Polynomial(mod_mul_vec(p1.coeffs, p2.coeffs, params.modulus), params)


def convolve_slices(a: np.ndarray, b: np.ndarray, m: Modulus, counter: OpCounter | None = None) -> np.ndarray:
    """Schoolbook product of two coefficient runs of any length.

    Row i adds a_i * b into c[i : i + len(b)]. Only positions already holding a
    partial sum cost an addition, so the tally is len(a)*len(b) multiplications
    and (len(a) - 1)*(len(b) - 1) additions.
    """
    a, b = as_residues(a), as_residues(b)
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return np.zeros(max(la + lb - 1, 0), dtype=np.uint64)
    c = np.zeros(la + lb - 1, dtype=np.uint64)
    c[:lb] = mod_mul_vec(b, a[0], m)
    for i in range(1, la):
        row = mod_mul_vec(b, a[i], m)
        c[i : i + lb - 1] = mod_add_vec(c[i : i + lb - 1], row[:-1], m)
        c[i + lb - 1] = row[-1]
    if counter is not None:
        counter.mod_muls += la * lb
        counter.mod_adds += (la - 1) * (lb - 1)
    return c


def schoolbook_convolution(p1: Polynomial, p2: Polynomial, counter: OpCounter | None = None) -> ConvolutionResult:
    params = require_same_ring(p1, p2)
    if counter is not None:
        counter.poly_muls += 1
    return ConvolutionResult(convolve_slices(p1.coeffs, p2.coeffs, params.modulus, counter), params.modulus)


def _fold(c: ConvolutionResult, params: RingParams, expected: Reduction) -> Polynomial:
    if params.reduction is not expected:
        raise ParameterError(
            code="REDUCTION_MISMATCH",
            message=f"ring reduces by {params.reduction.value}, expected {expected.value}",
        )
    if c.modulus != params.modulus or len(c.coeffs) > 2 * params.n - 1:
        raise ParameterError(code="RING_MISMATCH", message="convolution does not belong to this ring")
    n = params.n
    low = np.zeros(n, dtype=np.uint64)
    high = np.zeros(n, dtype=np.uint64)
    low[: min(n, len(c.coeffs))] = c.coeffs[:n]
    high[: max(len(c.coeffs) - n, 0)] = c.coeffs[n:]
    if expected is Reduction.NEGACYCLIC:
        # x^n = -1
        return Polynomial(mod_sub_vec(low, high, params.modulus), params)
    # x^n = 1
    return Polynomial(mod_add_vec(low, high, params.modulus), params)


def reduce_negacyclic(c: ConvolutionResult, params: RingParams) -> Polynomial:
    return _fold(c, params, Reduction.NEGACYCLIC)


def reduce_cyclic(c: ConvolutionResult, params: RingParams) -> Polynomial:
    return _fold(c, params, Reduction.CYCLIC)


def negacyclic_schoolbook(p1: Polynomial, p2: Polynomial, counter: OpCounter | None = None) -> Polynomial:
    return reduce_negacyclic(schoolbook_convolution(p1, p2, counter), p1.params)


def make_rng(seed: int) -> np.random.Generator:
    """The project RNG: numpy PCG64, portable across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def random_poly(params: RingParams, seed: int | np.random.Generator) -> Polynomial:
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    return Polynomial(rng.integers(0, params.q, size=params.n, dtype=np.uint64), params)
