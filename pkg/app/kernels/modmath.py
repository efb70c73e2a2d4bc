"""Exact modular arithmetic over word-size prime moduli.

Scalar operations work on Python ints; the ``*_vec`` variants apply the same
formulas element-wise to ``numpy.uint64`` residue arrays and are bit-exact with
the scalar versions.
"""
from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np
import sympy

from app.errors import NoInverseError, NttUnfriendlyModulus, ParameterError, PrimeSearchError

MAX_MODULUS_BITS = 62
# Below this width a*b and the Barrett estimate both fit in uint64.
_UINT64_BARRETT_BITS = 31
_PRIME_SEARCH_LIMIT = 200_000


def is_prime(value: int) -> bool:
    # sympy.isprime is deterministic (no probabilistic answer) below 2^64.
    return bool(sympy.isprime(int(value)))


def is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


def require_power_of_two(n: int, name: str = "n") -> None:
    if not is_power_of_two(int(n)):
        raise ParameterError(
            code="NOT_POWER_OF_TWO",
            message=f"{name} must be a power of 2, got {n}",
            details={name: n},
        )


@dataclass(frozen=True)
class Modulus:
    q: int
    barrett_factor: int = field(init=False)
    bit_width: int = field(init=False)

    def __post_init__(self) -> None:
        q = int(self.q)
        if q < 2 or q >= 1 << MAX_MODULUS_BITS:
            raise ParameterError(
                code="MODULUS_OUT_OF_RANGE",
                message=f"modulus must satisfy 2 <= q < 2^{MAX_MODULUS_BITS}, got {q}",
                details={"q": q},
            )
        if not is_prime(q):
            raise ParameterError(code="MODULUS_NOT_PRIME", message=f"modulus {q} is not prime", details={"q": q})
        k = q.bit_length()
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "bit_width", k)
        object.__setattr__(self, "barrett_factor", (1 << (2 * k)) // q)

    def is_consistent(self) -> bool:
        return self.bit_width == self.q.bit_length() and self.barrett_factor == (1 << (2 * self.bit_width)) // self.q

    def __int__(self) -> int:
        return self.q


def barrett_reduce(x: int, m: Modulus) -> int:
    """Reduce 0 <= x < q^2 with the two-word quotient estimate."""
    k = m.bit_width
    estimate = ((x >> (k - 1)) * m.barrett_factor) >> (k + 1)
    r = x - estimate * m.q
    # the estimate is short by at most 2
    if r >= m.q:
        r -= m.q
    if r >= m.q:
        r -= m.q
    return r


def mod_add(a: int, b: int, m: Modulus) -> int:
    assert 0 <= a < m.q and 0 <= b < m.q
    s = a + b
    return s - m.q if s >= m.q else s


def mod_sub(a: int, b: int, m: Modulus) -> int:
    assert 0 <= a < m.q and 0 <= b < m.q
    return a - b if a >= b else a - b + m.q


def mod_neg(a: int, m: Modulus) -> int:
    assert 0 <= a < m.q
    return m.q - a if a else 0


def mod_mul_barrett(a: int, b: int, m: Modulus) -> int:
    assert 0 <= a < m.q and 0 <= b < m.q
    return barrett_reduce(a * b, m)


def mod_pow(base: int, exp: int, m: Modulus) -> int:
    assert 0 <= base < m.q and exp >= 0
    result = 1 % m.q
    square = base
    while exp:
        if exp & 1:
            result = mod_mul_barrett(result, square, m)
        exp >>= 1
        if exp:
            square = mod_mul_barrett(square, square, m)
    return result


def mod_inv(a: int, m: Modulus) -> int:
    if a % m.q == 0:
        raise NoInverseError(code="NO_INVERSE", message=f"{a} has no inverse modulo {m.q}", details={"a": a, "q": m.q})
    # Fermat: q is prime
    return mod_pow(a % m.q, m.q - 2, m)


def as_residues(values) -> np.ndarray:
    return np.asarray(values, dtype=np.uint64)


def mod_add_vec(a: np.ndarray, b: np.ndarray, m: Modulus) -> np.ndarray:
    q = np.uint64(m.q)
    s = as_residues(a) + as_residues(b)
    return np.where(s >= q, s - q, s)


def mod_sub_vec(a: np.ndarray, b: np.ndarray, m: Modulus) -> np.ndarray:
    q = np.uint64(m.q)
    a, b = as_residues(a), as_residues(b)
    return np.where(a >= b, a - b, a + (q - b))


def mod_neg_vec(a: np.ndarray, m: Modulus) -> np.ndarray:
    a = as_residues(a)
    return np.where(a == 0, a, np.uint64(m.q) - a)


def mod_mul_vec(a: np.ndarray, b: np.ndarray, m: Modulus) -> np.ndarray:
    a, b = np.broadcast_arrays(as_residues(a), as_residues(b))
    k = m.bit_width
    q = np.uint64(m.q)
    if k <= _UINT64_BARRETT_BITS:
        x = a * b
        estimate = ((x >> np.uint64(k - 1)) * np.uint64(m.barrett_factor)) >> np.uint64(k + 1)
        r = x - estimate * q
    else:
        x = a.astype(object) * b.astype(object)
        estimate = ((x >> (k - 1)) * m.barrett_factor) >> (k + 1)
        r = (x - estimate * m.q).astype(np.uint64)
    r = np.where(r >= q, r - q, r)
    return np.where(r >= q, r - q, r)


@dataclass(frozen=True)
class RootSet:
    n: int
    modulus: Modulus
    omega: int
    psi: int
    omega_inv: int
    psi_inv: int
    n_inv: int

    @classmethod
    def from_psi(cls, n: int, psi: int, m: Modulus) -> RootSet:
        require_power_of_two(n)
        if not 0 < psi < m.q or mod_pow(psi, n, m) != m.q - 1:
            raise NttUnfriendlyModulus(
                code="INVALID_ROOT",
                message=f"psi={psi} is not a primitive {2 * n}-th root of unity modulo {m.q}",
                details={"n": n, "psi": psi, "q": m.q},
            )
        omega = mod_mul_barrett(psi, psi, m)
        return cls(
            n=n,
            modulus=m,
            omega=omega,
            psi=psi,
            omega_inv=mod_inv(omega, m),
            psi_inv=mod_inv(psi, m),
            n_inv=mod_inv(n % m.q, m),
        )

    def is_valid(self) -> bool:
        m, n = self.modulus, self.n
        primitive = n < 2 or mod_pow(self.omega, n // 2, m) != 1
        return (
            mod_pow(self.omega, n, m) == 1
            and primitive
            and mod_mul_barrett(self.psi, self.psi, m) == self.omega
            and mod_pow(self.psi, n, m) == m.q - 1
            and mod_mul_barrett(self.n_inv, n % m.q, m) == 1
            and mod_mul_barrett(self.psi, self.psi_inv, m) == 1
            and mod_mul_barrett(self.omega, self.omega_inv, m) == 1
        )


def find_roots(n: int, m: Modulus) -> RootSet:
    require_power_of_two(n)
    q = m.q
    if (q - 1) % (2 * n) != 0:
        raise NttUnfriendlyModulus(
            code="NTT_UNFRIENDLY_MODULUS",
            message=f"q={q} is not congruent to 1 mod {2 * n}; no primitive {2 * n}-th root exists",
            details={"n": n, "q": q},
        )
    prime_factors = sorted(sympy.factorint(q - 1))
    for g in range(2, q):
        if all(mod_pow(g, (q - 1) // f, m) != 1 for f in prime_factors):
            return RootSet.from_psi(n, mod_pow(g, (q - 1) // (2 * n), m), m)
    # q = 2 is the only prime without a candidate and it never passes the congruence check
    raise NttUnfriendlyModulus(code="NO_GENERATOR", message=f"no generator found modulo {q}", details={"q": q})


def ntt_prime_candidates(bit_width: int, n: int, seed: int, limit: int = _PRIME_SEARCH_LIMIT) -> Iterator[int]:
    """Yield primes q of exactly ``bit_width`` bits with q = 1 mod 2n.

    The scan starts at a seeded offset among the admissible q and wraps around,
    so results are deterministic per seed.
    """
    if not 2 <= bit_width <= MAX_MODULUS_BITS:
        raise ParameterError(
            code="BIT_WIDTH_OUT_OF_RANGE",
            message=f"bit_width must be in [2, {MAX_MODULUS_BITS}], got {bit_width}",
            details={"bit_width": bit_width},
        )
    require_power_of_two(n)
    step = 2 * n
    lo, hi = 1 << (bit_width - 1), 1 << bit_width
    first = -(-(lo - 1) // step)
    last = (hi - 2) // step
    count = last - first + 1
    if count <= 0:
        return
    start = int(np.random.Generator(np.random.PCG64(seed)).integers(0, count))
    for i in range(min(count, limit)):
        candidate = (first + (start + i) % count) * step + 1
        if is_prime(candidate):
            yield candidate


def generate_ntt_prime(bit_width: int, n: int, seed: int = 0) -> Modulus:
    for candidate in ntt_prime_candidates(bit_width, n, seed):
        return Modulus(candidate)
    raise PrimeSearchError(
        code="NO_NTT_PRIME",
        message=f"no {bit_width}-bit prime q = 1 mod {2 * n} found",
        details={"bit_width": bit_width, "n": n, "seed": seed},
    )
