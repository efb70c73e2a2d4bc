"""Residue number system bases and DCRT polynomials.

A big modulus Q = q_0 * ... * q_{k-1} is represented by k word-size towers. Tower
operations are independent of each other; ``order`` and ``workers`` only change the
evaluation schedule, never the result.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import prod

import numpy as np

from app.errors import NttUnfriendlyModulus, ParameterError, PrimeSearchError
from app.kernels.counters import OpCounter
from app.kernels.modmath import Modulus, mod_inv, ntt_prime_candidates
from app.kernels.ntt import TwiddleTable, fast_negacyclic_mul, ntt_forward_nwc, ntt_inverse_nwc, twiddle_table
from app.kernels.polyring import Polynomial, Reduction, RingParams, poly_add


@dataclass(frozen=True)
class RnsBasis:
    towers: tuple[Modulus, ...]
    n: int | None = None
    big_q: int = field(init=False)
    garner_constants: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        towers = tuple(self.towers)
        if not towers:
            raise ParameterError(code="EMPTY_BASIS", message="an RNS basis needs at least one tower")
        moduli = [m.q for m in towers]
        if len(set(moduli)) != len(moduli):
            raise ParameterError(
                code="BASIS_NOT_COPRIME", message="tower moduli must be distinct primes", details={"moduli": moduli}
            )
        if self.n is not None:
            unfriendly = [q for q in moduli if (q - 1) % (2 * self.n)]
            if unfriendly:
                raise NttUnfriendlyModulus(
                    code="NTT_UNFRIENDLY_MODULUS",
                    message=f"towers {unfriendly} are not congruent to 1 mod {2 * self.n}",
                    details={"n": self.n, "moduli": unfriendly},
                )
        # C_i = (q_0 * ... * q_{i-1})^-1 mod q_i; C_0 is unused and kept as 1
        constants = [1]
        for i in range(1, len(towers)):
            constants.append(mod_inv(prod(moduli[:i]) % moduli[i], towers[i]))
        object.__setattr__(self, "towers", towers)
        object.__setattr__(self, "big_q", prod(moduli))
        object.__setattr__(self, "garner_constants", tuple(constants))

    @property
    def k(self) -> int:
        return len(self.towers)

    @property
    def moduli(self) -> list[int]:
        return [m.q for m in self.towers]

    @classmethod
    def from_moduli(cls, moduli: Sequence[int], n: int | None = None) -> RnsBasis:
        return cls(tuple(Modulus(int(q)) for q in moduli), n=n)

    def residues(self, value: int) -> tuple[int, ...]:
        """Residues of a single integer in [0, big_q)."""
        _check_range([value], self)
        return tuple(value % q for q in self.moduli)

    def combine(self, residues: Sequence[int]) -> int:
        if len(residues) != self.k:
            raise ParameterError(
                code="BASIS_MISMATCH",
                message=f"expected {self.k} residues, got {len(residues)}",
                details={"moduli": self.moduli},
            )
        return int(_garner([int(r) for r in residues], self))


def build_basis(k: int, bit_width: int, n: int, seed: int = 0) -> RnsBasis:
    """k distinct NTT-friendly primes of ``bit_width`` bits, deterministic per seed."""
    if k < 1:
        raise ParameterError(code="INVALID_TOWER_COUNT", message=f"k must be >= 1, got {k}", details={"k": k})
    primes: list[int] = []
    for candidate in ntt_prime_candidates(bit_width, n, seed):
        primes.append(candidate)
        if len(primes) == k:
            return RnsBasis.from_moduli(primes, n=n)
    raise PrimeSearchError(
        code="INSUFFICIENT_PRIMES",
        message=f"only {len(primes)} of {k} {bit_width}-bit primes = 1 mod {2 * n} found",
        details={"k": k, "bit_width": bit_width, "n": n, "found": len(primes)},
    )


@dataclass(frozen=True)
class DcrtPolynomial:
    towers: tuple[Polynomial, ...]
    basis: RnsBasis
    ntt_form: bool = False

    def __post_init__(self) -> None:
        towers = tuple(self.towers)
        if len(towers) != self.basis.k:
            raise ParameterError(
                code="BASIS_MISMATCH",
                message=f"expected {self.basis.k} towers, got {len(towers)}",
            )
        dims = {p.params.n for p in towers}
        if len(dims) != 1:
            raise ParameterError(code="DIMENSION_MISMATCH", message=f"towers disagree on n: {sorted(dims)}")
        for poly, m in zip(towers, self.basis.towers):
            if poly.params.modulus != m:
                raise ParameterError(
                    code="BASIS_MISMATCH",
                    message=f"tower over q={poly.params.q} does not match basis modulus {m.q}",
                )
        object.__setattr__(self, "towers", towers)

    @property
    def n(self) -> int:
        return self.towers[0].params.n

    @property
    def reduction(self) -> Reduction:
        return self.towers[0].params.reduction


def _tower_params(basis: RnsBasis, n: int, reduction: Reduction) -> list[RingParams]:
    return [RingParams(n, m, reduction) for m in basis.towers]


def dcrt_from_polynomials(polys: Sequence[Polynomial], basis: RnsBasis) -> DcrtPolynomial:
    return DcrtPolynomial(tuple(polys), basis)


def _check_range(values: Sequence[int], basis: RnsBasis) -> None:
    if any(v < 0 or v >= basis.big_q for v in values):
        raise ParameterError(
            code="COEFFICIENT_OUT_OF_RANGE",
            message=f"coefficients must lie in [0, {basis.big_q})",
            details={"big_q": basis.big_q},
        )


def decompose(
    coeffs: Sequence[int], basis: RnsBasis, reduction: Reduction = Reduction.NEGACYCLIC
) -> DcrtPolynomial:
    """Split a coefficient vector into towers.

    ``coeffs`` is a whole ring element, so its length must be a valid ring
    dimension. Single integers go through ``RnsBasis.residues`` and ``RnsBasis.combine``.
    """
    values = np.array([int(c) for c in coeffs], dtype=object)
    _check_range(values.tolist(), basis)
    towers = [
        Polynomial((values % params.q).astype(np.uint64), params)
        for params in _tower_params(basis, len(values), reduction)
    ]
    return DcrtPolynomial(tuple(towers), basis)


def _garner(residues, basis: RnsBasis):
    # works on ints and on object arrays alike
    x = residues[0]
    radix = 1
    for i in range(1, basis.k):
        q_i = basis.towers[i].q
        radix *= basis.towers[i - 1].q
        digit = ((residues[i] - x) % q_i) * basis.garner_constants[i] % q_i
        x = x + digit * radix
    return x


def reconstruct(p: DcrtPolynomial, basis: RnsBasis) -> list[int]:
    """Garner's mixed-radix CRT, vectorised over coefficients."""
    _require_basis(p, basis)
    x = _garner([t.coeffs.astype(object) for t in p.towers], basis)
    return [int(v) for v in x]


def reconstruct_centered(p: DcrtPolynomial, basis: RnsBasis) -> list[int]:
    half = basis.big_q // 2
    return [v - basis.big_q if v > half else v for v in reconstruct(p, basis)]


def _require_basis(p: DcrtPolynomial, basis: RnsBasis) -> None:
    if p.basis.moduli != basis.moduli:
        raise ParameterError(
            code="BASIS_MISMATCH",
            message="polynomial and basis disagree on tower moduli",
            details={"polynomial": p.basis.moduli, "basis": basis.moduli},
        )


def _require_compatible(p1: DcrtPolynomial, p2: DcrtPolynomial) -> None:
    _require_basis(p1, p2.basis)
    if p1.n != p2.n or p1.ntt_form != p2.ntt_form:
        raise ParameterError(code="DIMENSION_MISMATCH", message="operands differ in dimension or representation")


def _schedule(k: int, order: Sequence[int] | None) -> list[int]:
    if order is None:
        return list(range(k))
    order = [int(i) for i in order]
    if sorted(order) != list(range(k)):
        raise ParameterError(
            code="INVALID_TOWER_ORDER", message=f"order must be a permutation of range({k})", details={"order": order}
        )
    return order


def map_towers(
    fn: Callable[[int], Polynomial], k: int, *, order: Sequence[int] | None = None, workers: int = 1
) -> list[Polynomial]:
    """Evaluate ``fn(i)`` for every tower, in ``order``, on up to ``workers`` threads."""
    schedule = _schedule(k, order)
    results: list[Polynomial | None] = [None] * k
    if workers > 1 and k > 1:
        with ThreadPoolExecutor(max_workers=min(workers, k)) as pool:
            for i, poly in zip(schedule, pool.map(fn, schedule)):
                results[i] = poly
    else:
        for i in schedule:
            results[i] = fn(i)
    return results  # type: ignore[return-value]


def dcrt_add(
    p1: DcrtPolynomial, p2: DcrtPolynomial, *, order: Sequence[int] | None = None, workers: int = 1
) -> DcrtPolynomial:
    _require_compatible(p1, p2)
    towers = map_towers(lambda i: poly_add(p1.towers[i], p2.towers[i]), p1.basis.k, order=order, workers=workers)
    return DcrtPolynomial(tuple(towers), p1.basis, p1.ntt_form)


def tower_tables(basis: RnsBasis, n: int) -> list[TwiddleTable]:
    return [twiddle_table(n, m) for m in basis.towers]


def dcrt_mul(
    p1: DcrtPolynomial,
    p2: DcrtPolynomial,
    tables: Sequence[TwiddleTable] | None = None,
    *,
    order: Sequence[int] | None = None,
    workers: int = 1,
    counter: OpCounter | None = None,
) -> DcrtPolynomial:
    _require_compatible(p1, p2)
    if p1.ntt_form:
        raise ParameterError(code="REPRESENTATION_MISMATCH", message="dcrt_mul expects coefficient-form towers")
    tables = list(tables) if tables is not None else tower_tables(p1.basis, p1.n)
    if len(tables) != p1.basis.k:
        raise ParameterError(code="BASIS_MISMATCH", message=f"expected {p1.basis.k} twiddle tables, got {len(tables)}")
    # one counter per tower, merged in index order
    counters = [OpCounter() for _ in range(p1.basis.k)]
    towers = map_towers(
        lambda i: fast_negacyclic_mul(p1.towers[i], p2.towers[i], tables[i], counters[i]),
        p1.basis.k,
        order=order,
        workers=workers,
    )
    if counter is not None:
        for c in counters:
            counter.merge(c)
    return DcrtPolynomial(tuple(towers), p1.basis)


def dcrt_to_ntt(p: DcrtPolynomial, tables: Sequence[TwiddleTable] | None = None) -> DcrtPolynomial:
    if p.ntt_form:
        return p
    tables = list(tables) if tables is not None else tower_tables(p.basis, p.n)
    towers = tuple(ntt_forward_nwc(tower, table) for tower, table in zip(p.towers, tables))
    return DcrtPolynomial(towers, p.basis, ntt_form=True)


def dcrt_from_ntt(p: DcrtPolynomial, tables: Sequence[TwiddleTable] | None = None) -> DcrtPolynomial:
    if not p.ntt_form:
        return p
    tables = list(tables) if tables is not None else tower_tables(p.basis, p.n)
    towers = tuple(ntt_inverse_nwc(tower, table) for tower, table in zip(p.towers, tables))
    return DcrtPolynomial(towers, p.basis)


def exact_negacyclic_product(
    a: Sequence[int],
    b: Sequence[int],
    basis: RnsBasis,
    *,
    workers: int = 1,
    counter: OpCounter | None = None,
) -> list[int]:
    """Integer product of two signed coefficient vectors modulo x^n + 1, without any mod q.

    The basis must be large enough that every product coefficient fits in (-Q/2, Q/2].
    """
    n = len(a)
    bound = n * max((abs(int(v)) for v in a), default=0) * max((abs(int(v)) for v in b), default=0)
    if 2 * bound >= basis.big_q:
        raise ParameterError(
            code="AUX_BASIS_TOO_SMALL",
            message=f"auxiliary modulus of {basis.big_q.bit_length()} bits cannot hold products of {bound.bit_length()} bits",
            details={"needed_bits": bound.bit_length() + 1, "basis_bits": basis.big_q.bit_length()},
        )
    big_q = basis.big_q
    pa = decompose([int(v) % big_q for v in a], basis)
    pb = decompose([int(v) % big_q for v in b], basis)
    return reconstruct_centered(dcrt_mul(pa, pb, workers=workers, counter=counter), basis)
