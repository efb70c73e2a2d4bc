from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from app.errors import ParameterError
from app.kernels.modmath import generate_ntt_prime
from app.kernels.ntt import twiddle_table
from app.kernels.polyring import RingParams, make_rng, random_poly
from app.kernels.rns import build_basis, decompose
from app.costmodel.model import OpKind, estimate, relative_error
from app.costmodel.params import CostParams
from app.pimsim.kernels import DpuKernel
from app.pimsim.ledger import TransferLedger
from app.pimsim.workflow import run_dcrt_mul, run_ntt_staged, run_workflow

LOGGER = logging.getLogger("pimhe.costmodel")

TOLERANCE = 0.01
_SIM_PRIME_BITS = 30


@dataclass(frozen=True)
class ValidationRow:
    n: int
    kernel_error: float
    host_dpu_error: float
    dpu_host_error: float
    bytes_match: bool

    @property
    def max_error(self) -> float:
        return max(self.kernel_error, self.host_dpu_error, self.dpu_host_error)


@dataclass(frozen=True)
class ValidationReport:
    op: OpKind
    rows: tuple[ValidationRow, ...]

    @property
    def max_relative_error(self) -> float:
        return max(row.max_error for row in self.rows)

    @property
    def ok(self) -> bool:
        return self.max_relative_error <= TOLERANCE and all(row.bytes_match for row in self.rows)


def simulate(op: OpKind, n: int, params: CostParams, *, seed: int = 0, towers: int = 1, workers: int = 1) -> TransferLedger:
    """Run the simulator on random operands of size n and return its ledger."""
    cfg = params.dpu
    rng = make_rng(seed)
    if op is OpKind.NTT_TOWER:
        basis = build_basis(towers, _SIM_PRIME_BITS, n, seed)
        p1 = decompose([int(v) for v in rng.integers(0, basis.towers[0].q, size=n)], basis)
        p2 = decompose([int(v) for v in rng.integers(0, basis.towers[0].q, size=n)], basis)
        _, ledger = run_dcrt_mul(p1, p2, None, cfg, workers=workers)
        return ledger
    ring = RingParams(n, generate_ntt_prime(_SIM_PRIME_BITS, n, seed))
    a, b = random_poly(ring, rng), random_poly(ring, rng)
    if op is OpKind.NTT_STAGED:
        _, ledger = run_ntt_staged(a, twiddle_table(n, ring.modulus), cfg, workers=workers)
        return ledger
    if op is OpKind.BUTTERFLY_STAGE:
        kernel = DpuKernel.butterfly_stage(ring.modulus, 0)
        _, ledger = run_workflow(kernel, (a, twiddle_table(n, ring.modulus)), cfg, workers=workers)
        return ledger
    kernel = {
        OpKind.ADD: DpuKernel.poly_add,
        OpKind.CWMUL: DpuKernel.cw_mul,
        OpKind.CONV: DpuKernel.convolution,
    }[op](ring.modulus)
    _, ledger = run_workflow(kernel, (a, b), cfg, workers=workers)
    return ledger


def validate_against_sim(
    op_kind: OpKind | str,
    sizes: Sequence[int],
    params: CostParams | None = None,
    *,
    seed: int = 0,
    towers: int = 1,
    workers: int = 1,
) -> ValidationReport:
    if not sizes:
        raise ParameterError(code="EMPTY_SIZES", message="validate_against_sim needs at least one size")
    params = params or CostParams()
    op = OpKind.parse(op_kind)
    rows = []
    for n in sizes:
        model = estimate(op, n, params, towers=towers)
        ledger = simulate(op, n, params, seed=seed, towers=towers, workers=workers)
        rows.append(
            ValidationRow(
                n=n,
                kernel_error=relative_error(model.dpu_kernel_time_s, ledger.kernel_time),
                host_dpu_error=relative_error(model.host_dpu_time_s, ledger.host_dpu_time),
                dpu_host_error=relative_error(model.dpu_host_time_s, ledger.dpu_host_time),
                bytes_match=(model.host_dpu_bytes, model.dpu_host_bytes) == (ledger.host_dpu_bytes, ledger.dpu_host_bytes),
            )
        )
    report = ValidationReport(op=op, rows=tuple(rows))
    LOGGER.info("model validated against simulator", extra={"op": op.value, "max_error": report.max_relative_error})
    return report
