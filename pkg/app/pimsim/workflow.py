"""Host-side orchestration: plan -> scatter -> launch -> gather -> aggregate."""
from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from app.errors import ParameterError
from app.kernels.modmath import mod_add_vec, mod_mul_vec
from app.kernels.ntt import TwiddleTable, bit_reverse, log2_exact, stage_layout
from app.kernels.polyring import ConvolutionResult, Polynomial, Reduction, require_same_ring
from app.kernels.rns import DcrtPolynomial, tower_tables
from app.pimsim.config import DpuSystemConfig
from app.pimsim.kernels import ELEMENT_BYTES, DpuKernel, KernelKind
from app.pimsim.ledger import TransferLedger
from app.pimsim.partition import PartitionPlan, plan_partition, plan_towers
from app.pimsim.system import DpuSet

LOGGER = logging.getLogger("pimhe.pimsim")


def _split(values: np.ndarray, plan: PartitionPlan) -> list[np.ndarray]:
    padded = np.zeros(plan.padded_elements, dtype=np.uint64)
    padded[: len(values)] = values
    return [padded[i * plan.per_dpu : (i + 1) * plan.per_dpu] for i in range(plan.num_dpus)]


def _concat(parts: list[np.ndarray], total: int) -> np.ndarray:
    return np.concatenate(parts)[:total]


def _run_elementwise(kernel: DpuKernel, a: Polynomial, b: Polynomial, cfg: DpuSystemConfig, system: DpuSet) -> Polynomial:
    params = require_same_ring(a, b)
    plan = plan_partition(params.n, cfg, ELEMENT_BYTES)
    system.scatter({"a": _split(a.coeffs, plan), "b": _split(b.coeffs, plan)})
    system.launch(kernel, plan.tasklets)
    out = system.gather()["c"]
    return Polynomial(_concat(out, params.n), params)


def _run_convolution(
    kernel: DpuKernel, a: Polynomial, b: Polynomial, cfg: DpuSystemConfig, system: DpuSet
) -> ConvolutionResult:
    params = require_same_ring(a, b)
    n = params.n
    plan = plan_partition(n, cfg, ELEMENT_BYTES)
    # b is broadcast whole; a is sliced
    system.scatter({"a": _split(a.coeffs, plan), "b": [b.coeffs] * plan.num_dpus})
    system.launch(kernel, plan.tasklets)
    partials = system.gather()["c"]
    total = np.zeros(plan.padded_elements + n - 1, dtype=np.uint64)
    for i, partial in enumerate(partials):
        start = i * plan.per_dpu
        window = slice(start, start + len(partial))
        total[window] = mod_add_vec(total[window], partial, params.modulus)
    return ConvolutionResult(total[: 2 * n - 1], params.modulus)


def _stage_twiddles(table: TwiddleTable, stage: int, inverse: bool, scale: int | None) -> np.ndarray:
    n = table.n
    twiddles = table.inverse_twiddles if inverse else table.forward_twiddles
    _, _, tw = stage_layout(n, stage)
    w = twiddles[tw]
    if scale is not None:
        w = mod_mul_vec(w, np.uint64(scale), table.modulus)
    return w


def _run_butterfly_stage(
    kernel: DpuKernel, state: Polynomial, table: TwiddleTable, cfg: DpuSystemConfig, system: DpuSet
) -> Polynomial:
    n = state.params.n
    if kernel.stage >= log2_exact(n):
        raise ParameterError(
            code="STAGE_OUT_OF_RANGE", message=f"stage {kernel.stage} is out of range for n={n}", details={"n": n}
        )
    upper, lower, _ = stage_layout(n, kernel.stage)
    w = _stage_twiddles(table, kernel.stage, kernel.inverse, kernel.scale)
    plan = plan_partition(n // 2, cfg, ELEMENT_BYTES)
    system.scatter(
        {
            "u": _split(state.coeffs[upper], plan),
            "v": _split(state.coeffs[lower], plan),
            "w": _split(w, plan),
        }
    )
    system.launch(kernel, plan.tasklets)
    gathered = system.gather()
    out = np.empty(n, dtype=np.uint64)
    out[upper] = _concat(gathered["u_out"], n // 2)
    out[lower] = _concat(gathered["v_out"], n // 2)
    return Polynomial(out, state.params)


def _run_tower_mul(
    kernel: DpuKernel, p1: DcrtPolynomial, p2: DcrtPolynomial, tables: Sequence[TwiddleTable], cfg: DpuSystemConfig, system: DpuSet
) -> DcrtPolynomial:
    n, k = p1.n, p1.basis.k
    plan = plan_towers(k, n, cfg)
    buffers: dict[str, list[np.ndarray | None]] = {name: [] for name in ("a", "b", "fwd", "inv")}
    for i in range(plan.num_dpus):
        towers = plan.towers_on(i)
        if not towers:
            for name in buffers:
                buffers[name].append(None)
            continue
        buffers["a"].append(np.concatenate([p1.towers[t].coeffs for t in towers]))
        buffers["b"].append(np.concatenate([p2.towers[t].coeffs for t in towers]))
        buffers["fwd"].append(np.concatenate([tables[t].forward_twiddles for t in towers]))
        buffers["inv"].append(np.concatenate([tables[t].inverse_twiddles for t in towers]))
    system.scatter(buffers)
    system.launch(kernel, plan.tasklets)
    gathered = np.concatenate(system.gather()["c"])
    towers_out = tuple(
        Polynomial(gathered[t * n : (t + 1) * n], p1.towers[t].params) for t in range(k)
    )
    return DcrtPolynomial(towers_out, p1.basis)


def run_workflow(
    kernel: DpuKernel,
    inputs: Sequence,
    cfg: DpuSystemConfig,
    *,
    workers: int = 1,
    ledger: TransferLedger | None = None,
):
    """Run one kernel end to end and return ``(result, ledger)``.

    Inputs per kind: PolyAdd/CwMul/Convolution take ``(a, b)`` polynomials,
    ButterflyStage takes ``(state, table)``, TowerMul takes ``(p1, p2, tables)``.
    """
    cfg.lint()
    result, used = _execute(kernel, inputs, cfg, workers=workers, ledger=ledger)
    LOGGER.info(
        "workflow complete",
        extra={
            "kernel": kernel.kind.value,
            "dpus": cfg.num_dpus,
            "tasklets": cfg.tasklets_per_dpu,
            "host_dpu_bytes": used.host_dpu_bytes,
            "dpu_host_bytes": used.dpu_host_bytes,
            "kernel_time": used.kernel_time,
        },
    )
    return result, used


def _execute(
    kernel: DpuKernel,
    inputs: Sequence,
    cfg: DpuSystemConfig,
    *,
    workers: int,
    ledger: TransferLedger | None,
):
    system = DpuSet(cfg, ledger=ledger, workers=workers)
    if kernel.kind in (KernelKind.POLY_ADD, KernelKind.CW_MUL):
        result = _run_elementwise(kernel, inputs[0], inputs[1], cfg, system)
    elif kernel.kind is KernelKind.CONVOLUTION:
        result = _run_convolution(kernel, inputs[0], inputs[1], cfg, system)
    elif kernel.kind is KernelKind.BUTTERFLY_STAGE:
        result = _run_butterfly_stage(kernel, inputs[0], inputs[1], cfg, system)
    else:
        result = _run_tower_mul(kernel, inputs[0], inputs[1], inputs[2], cfg, system)
    return result, system.ledger


def _staged_transform(
    coeffs: np.ndarray,
    poly: Polynomial,
    table: TwiddleTable,
    cfg: DpuSystemConfig,
    ledger: TransferLedger,
    *,
    inverse: bool,
    workers: int,
) -> Polynomial:
    state = Polynomial(coeffs, poly.params)
    stages = range(log2_exact(table.n) - 1, -1, -1) if inverse else range(log2_exact(table.n))
    for stage in stages:
        scale = table.roots.n_inv if inverse and stage == 0 else None
        kernel = DpuKernel.butterfly_stage(table.modulus, stage, inverse=inverse, scale=scale)
        # every stage is a separate host round trip
        state, _ = _execute(kernel, (state, table), cfg, workers=workers, ledger=ledger)
    return state


def run_ntt_staged(
    poly: Polynomial, table: TwiddleTable, cfg: DpuSystemConfig, *, workers: int = 1
) -> tuple[Polynomial, TransferLedger]:
    """Negacyclic forward NTT as log2(n) ButterflyStage launches; natural-order output."""
    cfg.lint()
    ledger = TransferLedger()
    state = _staged_transform(poly.coeffs, poly, table, cfg, ledger, inverse=False, workers=workers)
    return Polynomial(bit_reverse(state.coeffs), poly.params), ledger


def run_intt_staged(
    poly_hat: Polynomial, table: TwiddleTable, cfg: DpuSystemConfig, *, workers: int = 1
) -> tuple[Polynomial, TransferLedger]:
    ledger = TransferLedger()
    state = _staged_transform(bit_reverse(poly_hat.coeffs), poly_hat, table, cfg, ledger, inverse=True, workers=workers)
    return state, ledger


def run_negacyclic_mul_staged(
    p1: Polynomial, p2: Polynomial, table: TwiddleTable, cfg: DpuSystemConfig, *, workers: int = 1
) -> tuple[Polynomial, TransferLedger]:
    """Transform-based product with every butterfly stage and the pointwise step on the DPUs."""
    cfg.lint()
    params = require_same_ring(p1, p2)
    if params.reduction is not Reduction.NEGACYCLIC:
        raise ParameterError(code="REDUCTION_MISMATCH", message="staged product needs the negacyclic ring")
    ledger = TransferLedger()
    a_hat = _staged_transform(p1.coeffs, p1, table, cfg, ledger, inverse=False, workers=workers)
    b_hat = _staged_transform(p2.coeffs, p2, table, cfg, ledger, inverse=False, workers=workers)
    c_hat, _ = _execute(DpuKernel.cw_mul(table.modulus), (a_hat, b_hat), cfg, workers=workers, ledger=ledger)
    product = _staged_transform(c_hat.coeffs, c_hat, table, cfg, ledger, inverse=True, workers=workers)
    return product, ledger


def run_dcrt_mul(
    p1: DcrtPolynomial,
    p2: DcrtPolynomial,
    tables: Sequence[TwiddleTable] | None,
    cfg: DpuSystemConfig,
    *,
    workers: int = 1,
) -> tuple[DcrtPolynomial, TransferLedger]:
    """Single-shot DCRT product: whole towers computed DPU-locally in one launch."""
    if p1.basis.moduli != p2.basis.moduli or p1.n != p2.n:
        raise ParameterError(code="BASIS_MISMATCH", message="operands use different bases or dimensions")
    tables = list(tables) if tables is not None else tower_tables(p1.basis, p1.n)
    plan = plan_towers(p1.basis.k, p1.n, cfg)
    kernel = DpuKernel.tower_mul(
        p1.basis.towers, tuple(t.roots.n_inv for t in tables), p1.n, towers_per_dpu=plan.per_dpu
    )
    return run_workflow(kernel, (p1, p2, tables), cfg, workers=workers)
