"""Analytic CPU vs PIM timing.

The DPU side evaluates the same partitioning and timing formulas the simulator
charges, without moving any data, so model and simulator agree to rounding.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from app.errors import MramOverflow, ParameterError
from app.kernels.counters import OpCounter
from app.kernels.ntt import log2_exact, negacyclic_mul_op_counts
from app.costmodel.params import CostParams
from app.pimsim.config import DpuSystemConfig
from app.pimsim.kernels import ELEMENT_BYTES
from app.pimsim.ledger import dpu_cycles, launch_time, transfer_time
from app.pimsim.partition import plan_partition, plan_towers

LOGGER = logging.getLogger("pimhe.costmodel")

CROSSOVER_MIN_LOG_N = 4
CROSSOVER_MAX_LOG_N = 24


class OpKind(str, Enum):
    ADD = "add"
    CWMUL = "cwmul"
    CONV = "conv"
    BUTTERFLY_STAGE = "butterfly-stage"
    # log2(n) butterfly-stage round trips
    NTT_STAGED = "ntt-stage"
    # transform-based product computed DPU-locally, one launch per set of towers
    NTT_TOWER = "ntt"

    @classmethod
    def parse(cls, value: str | OpKind) -> OpKind:
        try:
            return cls(value)
        except ValueError:
            raise ParameterError(
                code="UNKNOWN_OP_KIND",
                message=f"unknown op kind {value!r}; expected one of {[k.value for k in cls]}",
                details={"op": str(value)},
            ) from None


def _check_n(n: int) -> None:
    if n < 1:
        raise ParameterError(code="INVALID_SIZE", message=f"n must be >= 1, got {n}", details={"n": n})


def op_counts(op_kind: OpKind | str, n: int, towers: int = 1) -> OpCounter:
    """Modular operations the kernel performs on n coefficients (address arithmetic ignored)."""
    op = OpKind.parse(op_kind)
    _check_n(n)
    if op is OpKind.ADD:
        return OpCounter(mod_adds=n)
    if op is OpKind.CWMUL:
        return OpCounter(mod_muls=n)
    if op is OpKind.CONV:
        return OpCounter(mod_adds=(n - 1) ** 2, mod_muls=n * n)
    if op is OpKind.BUTTERFLY_STAGE:
        return OpCounter(mod_adds=n, mod_muls=n // 2)
    if op is OpKind.NTT_STAGED:
        stages = log2_exact(n)
        return OpCounter(mod_adds=n * stages, mod_muls=(n // 2) * stages)
    per_tower = negacyclic_mul_op_counts(n)
    return OpCounter(mod_adds=per_tower.mod_adds * towers, mod_muls=per_tower.mod_muls * towers)


def copied_elements(op_kind: OpKind | str, n: int, towers: int = 1) -> int:
    """Elements moved between host and DPUs in the accounting of the alpha ratio."""
    op = OpKind.parse(op_kind)
    if op in (OpKind.ADD, OpKind.CWMUL, OpKind.CONV):
        # two n-coefficient operands in, one n-coefficient result out
        return 3 * n
    if op is OpKind.BUTTERFLY_STAGE:
        return 5 * n // 2
    if op is OpKind.NTT_STAGED:
        return 5 * n // 2 * log2_exact(n)
    return 5 * n * towers


def alpha_ratio(op_kind: OpKind | str, n: int, towers: int = 1) -> Fraction:
    """On-DPU operations per element copied. Exact rational."""
    _check_n(n)
    ops = op_counts(op_kind, n, towers)
    return Fraction(ops.mod_adds + ops.mod_muls, copied_elements(op_kind, n, towers))


@dataclass(frozen=True)
class DpuTerms:
    host_dpu_bytes: int
    dpu_host_bytes: int
    host_dpu_time_s: float
    dpu_host_time_s: float
    kernel_time_s: float
    launches: int
    resident_bytes: int


def _even_split(tasklets: int, per_tasklet_cycles: float) -> list[float]:
    return [per_tasklet_cycles] * tasklets


def _elementwise_terms(cfg: DpuSystemConfig, n: int, cycles_per_element: float) -> DpuTerms:
    plan = plan_partition(n, cfg, ELEMENT_BYTES)
    nd_bytes = plan.per_dpu_bytes
    cycles = dpu_cycles(cfg, _even_split(plan.tasklets, plan.per_tasklet * cycles_per_element))
    return DpuTerms(
        host_dpu_bytes=2 * plan.num_dpus * nd_bytes,
        dpu_host_bytes=plan.num_dpus * nd_bytes,
        host_dpu_time_s=transfer_time(cfg, 2 * plan.num_dpus, 2 * nd_bytes),
        dpu_host_time_s=transfer_time(cfg, plan.num_dpus, nd_bytes),
        kernel_time_s=launch_time(cfg, plan.num_dpus, cycles),
        launches=1,
        resident_bytes=3 * nd_bytes,
    )


def _convolution_terms(cfg: DpuSystemConfig, n: int) -> DpuTerms:
    plan = plan_partition(n, cfg, ELEMENT_BYTES)
    nd, nt, t = plan.per_dpu, plan.per_tasklet, plan.tasklets
    in_bytes = (nd + n) * ELEMENT_BYTES
    out_bytes = (nd + n - 1) * ELEMENT_BYTES
    per_tasklet = nt * n * cfg.mul_cycles + (nt - 1) * (n - 1) * cfg.add_cycles
    serial = (t - 1) * (n - 1) * cfg.add_cycles
    cycles = dpu_cycles(cfg, _even_split(t, per_tasklet), serial)
    return DpuTerms(
        host_dpu_bytes=plan.num_dpus * in_bytes,
        dpu_host_bytes=plan.num_dpus * out_bytes,
        host_dpu_time_s=transfer_time(cfg, 2 * plan.num_dpus, in_bytes),
        dpu_host_time_s=transfer_time(cfg, plan.num_dpus, out_bytes),
        kernel_time_s=launch_time(cfg, plan.num_dpus, cycles),
        launches=1,
        resident_bytes=in_bytes + out_bytes,
    )


def _stage_terms(cfg: DpuSystemConfig, n: int) -> DpuTerms:
    plan = plan_partition(n // 2, cfg, ELEMENT_BYTES)
    nd_bytes = plan.per_dpu_bytes
    per_tasklet = plan.per_tasklet * (cfg.mul_cycles + 2 * cfg.add_cycles)
    cycles = dpu_cycles(cfg, _even_split(plan.tasklets, per_tasklet))
    return DpuTerms(
        host_dpu_bytes=3 * plan.num_dpus * nd_bytes,
        dpu_host_bytes=2 * plan.num_dpus * nd_bytes,
        host_dpu_time_s=transfer_time(cfg, 3 * plan.num_dpus, 3 * nd_bytes),
        dpu_host_time_s=transfer_time(cfg, 2 * plan.num_dpus, 2 * nd_bytes),
        kernel_time_s=launch_time(cfg, plan.num_dpus, cycles),
        launches=1,
        resident_bytes=5 * nd_bytes,
    )


def _tower_terms(cfg: DpuSystemConfig, n: int, towers: int) -> DpuTerms:
    plan = plan_towers(towers, n, cfg)
    t = plan.tasklets
    ops = negacyclic_mul_op_counts(n)
    adds, muls = ops.mod_adds * plan.per_dpu, ops.mod_muls * plan.per_dpu
    share_adds, share_muls = adds // t, muls // t
    tasklet_cycles = [share_adds * cfg.add_cycles + share_muls * cfg.mul_cycles] * (t - 1)
    tasklet_cycles.append((adds - share_adds * (t - 1)) * cfg.add_cycles + (muls - share_muls * (t - 1)) * cfg.mul_cycles)
    tower_bytes = n * ELEMENT_BYTES
    busiest = plan.per_dpu * tower_bytes
    return DpuTerms(
        host_dpu_bytes=4 * towers * tower_bytes,
        dpu_host_bytes=towers * tower_bytes,
        host_dpu_time_s=transfer_time(cfg, 4 * plan.active_dpus, 4 * busiest),
        dpu_host_time_s=transfer_time(cfg, plan.active_dpus, busiest),
        kernel_time_s=launch_time(cfg, plan.active_dpus, dpu_cycles(cfg, tasklet_cycles)),
        launches=1,
        resident_bytes=5 * busiest,
    )


def dpu_terms(op_kind: OpKind | str, n: int, cfg: DpuSystemConfig, towers: int = 1) -> DpuTerms:
    op = OpKind.parse(op_kind)
    _check_n(n)
    if op is OpKind.ADD:
        terms = _elementwise_terms(cfg, n, cfg.add_cycles)
    elif op is OpKind.CWMUL:
        terms = _elementwise_terms(cfg, n, cfg.mul_cycles)
    elif op is OpKind.CONV:
        terms = _convolution_terms(cfg, n)
    elif op is OpKind.BUTTERFLY_STAGE:
        terms = _stage_terms(cfg, n)
    elif op is OpKind.NTT_STAGED:
        stage = _stage_terms(cfg, n)
        rounds = log2_exact(n)
        terms = DpuTerms(
            host_dpu_bytes=stage.host_dpu_bytes * rounds,
            dpu_host_bytes=stage.dpu_host_bytes * rounds,
            host_dpu_time_s=stage.host_dpu_time_s * rounds,
            dpu_host_time_s=stage.dpu_host_time_s * rounds,
            kernel_time_s=stage.kernel_time_s * rounds,
            launches=rounds,
            resident_bytes=stage.resident_bytes,
        )
    else:
        terms = _tower_terms(cfg, n, towers)
    if terms.resident_bytes > cfg.mram_bytes:
        raise MramOverflow(
            code="MRAM_OVERFLOW",
            message=f"{op.value} at n={n} needs {terms.resident_bytes} resident bytes per DPU",
            details={"op": op.value, "n": n, "mram_bytes": cfg.mram_bytes},
        )
    return terms


@dataclass(frozen=True)
class CostEstimate:
    op: OpKind
    n: int
    num_dpus: int
    cpu_time_s: float
    cpu_single_thread_time_s: float
    dpu_kernel_time_s: float
    host_dpu_time_s: float
    dpu_host_time_s: float
    host_dpu_bytes: int
    dpu_host_bytes: int
    alpha: Fraction

    @property
    def dpu_total_time_s(self) -> float:
        return self.dpu_kernel_time_s + self.host_dpu_time_s + self.dpu_host_time_s

    @property
    def winner(self) -> str:
        return "pim" if self.dpu_total_time_s < self.cpu_time_s else "cpu"

    @property
    def winner_kernel_only(self) -> str:
        return "pim" if self.dpu_kernel_time_s < self.cpu_time_s else "cpu"

    def as_dict(self) -> dict[str, object]:
        return {
            "op": self.op.value,
            "n": self.n,
            "num_dpus": self.num_dpus,
            "cpu_time_s": self.cpu_time_s,
            "cpu_single_thread_time_s": self.cpu_single_thread_time_s,
            "dpu_kernel_time_s": self.dpu_kernel_time_s,
            "host_dpu_time_s": self.host_dpu_time_s,
            "dpu_host_time_s": self.dpu_host_time_s,
            "dpu_total_time_s": self.dpu_total_time_s,
            "host_dpu_bytes": self.host_dpu_bytes,
            "dpu_host_bytes": self.dpu_host_bytes,
            "alpha": str(self.alpha),
            "winner": self.winner,
            "winner_kernel_only": self.winner_kernel_only,
        }


def cpu_times(op_kind: OpKind | str, n: int, params: CostParams, towers: int = 1) -> tuple[float, float]:
    """(multithreaded, single-threaded) CPU seconds: op cycles with a DRAM streaming floor."""
    ops = op_counts(op_kind, n, towers)
    cycles = ops.cycles(params.cpu_cycles_per_add, params.cpu_cycles_per_mul)
    streamed = copied_elements(op_kind, n, towers) * ELEMENT_BYTES / params.dram_bandwidth_bytes_per_s
    compute = cycles / params.cpu_freq_hz
    return max(compute / params.cpu_threads, streamed), max(compute, streamed)


def estimate(
    op_kind: OpKind | str, n: int, params: CostParams | None = None, *, towers: int = 1
) -> CostEstimate:
    params = params or CostParams()
    op = OpKind.parse(op_kind)
    terms = dpu_terms(op, n, params.dpu, towers)
    cpu, single = cpu_times(op, n, params, towers)
    return CostEstimate(
        op=op,
        n=n,
        num_dpus=params.dpu.num_dpus,
        cpu_time_s=cpu,
        cpu_single_thread_time_s=single,
        dpu_kernel_time_s=terms.kernel_time_s,
        host_dpu_time_s=terms.host_dpu_time_s,
        dpu_host_time_s=terms.dpu_host_time_s,
        host_dpu_bytes=terms.host_dpu_bytes,
        dpu_host_bytes=terms.dpu_host_bytes,
        alpha=alpha_ratio(op, n, towers),
    )


def crossover_n(
    op_kind: OpKind | str,
    params: CostParams | None = None,
    *,
    min_log_n: int = CROSSOVER_MIN_LOG_N,
    max_log_n: int = CROSSOVER_MAX_LOG_N,
) -> int | None:
    """Smallest power-of-two n where PIM with copies beats the CPU; sizes that overflow MRAM are skipped."""
    params = params or CostParams()
    for log_n in range(min_log_n, max_log_n + 1):
        try:
            est = estimate(op_kind, 1 << log_n, params)
        except MramOverflow:
            continue
        if est.dpu_total_time_s < est.cpu_time_s:
            return 1 << log_n
    return None


@dataclass(frozen=True)
class ScalingReport:
    op: OpKind
    n: int
    estimates: tuple[CostEstimate, ...]

    @property
    def sweet_spot(self) -> int:
        best = min(self.estimates, key=lambda e: e.dpu_total_time_s)
        return best.num_dpus


def scaling_sweep(
    op_kind: OpKind | str, n: int, dpu_counts: Sequence[int], params: CostParams | None = None
) -> ScalingReport:
    if not dpu_counts:
        raise ParameterError(code="EMPTY_SWEEP", message="dpu_counts must not be empty")
    params = params or CostParams()
    op = OpKind.parse(op_kind)
    estimates = tuple(estimate(op, n, params.with_dpus(count)) for count in dpu_counts)
    totals = [e.dpu_total_time_s for e in estimates]
    if any(later > earlier for earlier, later in zip(totals, totals[1:])):
        LOGGER.warning(
            "DPU scaling is not monotone",
            extra={"op": op.value, "n": n, "sweet_spot": ScalingReport(op, n, estimates).sweet_spot},
        )
    return ScalingReport(op=op, n=n, estimates=estimates)


def relative_error(model: float, simulated: float) -> float:
    if model == simulated:
        return 0.0
    if math.isinf(model) or math.isinf(simulated):
        return math.inf
    return abs(simulated - model) / max(abs(model), 1e-300)
