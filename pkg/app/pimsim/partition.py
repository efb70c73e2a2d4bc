from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass
from math import gcd

from app.errors import AlignmentError, IndivisibleError, MramOverflow, ParameterError
from app.pimsim.config import DpuSystemConfig

TRANSFER_ALIGNMENT = 8


@dataclass(frozen=True)
class PartitionPlan:
    """Even split of a vector over N DPUs and T tasklets per DPU.

    Ranges are inclusive, DPU i covers [i*N_D, (i+1)*N_D - 1] and tasklet (i, j)
    covers [i*N_D + j*N_T, i*N_D + (j+1)*N_T - 1]. Elements past ``total_elements``
    are zero padding.
    """

    total_elements: int
    padded_elements: int
    num_dpus: int
    tasklets: int
    per_dpu: int
    per_tasklet: int
    element_bytes: int

    @property
    def per_dpu_bytes(self) -> int:
        return self.per_dpu * self.element_bytes

    @property
    def padding(self) -> int:
        return self.padded_elements - self.total_elements

    def dpu_range(self, i: int) -> tuple[int, int]:
        return i * self.per_dpu, (i + 1) * self.per_dpu - 1

    def tasklet_range(self, i: int, j: int) -> tuple[int, int]:
        start = i * self.per_dpu + j * self.per_tasklet
        return start, start + self.per_tasklet - 1

    def ranges(self) -> Iterator[tuple[int, int, int, int]]:
        for i in range(self.num_dpus):
            for j in range(self.tasklets):
                yield (i, j, *self.tasklet_range(i, j))


def plan_partition(
    total: int,
    cfg: DpuSystemConfig,
    element_bytes: int = 8,
    *,
    tasklets: int | None = None,
    num_dpus: int | None = None,
) -> PartitionPlan:
    if total < 1 or element_bytes < 1:
        raise ParameterError(
            code="INVALID_PARTITION",
            message=f"total and element_bytes must be positive, got {total} and {element_bytes}",
        )
    n_dpus = num_dpus or cfg.num_dpus
    n_tasklets = tasklets or cfg.tasklets_per_dpu
    details = {"total": total, "num_dpus": n_dpus, "tasklets": n_tasklets, "element_bytes": element_bytes}

    if cfg.padding:
        # smallest per-tasklet element count whose byte extent is 8-byte aligned
        granule = TRANSFER_ALIGNMENT // gcd(TRANSFER_ALIGNMENT, element_bytes)
        unit = n_dpus * n_tasklets * granule
        padded = -(-total // unit) * unit
    else:
        if total % n_dpus:
            raise IndivisibleError(
                code="INDIVISIBLE_PARTITION", message=f"{n_dpus} DPUs do not divide {total} elements", details=details
            )
        if (total // n_dpus) % n_tasklets:
            raise IndivisibleError(
                code="INDIVISIBLE_PARTITION",
                message=f"{n_tasklets} tasklets do not divide {total // n_dpus} elements per DPU",
                details=details,
            )
        padded = total
    per_dpu = padded // n_dpus
    per_tasklet = per_dpu // n_tasklets
    if (per_tasklet * element_bytes) % TRANSFER_ALIGNMENT:
        raise AlignmentError(
            code="MISALIGNED_TRANSFER",
            message=f"per-tasklet extent of {per_tasklet * element_bytes} bytes is not {TRANSFER_ALIGNMENT}-byte aligned",
            details=details,
        )
    if per_dpu * element_bytes > cfg.mram_bytes:
        raise MramOverflow(
            code="MRAM_OVERFLOW",
            message=f"{per_dpu * element_bytes} bytes per DPU exceed the {cfg.mram_bytes}-byte MRAM",
            details=details,
        )
    return PartitionPlan(
        total_elements=total,
        padded_elements=padded,
        num_dpus=n_dpus,
        tasklets=n_tasklets,
        per_dpu=per_dpu,
        per_tasklet=per_tasklet,
        element_bytes=element_bytes,
    )


@dataclass(frozen=True)
class TowerPlan:
    """Whole RNS towers placed on DPUs; DPU i holds towers [i*per_dpu, (i+1)*per_dpu)."""

    towers: int
    n: int
    num_dpus: int
    tasklets: int
    per_dpu: int

    @property
    def active_dpus(self) -> int:
        return -(-self.towers // self.per_dpu)

    def towers_on(self, i: int) -> range:
        return range(i * self.per_dpu, min((i + 1) * self.per_dpu, self.towers))


def plan_towers(towers: int, n: int, cfg: DpuSystemConfig, buffers: int = 5) -> TowerPlan:
    """``buffers`` is the number of n-element arrays each tower keeps resident."""
    if towers < 1:
        raise ParameterError(code="INVALID_PARTITION", message="at least one tower is required")
    per_dpu = -(-towers // cfg.num_dpus)
    resident = per_dpu * buffers * n * 8
    if resident > cfg.mram_bytes:
        raise MramOverflow(
            code="MRAM_OVERFLOW",
            message=f"{per_dpu} towers of n={n} need {resident} bytes, MRAM holds {cfg.mram_bytes}",
            details={"towers": towers, "n": n},
        )
    return TowerPlan(towers=towers, n=n, num_dpus=cfg.num_dpus, tasklets=cfg.tasklets_per_dpu, per_dpu=per_dpu)
