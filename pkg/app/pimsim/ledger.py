"""Transfer/launch accounting and the timing formulas shared with the cost model."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

from app.kernels.counters import OpCounter
from app.pimsim.config import DpuSystemConfig


def transfer_time(cfg: DpuSystemConfig, num_transfers: int, max_dpu_bytes: int) -> float:
    """Per-DPU transfers run in parallel; every (DPU, buffer) transfer pays the setup latency."""
    if max_dpu_bytes == 0:
        streaming = 0.0
    elif cfg.per_dpu_bandwidth_bytes_per_s == 0:
        streaming = math.inf
    else:
        streaming = max_dpu_bytes / cfg.per_dpu_bandwidth_bytes_per_s
    return cfg.per_transfer_latency_s * num_transfers + streaming


def dpu_cycles(cfg: DpuSystemConfig, tasklet_cycles: Sequence[float], serial_cycles: float = 0.0) -> float:
    """Cycles of one DPU running its tasklets through the shared pipeline.

    With fewer tasklets than pipeline stages the busiest tasklet issues only every
    ``pipeline_depth`` cycles; work done by a single tasklet after a barrier is
    serial and pays the full depth per instruction.
    """
    if not tasklet_cycles:
        return cfg.pipeline_depth * serial_cycles
    parallel = max(sum(tasklet_cycles), cfg.pipeline_depth * max(tasklet_cycles))
    return parallel + cfg.pipeline_depth * serial_cycles


def launch_time(cfg: DpuSystemConfig, active_dpus: int, max_cycles: float) -> float:
    return cfg.launch_overhead_s * cfg.ranks(active_dpus) + max_cycles / cfg.dpu_freq_hz


@dataclass
class TransferLedger:
    host_dpu_bytes: int = 0
    dpu_host_bytes: int = 0
    host_dpu_time: float = 0.0
    dpu_host_time: float = 0.0
    kernel_time: float = 0.0
    launches: int = 0
    host_dpu_transfers: int = 0
    dpu_host_transfers: int = 0
    scatter_rounds: int = 0
    gather_rounds: int = 0
    dpu_ops: OpCounter = field(default_factory=OpCounter)

    @property
    def copy_time(self) -> float:
        return self.host_dpu_time + self.dpu_host_time

    @property
    def total_time(self) -> float:
        return self.kernel_time + self.copy_time

    def record_host_to_dpu(self, cfg: DpuSystemConfig, per_dpu_bytes: Sequence[int], num_transfers: int) -> None:
        self.host_dpu_bytes += sum(per_dpu_bytes)
        self.host_dpu_transfers += num_transfers
        self.host_dpu_time += transfer_time(cfg, num_transfers, max(per_dpu_bytes, default=0))

    def record_dpu_to_host(self, cfg: DpuSystemConfig, per_dpu_bytes: Sequence[int], num_transfers: int) -> None:
        self.dpu_host_bytes += sum(per_dpu_bytes)
        self.dpu_host_transfers += num_transfers
        self.dpu_host_time += transfer_time(cfg, num_transfers, max(per_dpu_bytes, default=0))

    def record_launch(self, cfg: DpuSystemConfig, per_dpu_cycles: Sequence[float], ops: OpCounter) -> None:
        self.launches += 1
        self.kernel_time += launch_time(cfg, len(per_dpu_cycles), max(per_dpu_cycles, default=0.0))
        self.dpu_ops.merge(ops)

    def merge(self, other: TransferLedger) -> None:
        self.host_dpu_bytes += other.host_dpu_bytes
        self.dpu_host_bytes += other.dpu_host_bytes
        self.host_dpu_time += other.host_dpu_time
        self.dpu_host_time += other.dpu_host_time
        self.kernel_time += other.kernel_time
        self.launches += other.launches
        self.host_dpu_transfers += other.host_dpu_transfers
        self.dpu_host_transfers += other.dpu_host_transfers
        self.scatter_rounds += other.scatter_rounds
        self.gather_rounds += other.gather_rounds
        self.dpu_ops.merge(other.dpu_ops)

    def as_dict(self) -> dict[str, float | int]:
        return {
            "host_dpu_bytes": self.host_dpu_bytes,
            "dpu_host_bytes": self.dpu_host_bytes,
            "host_dpu_time": self.host_dpu_time,
            "dpu_host_time": self.dpu_host_time,
            "kernel_time": self.kernel_time,
            "launches": self.launches,
            "host_dpu_transfers": self.host_dpu_transfers,
            "dpu_host_transfers": self.dpu_host_transfers,
            "scatter_rounds": self.scatter_rounds,
            "gather_rounds": self.gather_rounds,
        }
