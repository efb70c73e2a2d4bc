from __future__ import annotations

import logging

from pydantic import BaseModel, ConfigDict, field_validator

LOGGER = logging.getLogger("pimhe.pimsim")

MAX_TASKLETS = 24
RECOMMENDED_MIN_TASKLETS = 11


class DpuSystemConfig(BaseModel):
    """Topology and calibration of the simulated UPMEM system.

    Timing constants are calibration knobs for reproducing trends, not measurements.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_dpus: int = 64
    tasklets_per_dpu: int = 16
    mram_bytes: int = 64 * 2**20
    wram_bytes: int = 64 * 2**10
    dpu_freq_hz: float = 350e6
    per_dpu_bandwidth_bytes_per_s: float = 1e9
    per_transfer_latency_s: float = 5e-6
    # charged once per rank that takes part in a launch
    launch_overhead_s: float = 50e-6
    pipeline_depth: int = 11
    add_cycles: float = 1.0
    mul_cycles: float = 8.0
    dpus_per_rank: int = 64
    padding: bool = True
    wram_chunk_bytes: int | None = None

    @field_validator("tasklets_per_dpu")
    @classmethod
    def validate_tasklets(cls, value: int) -> int:
        if not 1 <= value <= MAX_TASKLETS:
            raise ValueError(f"tasklets_per_dpu must be between 1 and {MAX_TASKLETS}")
        return value

    @field_validator("num_dpus", "mram_bytes", "wram_bytes", "pipeline_depth", "dpus_per_rank")
    @classmethod
    def validate_positive_int(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("value must be greater than 0")
        return value

    @field_validator("dpu_freq_hz", "add_cycles", "mul_cycles")
    @classmethod
    def validate_positive_rate(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("value must be greater than 0")
        return value

    @field_validator("per_dpu_bandwidth_bytes_per_s", "per_transfer_latency_s", "launch_overhead_s")
    @classmethod
    def validate_non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("value must be >= 0")
        return value

    @field_validator("wram_chunk_bytes")
    @classmethod
    def validate_chunk(cls, value: int | None) -> int | None:
        if value is None:
            return value
        if value <= 0 or value % 8:
            raise ValueError("wram_chunk_bytes must be a positive multiple of 8")
        return value

    def with_dpus(self, num_dpus: int) -> DpuSystemConfig:
        return DpuSystemConfig(**{**self.model_dump(), "num_dpus": num_dpus})

    def with_tasklets(self, tasklets: int) -> DpuSystemConfig:
        return DpuSystemConfig(**{**self.model_dump(), "tasklets_per_dpu": tasklets})

    def ranks(self, active_dpus: int) -> int:
        return -(-active_dpus // self.dpus_per_rank)

    def lint(self) -> list[str]:
        warnings = []
        if self.tasklets_per_dpu < RECOMMENDED_MIN_TASKLETS:
            warnings.append(
                f"{self.tasklets_per_dpu} tasklets cannot fill the {self.pipeline_depth}-stage pipeline; "
                f"use at least {RECOMMENDED_MIN_TASKLETS}"
            )
        for message in warnings:
            LOGGER.warning(message, extra={"tasklets": self.tasklets_per_dpu})
        return warnings
