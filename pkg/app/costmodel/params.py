from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.pimsim.config import DpuSystemConfig


class CostParams(BaseModel):
    """Calibration of the analytic CPU-vs-PIM model. Defaults are not measurements."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    cpu_freq_hz: float = 2.4e9
    cpu_threads: int = 16
    cpu_cycles_per_add: float = 2.0
    cpu_cycles_per_mul: float = 6.0
    dram_bandwidth_bytes_per_s: float = 20e9
    dpu: DpuSystemConfig = Field(default_factory=lambda: DpuSystemConfig(num_dpus=1024))

    @field_validator("cpu_freq_hz", "cpu_cycles_per_add", "cpu_cycles_per_mul", "dram_bandwidth_bytes_per_s")
    @classmethod
    def validate_positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("value must be greater than 0")
        return value

    @field_validator("cpu_threads")
    @classmethod
    def validate_threads(cls, value: int) -> int:
        if value < 1:
            raise ValueError("cpu_threads must be at least 1")
        return value

    def with_dpus(self, num_dpus: int) -> CostParams:
        return CostParams(**{**self.model_dump(exclude={"dpu"}), "dpu": self.dpu.with_dpus(num_dpus)})
