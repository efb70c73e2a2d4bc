from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

from app.bench.config import Backend, BenchOp

# HTTP callers get desk-scale sizes only; larger sweeps belong on the CLI.
MAX_HTTP_LOG_N = 12


class BenchRunRequest(BaseModel):
    op: str
    logN: list[int] = Field(min_length=1)
    dpus: list[int] = Field(default=[64], min_length=1)
    tasklets: int = Field(default=16, ge=1, le=24)
    seed: int | None = None
    backend: str = Backend.BOTH.value

    @field_validator("op")
    @classmethod
    def validate_op(cls, value: str) -> str:
        normalized = value.strip().lower()
        if normalized not in {op.value for op in BenchOp}:
            raise ValueError(f"op must be one of {', '.join(op.value for op in BenchOp)}")
        return normalized

    @field_validator("backend")
    @classmethod
    def validate_backend(cls, value: str) -> str:
        normalized = value.strip().lower()
        if normalized not in {b.value for b in Backend}:
            raise ValueError("backend must be cpu, pim or both")
        return normalized

    @field_validator("logN")
    @classmethod
    def validate_log_n(cls, value: list[int]) -> list[int]:
        if any(not 1 <= v <= MAX_HTTP_LOG_N for v in value):
            raise ValueError(f"logN values must lie in [1, {MAX_HTTP_LOG_N}]")
        return value


class BenchScalingRequest(BenchRunRequest):
    dpus: list[int] = Field(default=[64, 128, 256, 512, 1024], min_length=1)

    @field_validator("logN")
    @classmethod
    def validate_single_size(cls, value: list[int]) -> list[int]:
        if len(value) != 1:
            raise ValueError("scaling takes exactly one logN")
        return value
