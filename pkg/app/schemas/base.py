from __future__ import annotations

from pydantic import BaseModel, Field, field_validator


class SizedRequest(BaseModel):
    """Requests addressing one power-of-two ring dimension and a DPU system shape."""

    logN: int = Field(ge=1, le=24, description="log2 of the ring dimension")
    dpus: int = Field(default=1024, ge=1)
    tasklets: int = Field(default=16, description="tasklets per DPU")

    @field_validator("tasklets")
    @classmethod
    def validate_tasklets(cls, value: int) -> int:
        if not 1 <= value <= 24:
            raise ValueError("tasklets must be between 1 and 24")
        return value
