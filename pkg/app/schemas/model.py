from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

from app.costmodel.model import OpKind

from .base import SizedRequest


def _normalize_op(value: str) -> str:
    normalized = value.strip().lower()
    if normalized not in {kind.value for kind in OpKind}:
        raise ValueError(f"op must be one of {', '.join(kind.value for kind in OpKind)}")
    return normalized


class ModelEstimateRequest(SizedRequest):
    op: str
    towers: int = Field(default=1, ge=1)

    @field_validator("op")
    @classmethod
    def validate_op(cls, value: str) -> str:
        return _normalize_op(value)


class ModelExplainRequest(SizedRequest):
    op: str

    @field_validator("op")
    @classmethod
    def validate_op(cls, value: str) -> str:
        return _normalize_op(value)


class ModelCrossoverRequest(BaseModel):
    op: str
    dpus: int = Field(default=1024, ge=1)
    tasklets: int = Field(default=16, ge=1, le=24)
    minLogN: int = Field(default=4, ge=1)
    maxLogN: int = Field(default=24, le=30)

    @field_validator("op")
    @classmethod
    def validate_op(cls, value: str) -> str:
        return _normalize_op(value)
