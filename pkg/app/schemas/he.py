from __future__ import annotations

from pydantic import BaseModel, Field, field_validator


class HeRoundtripRequest(BaseModel):
    logN: int = Field(default=4, ge=1, le=12)
    message: list[int] = Field(min_length=1)
    other: list[int] | None = Field(default=None, description="second operand for add/mult checks")
    plaintextModulus: int = Field(default=65537, ge=2)
    qBits: int = Field(default=60, ge=20, le=62)
    seed: int | None = None

    @field_validator("message", "other")
    @classmethod
    def validate_non_negative(cls, value: list[int] | None) -> list[int] | None:
        if value is not None and any(v < 0 for v in value):
            raise ValueError("plaintext values must be non-negative")
        return value
