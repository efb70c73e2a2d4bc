from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Literal

from pydantic import BaseModel, Field

SERVICE_NAME = "pimhe-service"


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class Meta(BaseModel):
    timestamp: str = Field(default_factory=_utc_now)
    requestId: str
    service: str = SERVICE_NAME


class ErrorBody(BaseModel):
    """Stable upper-snake ``code`` from the raising PimheError, plus its details."""

    code: str
    message: str
    details: dict[str, Any] | None = None
    retryable: bool | None = None


class SuccessEnvelope(BaseModel):
    success: Literal[True] = True
    data: dict[str, Any]
    meta: Meta


class ErrorEnvelope(BaseModel):
    success: Literal[False] = False
    error: ErrorBody
    meta: Meta
