from __future__ import annotations

import logging
from typing import Any

from fastapi import Request
from fastapi.responses import JSONResponse

from app.errors import PimheError
from app.schemas.common import ErrorBody, ErrorEnvelope, Meta, SuccessEnvelope

LOGGER = logging.getLogger("pimhe.routes.v1")

INTERNAL_ERROR_CODE = "PIMHE_INTERNAL_ERROR"


def _meta(request: Request) -> Meta:
    return Meta(requestId=getattr(request.state, "request_id", "unknown"))


def _success(request: Request, data: dict[str, Any]) -> SuccessEnvelope:
    return SuccessEnvelope(data=data, meta=_meta(request))


def _envelope(request: Request, status_code: int, body: ErrorBody) -> JSONResponse:
    content = ErrorEnvelope(error=body, meta=_meta(request)).model_dump()
    return JSONResponse(status_code=status_code, content=content)


def error_response(request: Request, exc: PimheError) -> JSONResponse:
    """Kernel, simulator and configuration failures keep the status code they were raised with."""
    LOGGER.info("request rejected", extra={"code": exc.code, "path": request.url.path})
    body = ErrorBody(code=exc.code, message=exc.message, details=exc.details, retryable=exc.retryable)
    return _envelope(request, exc.status_code, body)


def unexpected_error_response(request: Request, operation: str, exc: Exception) -> JSONResponse:
    LOGGER.exception("Unhandled exception in %s", operation)
    body = ErrorBody(
        code=INTERNAL_ERROR_CODE,
        message=f"Unexpected failure while processing {operation}",
        details={"error": str(exc), "type": type(exc).__name__, "operation": operation},
        retryable=False,
    )
    return _envelope(request, 500, body)
