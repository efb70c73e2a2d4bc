from __future__ import annotations

import logging
import time
from uuid import uuid4

from fastapi import Request
from starlette.middleware.base import BaseHTTPMiddleware

LOGGER = logging.getLogger("pimhe.http")

REQUEST_ID_HEADER = "x-request-id"
ELAPSED_HEADER = "x-elapsed-ms"


class RequestContextMiddleware(BaseHTTPMiddleware):
    """Tags every request with an id (caller-supplied or fresh) and reports handler time in ms."""

    async def dispatch(self, request: Request, call_next):
        request_id = request.headers.get(REQUEST_ID_HEADER) or uuid4().hex
        request.state.request_id = request_id

        started = time.perf_counter()
        response = await call_next(request)
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        response.headers[REQUEST_ID_HEADER] = request_id
        response.headers[ELAPSED_HEADER] = f"{elapsed_ms:.3f}"
        LOGGER.debug(
            "request served",
            extra={"request_id": request_id, "path": request.url.path, "status": response.status_code, "elapsed_ms": elapsed_ms},
        )
        return response
