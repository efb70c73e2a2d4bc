from __future__ import annotations

import hmac
import logging
from hashlib import sha256
from time import time

from fastapi import Request
from starlette.middleware.base import BaseHTTPMiddleware
from starlette.responses import JSONResponse

from app.config import Settings

LOGGER = logging.getLogger("pimhe.hmac")

HMAC_HEADERS = {
    "timestamp": "x-timestamp",
    "signature": "x-signature",
}


def sign(secret: str, timestamp: str, method: str, path: str, body: str) -> str:
    payload = f"{timestamp}:{method.upper()}:{path}:{body}"
    return hmac.new(secret.encode("utf-8"), payload.encode("utf-8"), sha256).hexdigest()


def _unauthorized(message: str) -> JSONResponse:
    return JSONResponse(status_code=401, content={"error": {"code": "UNAUTHORIZED", "message": message}})


class HmacAuthMiddleware(BaseHTTPMiddleware):
    """Signed requests on /v1/* when HMAC_SECRET is set; open otherwise (local runs)."""

    def __init__(self, app, settings: Settings):
        super().__init__(app)
        self._settings = settings
        if not settings.hmac_secret:
            LOGGER.warning("HMAC_SECRET unset; /v1 endpoints accept unsigned requests")

    async def dispatch(self, request: Request, call_next):
        if not request.url.path.startswith("/v1/") or not self._settings.hmac_secret:
            return await call_next(request)

        timestamp = request.headers.get(HMAC_HEADERS["timestamp"])
        signature = request.headers.get(HMAC_HEADERS["signature"])
        if not timestamp or not signature:
            return _unauthorized("Missing required authentication headers")

        try:
            request_ts = int(timestamp)
        except ValueError:
            return _unauthorized("Invalid timestamp format")

        now_ms = int(time() * 1000)
        if abs(now_ms - request_ts) > self._settings.hmac_timestamp_tolerance_ms:
            return _unauthorized("Request expired or timestamp too far in future")

        body_bytes = await request.body()
        body_str = body_bytes.decode("utf-8") if body_bytes else ""
        expected = sign(self._settings.hmac_secret, timestamp, request.method, request.url.path, body_str)

        if not hmac.compare_digest(expected, signature):
            LOGGER.warning("HMAC verification failed", extra={"path": request.url.path})
            return _unauthorized("Invalid signature")

        return await call_next(request)
