from __future__ import annotations

from datetime import datetime, timezone

from fastapi import APIRouter

from app.config import Settings
from app.schemas.common import SERVICE_NAME
from app.services.pim_adapter import PimAdapter



def build_health_router(settings: Settings, adapter: PimAdapter) -> APIRouter:
    router = APIRouter()

    @router.get("/health")
    async def health():
        return {
            "status": "healthy",
            "service": SERVICE_NAME,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }

    @router.get("/ready")
    async def ready():
        is_ready, reason = adapter.ready()
        body = {"status": "ready" if is_ready else "not ready", "timestamp": datetime.now(timezone.utc).isoformat()}
        if not is_ready:
            body["reason"] = reason
        body["hmacEnforced"] = bool(settings.hmac_secret)
        return body

    return router
