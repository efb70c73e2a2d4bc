from __future__ import annotations

from fastapi import FastAPI

from app.config import Settings, load_settings
from app.logger import configure_logging
from app.middleware.hmac_auth import HmacAuthMiddleware
from app.middleware.request_context import RequestContextMiddleware
from app.routes.health import build_health_router
from app.routes.v1 import build_v1_router
from app.services.pim_adapter import PimAdapter


def create_app(settings: Settings) -> FastAPI:
    adapter = PimAdapter(settings)

    application = FastAPI(title="PIM HE Service", version="0.1.0")
    application.add_middleware(RequestContextMiddleware)
    application.add_middleware(HmacAuthMiddleware, settings=settings)

    application.include_router(build_health_router(settings, adapter))
    application.include_router(build_v1_router(adapter))
    return application


settings = load_settings()
configure_logging(settings.log_level)

app = create_app(settings)
