from __future__ import annotations
from fastapi import APIRouter, Request
from app.errors import PimheError
from app.schemas.he import HeRoundtripRequest
from app.services.pim_adapter import PimAdapter
from .common import _success, error_response, unexpected_error_response

def build_he_router(adapter: PimAdapter) -> APIRouter:
    router = APIRouter(prefix="/he")

    @router.post("/roundtrip")
    async def he_roundtrip(payload: HeRoundtripRequest, request: Request):
        try:
            data = await adapter.he_roundtrip(payload.model_dump())
            return _success(request, data)
        except PimheError as exc:
            return error_response(request, exc)
        except Exception as exc:
            return unexpected_error_response(request, "he/roundtrip", exc)

    return router
