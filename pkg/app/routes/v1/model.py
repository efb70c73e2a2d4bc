from __future__ import annotations
from fastapi import APIRouter, Request
from app.errors import PimheError
from app.schemas.model import ModelCrossoverRequest, ModelEstimateRequest, ModelExplainRequest
from app.services.pim_adapter import PimAdapter
from .common import _success, error_response, unexpected_error_response

def build_model_router(adapter: PimAdapter) -> APIRouter:
    router = APIRouter(prefix="/model")

    @router.post("/estimate")
    async def model_estimate(payload: ModelEstimateRequest, request: Request):
        try:
            data = await adapter.estimate(payload.op, 1 << payload.logN, payload.dpus, payload.tasklets, payload.towers)
            return _success(request, data)
        except PimheError as exc:
            return error_response(request, exc)
        except Exception as exc:
            return unexpected_error_response(request, "model/estimate", exc)

    @router.post("/explain")
    async def model_explain(payload: ModelExplainRequest, request: Request):
        try:
            data = await adapter.explain(payload.op, 1 << payload.logN, payload.dpus, payload.tasklets)
            return _success(request, data)
        except PimheError as exc:
            return error_response(request, exc)
        except Exception as exc:
            return unexpected_error_response(request, "model/explain", exc)

    @router.post("/crossover")
    async def model_crossover(payload: ModelCrossoverRequest, request: Request):
        try:
            data = await adapter.crossover(payload.op, payload.dpus, payload.tasklets, payload.minLogN, payload.maxLogN)
            return _success(request, data)
        except PimheError as exc:
            return error_response(request, exc)
        except Exception as exc:
            return unexpected_error_response(request, "model/crossover", exc)

    return router
