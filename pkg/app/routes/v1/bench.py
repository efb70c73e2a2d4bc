from __future__ import annotations
from fastapi import APIRouter, Request
from app.errors import PimheError
from app.schemas.bench import BenchRunRequest, BenchScalingRequest
from app.services.pim_adapter import PimAdapter
from .common import _success, error_response, unexpected_error_response

def build_bench_router(adapter: PimAdapter) -> APIRouter:
    router = APIRouter(prefix="/bench")

    @router.post("/run")
    async def bench_run(payload: BenchRunRequest, request: Request):
        try:
            data = await adapter.run_bench(payload.model_dump())
            return _success(request, data)
        except PimheError as exc:
            return error_response(request, exc)
        except Exception as exc:
            return unexpected_error_response(request, "bench/run", exc)

    @router.post("/scaling")
    async def bench_scaling(payload: BenchScalingRequest, request: Request):
        try:
            data = await adapter.run_scaling(payload.model_dump())
            return _success(request, data)
        except PimheError as exc:
            return error_response(request, exc)
        except Exception as exc:
            return unexpected_error_response(request, "bench/scaling", exc)

    return router
