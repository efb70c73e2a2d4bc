from __future__ import annotations
from fastapi import APIRouter
from app.services.pim_adapter import PimAdapter
from .bench import build_bench_router
from .he import build_he_router
from .model import build_model_router

def build_v1_router(adapter: PimAdapter) -> APIRouter:
    router = APIRouter(prefix="/v1")

    router.include_router(build_model_router(adapter))
    router.include_router(build_bench_router(adapter))
    router.include_router(build_he_router(adapter))

    return router
