from __future__ import annotations

import asyncio
from typing import Any

from pydantic import ValidationError

from app.bench.config import BenchConfig
from app.bench.runner import BenchRow, render_csv, run_bench, run_scaling
from app.errors import ParameterError

from .base import BaseManager


class BenchManager(BaseManager):
    def _config(self, payload: dict[str, Any]) -> BenchConfig:
        try:
            return BenchConfig(
                op=payload["op"],
                log_n=payload["logN"],
                dpus=payload["dpus"],
                tasklets=payload["tasklets"],
                seed=self._seed(payload.get("seed")),
                backend=payload["backend"],
                workers=self._settings.sim_workers,
            )
        except ValidationError as exc:
            raise ParameterError(
                code="INVALID_BENCH_CONFIG",
                message="bench configuration is invalid",
                status_code=422,
                retryable=False,
                details={"errors": exc.errors(include_url=False, include_context=False)},
            ) from None

    @staticmethod
    def _result(rows: list[BenchRow]) -> dict[str, Any]:
        return {"rows": [row.as_dict() for row in rows], "csv": render_csv(rows)}

    async def run(self, payload: dict[str, Any]) -> dict[str, Any]:
        rows = await asyncio.to_thread(run_bench, self._config(payload))
        return self._result(rows)

    async def scaling(self, payload: dict[str, Any]) -> dict[str, Any]:
        rows = await asyncio.to_thread(run_scaling, self._config(payload))
        return self._result(rows)
