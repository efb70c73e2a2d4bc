from __future__ import annotations

import asyncio
from typing import Any

from app.bench.explain import explain
from app.costmodel.model import crossover_n, estimate

from .base import BaseManager


class ModelManager(BaseManager):
    async def estimate(self, op: str, n: int, dpus: int, tasklets: int, towers: int = 1) -> dict[str, Any]:
        params = self._cost_params(dpus, tasklets)
        est = await asyncio.to_thread(estimate, op, n, params, towers=towers)
        return self._to_json_safe(est.as_dict())

    async def explain(self, op: str, n: int, dpus: int, tasklets: int) -> dict[str, Any]:
        params = self._cost_params(dpus, tasklets)
        report = await asyncio.to_thread(explain, op, n, params)
        return {"op": op, "n": n, "report": report}

    async def crossover(self, op: str, dpus: int, tasklets: int, min_log_n: int, max_log_n: int) -> dict[str, Any]:
        params = self._cost_params(dpus, tasklets)
        n = await asyncio.to_thread(crossover_n, op, params, min_log_n=min_log_n, max_log_n=max_log_n)
        return {"op": op, "dpus": dpus, "tasklets": tasklets, "crossoverN": n}
