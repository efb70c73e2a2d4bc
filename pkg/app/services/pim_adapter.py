from __future__ import annotations

from typing import Any

from app.config import Settings
from app.kernels.modmath import generate_ntt_prime
from .pim.bench_manager import BenchManager
from .pim.he_manager import HeManager
from .pim.model_manager import ModelManager


class PimAdapter:
    def __init__(self, settings: Settings):
        self._settings = settings
        self.model = ModelManager(settings)
        self.bench = BenchManager(settings)
        self.he = HeManager(settings)

    def ready(self) -> tuple[bool, str | None]:
        # prime search exercises sympy and the numpy residue path
        try:
            generate_ntt_prime(30, 16)
        except Exception as exc:
            return False, f"kernel self-check failed: {exc}"
        return True, None

    async def estimate(self, op: str, n: int, dpus: int, tasklets: int, towers: int = 1) -> dict[str, Any]:
        return await self.model.estimate(op, n, dpus, tasklets, towers)

    async def explain(self, op: str, n: int, dpus: int, tasklets: int) -> dict[str, Any]:
        return await self.model.explain(op, n, dpus, tasklets)

    async def crossover(self, op: str, dpus: int, tasklets: int, min_log_n: int, max_log_n: int) -> dict[str, Any]:
        return await self.model.crossover(op, dpus, tasklets, min_log_n, max_log_n)

    async def run_bench(self, payload: dict[str, Any]) -> dict[str, Any]:
        return await self.bench.run(payload)

    async def run_scaling(self, payload: dict[str, Any]) -> dict[str, Any]:
        return await self.bench.scaling(payload)

    async def he_roundtrip(self, payload: dict[str, Any]) -> dict[str, Any]:
        return await self.he.roundtrip(payload)
