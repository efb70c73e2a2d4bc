from __future__ import annotations

import logging
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from app.config import Settings
from app.costmodel.params import CostParams
from app.errors import ParameterError

LOGGER = logging.getLogger("pimhe.services")


class BaseManager:
    def __init__(self, settings: Settings):
        self._settings = settings

    def _seed(self, seed: int | None) -> int:
        return self._settings.default_seed if seed is None else seed

    @staticmethod
    def _cost_params(dpus: int, tasklets: int) -> CostParams:
        base = CostParams()
        try:
            return base.model_copy(update={"dpu": base.dpu.with_dpus(dpus).with_tasklets(tasklets)})
        except ValidationError as exc:
            raise ParameterError(
                code="INVALID_SYSTEM_CONFIG",
                message="DPU system configuration is invalid",
                status_code=422,
                retryable=False,
                details={"errors": exc.errors(include_url=False, include_context=False)},
            ) from None

    @classmethod
    def _to_json_safe(cls, value: Any) -> Any:
        if isinstance(value, Fraction):
            return str(value)
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, float) and not math.isfinite(value):
            return None
        if value is None or isinstance(value, (str, int, float, bool)):
            return value
        if isinstance(value, np.ndarray):
            return [cls._to_json_safe(item) for item in value.tolist()]
        if isinstance(value, BaseModel):
            return cls._to_json_safe(value.model_dump())
        if is_dataclass(value) and not isinstance(value, type):
            return cls._to_json_safe(asdict(value))
        if isinstance(value, dict):
            return {str(key): cls._to_json_safe(item) for key, item in value.items()}
        if isinstance(value, (list, tuple, set)):
            return [cls._to_json_safe(item) for item in value]
        return str(value)
