from __future__ import annotations

from .bench import BenchRunRequest, BenchScalingRequest
from .he import HeRoundtripRequest
from .model import ModelCrossoverRequest, ModelEstimateRequest, ModelExplainRequest
