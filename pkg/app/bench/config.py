from __future__ import annotations

import json
import logging
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, field_validator

from app.errors import ParameterError

LOGGER = logging.getLogger("pimhe.bench")

DEFAULT_DPU_SWEEP = (64, 128, 256, 512, 1024)


class BenchOp(str, Enum):
    ADD = "add"
    CWMUL = "cwmul"
    CONV = "conv"
    NTT = "ntt"
    NTT_STAGE = "ntt-stage"
    HE_ADD = "he-add"
    HE_MULT = "he-mult"


class Backend(str, Enum):
    CPU = "cpu"
    PIM = "pim"
    BOTH = "both"


class CpuTiming(str, Enum):
    MODEL = "model"
    WALLCLOCK = "wallclock"


# largest log2(n) run without a warning; the references are O(n) or O(n^2) Python work
DESK_SCALE_CAPS = {
    BenchOp.ADD: 20,
    BenchOp.CWMUL: 20,
    BenchOp.CONV: 13,
    BenchOp.NTT: 16,
    BenchOp.NTT_STAGE: 14,
    BenchOp.HE_ADD: 12,
    BenchOp.HE_MULT: 12,
}


class BenchConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    op: BenchOp = BenchOp.ADD
    log_n: list[int] = [10]
    dpus: list[int] = [64]
    tasklets: int = 16
    repetitions: int = 100
    warmup: int = 20
    seed: int = 0
    backend: Backend = Backend.BOTH
    output: str | None = None
    cpu_timing: CpuTiming = CpuTiming.MODEL
    q_bits: int = 30
    he_q_bits: int = 60
    plaintext_modulus: int = 65537
    workers: int = 1

    @field_validator("log_n")
    @classmethod
    def validate_log_n(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("log_n must list at least one size")
        if any(v < 1 for v in value):
            raise ValueError("log_n values must be >= 1")
        return value

    @field_validator("dpus")
    @classmethod
    def validate_dpus(cls, value: list[int]) -> list[int]:
        if not value or any(v < 1 for v in value):
            raise ValueError("dpus must list positive DPU counts")
        return value

    @field_validator("tasklets")
    @classmethod
    def validate_tasklets(cls, value: int) -> int:
        if not 1 <= value <= 24:
            raise ValueError("tasklets must be between 1 and 24")
        return value

    @field_validator("repetitions", "workers")
    @classmethod
    def validate_at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("value must be >= 1")
        return value

    @field_validator("warmup")
    @classmethod
    def validate_warmup(cls, value: int) -> int:
        if value < 0:
            raise ValueError("warmup must be >= 0")
        return value

    @field_validator("q_bits", "he_q_bits")
    @classmethod
    def validate_q_bits(cls, value: int) -> int:
        if not 8 <= value <= 62:
            raise ValueError("modulus width must be between 8 and 62 bits")
        return value

    def oversized(self) -> list[int]:
        cap = DESK_SCALE_CAPS[self.op]
        return [v for v in self.log_n if v > cap]


def parse_log_n(text: str) -> list[int]:
    """Accepts ``A..B`` (inclusive), ``a,b,c`` or a single value."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ParameterError(
            code="INVALID_LOG_N", message=f"cannot parse log-n range {text!r}", details={"log_n": text}
        ) from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ParameterError(code="INVALID_LIST", message=f"cannot parse integer list {text!r}") from None


def load_bench_defaults(path: str | None) -> dict:
    """Default BenchConfig fields from a JSON file; an unset path yields no overrides."""
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(
            code="INVALID_BENCH_CONFIG", message=f"cannot read bench config {path}: {exc}", details={"path": path}
        ) from None
    if not isinstance(data, dict):
        raise ParameterError(code="INVALID_BENCH_CONFIG", message="bench config must be a JSON object")
    LOGGER.debug("loaded bench defaults", extra={"path": path, "keys": sorted(data)})
    return data
