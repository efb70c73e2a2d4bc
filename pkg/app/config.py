from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    host: str
    port: int
    log_level: str
    hmac_secret: str
    hmac_timestamp_tolerance_ms: int
    bench_config_path: str | None
    sim_workers: int
    default_seed: int



def _to_int(value: str | None, default: int) -> int:
    if value is None or not value.strip():
        return default
    return int(value)



def load_settings() -> Settings:
    return Settings(
        host=os.getenv("HOST", "0.0.0.0"),
        port=_to_int(os.getenv("PORT"), 5002),
        log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
        hmac_secret=os.getenv("HMAC_SECRET", ""),
        hmac_timestamp_tolerance_ms=_to_int(os.getenv("HMAC_TIMESTAMP_TOLERANCE_MS"), 300000),
        bench_config_path=os.getenv("PIMHE_BENCH_CONFIG") or None,
        sim_workers=max(1, _to_int(os.getenv("PIMHE_SIM_WORKERS"), 1)),
        default_seed=_to_int(os.getenv("PIMHE_SEED"), 0),
    )
