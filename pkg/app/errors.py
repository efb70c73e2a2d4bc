from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class PimheError(Exception):
    code: str
    message: str
    status_code: int = 400
    retryable: bool | None = None
    details: dict[str, Any] | None = None

    def __str__(self) -> str:
        return self.message


class ParameterError(PimheError):
    """Mismatched rings, bases or dimensions, and out-of-range inputs."""


class NoInverseError(PimheError):
    pass


class NttUnfriendlyModulus(PimheError):
    pass


class PrimeSearchError(PimheError):
    pass


# Simulator protocol and resource failures.
class MramOverflow(PimheError):
    pass


class AlignmentError(PimheError):
    pass


class IndivisibleError(PimheError):
    pass


class KernelPanic(PimheError):
    pass


class UnloadedData(PimheError):
    pass


class CorrectnessMismatch(PimheError):
    pass
