from __future__ import annotations

from dataclasses import dataclass


@dataclass
class OpCounter:
    """Per-call operation tally; callers own the instance."""

    mod_adds: int = 0
    mod_muls: int = 0
    poly_adds: int = 0
    poly_muls: int = 0

    def merge(self, other: OpCounter) -> None:
        self.mod_adds += other.mod_adds
        self.mod_muls += other.mod_muls
        self.poly_adds += other.poly_adds
        self.poly_muls += other.poly_muls

    def cycles(self, add_cycles: float, mul_cycles: float) -> float:
        return self.mod_adds * add_cycles + self.mod_muls * mul_cycles
