"""DPU programs. Each runs on one simulated DPU's MRAM image and reports per-tasklet work."""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from app.errors import KernelPanic, ParameterError
from app.kernels.counters import OpCounter
from app.kernels.modmath import Modulus, mod_add_vec, mod_mul_vec
from app.kernels.ntt import butterfly_ct_vec, butterfly_gs_vec, ct_transform, gs_transform
from app.kernels.polyring import convolve_slices
from app.pimsim.config import DpuSystemConfig

ELEMENT_BYTES = 8


class KernelKind(str, Enum):
    POLY_ADD = "PolyAdd"
    CW_MUL = "CwMul"
    CONVOLUTION = "Convolution"
    BUTTERFLY_STAGE = "ButterflyStage"
    TOWER_MUL = "TowerMul"


# (input symbols, output symbols)
KERNEL_SYMBOLS: dict[KernelKind, tuple[tuple[str, ...], tuple[str, ...]]] = {
    KernelKind.POLY_ADD: (("a", "b"), ("c",)),
    KernelKind.CW_MUL: (("a", "b"), ("c",)),
    KernelKind.CONVOLUTION: (("a", "b"), ("c",)),
    KernelKind.BUTTERFLY_STAGE: (("u", "v", "w"), ("u_out", "v_out")),
    KernelKind.TOWER_MUL: (("a", "b", "fwd", "inv"), ("c",)),
}


@dataclass
class DpuRun:
    outputs: dict[str, np.ndarray]
    tasklet_ops: list[OpCounter]
    serial_ops: OpCounter = field(default_factory=OpCounter)

    def total_ops(self) -> OpCounter:
        total = OpCounter()
        for ops in self.tasklet_ops:
            total.merge(ops)
        total.merge(self.serial_ops)
        return total


@dataclass(frozen=True)
class DpuKernel:
    kind: KernelKind
    modulus: Modulus | None = None
    stage: int | None = None
    inverse: bool = False
    scale: int | None = None
    moduli: tuple[Modulus, ...] = ()
    n_invs: tuple[int, ...] = ()
    n: int | None = None
    towers_per_dpu: int = 1

    def __post_init__(self) -> None:
        per_tower = self.kind is KernelKind.TOWER_MUL
        if per_tower and (not self.moduli or len(self.n_invs) != len(self.moduli) or not self.n):
            raise ParameterError(code="INVALID_KERNEL", message="TowerMul needs moduli, n_invs and n")
        if not per_tower and self.modulus is None:
            raise ParameterError(code="INVALID_KERNEL", message=f"{self.kind.value} needs a modulus")
        if self.kind is KernelKind.BUTTERFLY_STAGE and (self.stage is None or self.stage < 0):
            raise ParameterError(code="INVALID_KERNEL", message="ButterflyStage needs a stage index")
        if self.scale is not None and not (self.kind is KernelKind.BUTTERFLY_STAGE and self.inverse):
            raise ParameterError(code="INVALID_KERNEL", message="scale applies to inverse butterfly stages only")

    @classmethod
    def poly_add(cls, modulus: Modulus) -> DpuKernel:
        return cls(KernelKind.POLY_ADD, modulus)

    @classmethod
    def cw_mul(cls, modulus: Modulus) -> DpuKernel:
        return cls(KernelKind.CW_MUL, modulus)

    @classmethod
    def convolution(cls, modulus: Modulus) -> DpuKernel:
        return cls(KernelKind.CONVOLUTION, modulus)

    @classmethod
    def butterfly_stage(cls, modulus: Modulus, stage: int, *, inverse: bool = False, scale: int | None = None) -> DpuKernel:
        return cls(KernelKind.BUTTERFLY_STAGE, modulus, stage=stage, inverse=inverse, scale=scale)

    @classmethod
    def tower_mul(
        cls, moduli: tuple[Modulus, ...], n_invs: tuple[int, ...], n: int, towers_per_dpu: int = 1
    ) -> DpuKernel:
        return cls(
            KernelKind.TOWER_MUL, moduli=tuple(moduli), n_invs=tuple(n_invs), n=n, towers_per_dpu=towers_per_dpu
        )

    @property
    def inputs(self) -> tuple[str, ...]:
        return KERNEL_SYMBOLS[self.kind][0]

    @property
    def outputs(self) -> tuple[str, ...]:
        return KERNEL_SYMBOLS[self.kind][1]

    def execute(self, dpu_index: int, data: Mapping[str, np.ndarray], tasklets: int, cfg: DpuSystemConfig) -> DpuRun:
        if self.kind in (KernelKind.POLY_ADD, KernelKind.CW_MUL):
            return self._elementwise(data, tasklets, cfg)
        if self.kind is KernelKind.CONVOLUTION:
            return self._convolution(data, tasklets, cfg)
        if self.kind is KernelKind.BUTTERFLY_STAGE:
            return self._butterflies(data, tasklets, cfg)
        return self._tower_mul(dpu_index, data, tasklets)

    def _elementwise(self, data: Mapping[str, np.ndarray], tasklets: int, cfg: DpuSystemConfig) -> DpuRun:
        a, b = data["a"], data["b"]
        out = np.empty_like(a)
        chunk = wram_chunk_elements(cfg, tasklets, streams=3)
        per_tasklet = len(a) // tasklets
        tasklet_ops = []
        for j in range(tasklets):
            ops = OpCounter()
            for start in range(j * per_tasklet, (j + 1) * per_tasklet, chunk):
                stop = min(start + chunk, (j + 1) * per_tasklet)
                if self.kind is KernelKind.POLY_ADD:
                    out[start:stop] = mod_add_vec(a[start:stop], b[start:stop], self.modulus)
                    ops.mod_adds += stop - start
                else:
                    out[start:stop] = mod_mul_vec(a[start:stop], b[start:stop], self.modulus)
                    ops.mod_muls += stop - start
            tasklet_ops.append(ops)
        return DpuRun({"c": out}, tasklet_ops)

    def _convolution(self, data: Mapping[str, np.ndarray], tasklets: int, cfg: DpuSystemConfig) -> DpuRun:
        a, b = data["a"], data["b"]
        # a chunk of a, the streamed run of b and the accumulator row
        chunk = wram_chunk_elements(cfg, tasklets, streams=3)
        per_tasklet = len(a) // tasklets
        out = np.zeros(len(a) + len(b) - 1, dtype=np.uint64)
        written = 0
        tasklet_ops = []
        serial = OpCounter()
        for j in range(tasklets):
            ops = OpCounter()
            start = j * per_tasklet
            partial = self._convolve_chunked(a[start : start + per_tasklet], b, chunk, ops)
            tasklet_ops.append(ops)
            # tasklet 0 folds the partials after the barrier
            overlap = max(0, min(written - start, len(partial)))
            if overlap:
                out[start : start + overlap] = mod_add_vec(out[start : start + overlap], partial[:overlap], self.modulus)
                serial.mod_adds += overlap
            out[start + overlap : start + len(partial)] = partial[overlap:]
            written = start + len(partial)
        return DpuRun({"c": out}, tasklet_ops, serial)

    def _convolve_chunked(self, a: np.ndarray, b: np.ndarray, chunk: int, ops: OpCounter) -> np.ndarray:
        """Tasklet-local product of ``a`` and ``b``, staging ``a`` through WRAM ``chunk`` elements at a time.

        Chunk partials overlap on len(b) - 1 positions, so the add tally stays
        (len(a) - 1) * (len(b) - 1).
        """
        if len(a) <= chunk:
            return convolve_slices(a, b, self.modulus, ops)
        acc = np.zeros(len(a) + len(b) - 1, dtype=np.uint64)
        written = 0
        for offset in range(0, len(a), chunk):
            partial = convolve_slices(a[offset : offset + chunk], b, self.modulus, ops)
            overlap = max(0, min(written - offset, len(partial)))
            if overlap:
                acc[offset : offset + overlap] = mod_add_vec(acc[offset : offset + overlap], partial[:overlap], self.modulus)
                ops.mod_adds += overlap
            acc[offset + overlap : offset + len(partial)] = partial[overlap:]
            written = offset + len(partial)
        return acc

    def _butterflies(self, data: Mapping[str, np.ndarray], tasklets: int, cfg: DpuSystemConfig) -> DpuRun:
        u, v, w = data["u"], data["v"], data["w"]
        u_out = np.empty_like(u)
        v_out = np.empty_like(v)
        chunk = wram_chunk_elements(cfg, tasklets, streams=5)
        per_tasklet = len(u) // tasklets
        butterfly = butterfly_gs_vec if self.inverse else butterfly_ct_vec
        tasklet_ops = []
        for j in range(tasklets):
            ops = OpCounter()
            for start in range(j * per_tasklet, (j + 1) * per_tasklet, chunk):
                s = slice(start, min(start + chunk, (j + 1) * per_tasklet))
                count = s.stop - s.start
                u_out[s], v_out[s] = butterfly(u[s], v[s], w[s], self.modulus)
                ops.mod_adds += 2 * count
                ops.mod_muls += count
                if self.scale is not None:
                    u_out[s] = mod_mul_vec(u_out[s], np.uint64(self.scale), self.modulus)
                    ops.mod_muls += count
            tasklet_ops.append(ops)
        return DpuRun({"u_out": u_out, "v_out": v_out}, tasklet_ops)

    def _tower_mul(self, dpu_index: int, data: Mapping[str, np.ndarray], tasklets: int) -> DpuRun:
        n = self.n
        towers = len(data["a"]) // n
        first = dpu_index * self.towers_per_dpu
        out = np.empty(towers * n, dtype=np.uint64)
        ops = OpCounter()
        for local in range(towers):
            s = slice(local * n, (local + 1) * n)
            m, n_inv = self.moduli[first + local], self.n_invs[first + local]
            a_hat = ct_transform(data["a"][s], data["fwd"][s], m, ops)
            b_hat = ct_transform(data["b"][s], data["fwd"][s], m, ops)
            c_hat = mod_mul_vec(a_hat, b_hat, m)
            ops.mod_muls += n
            out[s] = gs_transform(c_hat, data["inv"][s], n_inv, m, ops)
        # stage loops are split evenly over the tasklets
        share = OpCounter(
            mod_adds=ops.mod_adds // tasklets,
            mod_muls=ops.mod_muls // tasklets,
        )
        tasklet_ops = [share] * (tasklets - 1) + [
            OpCounter(
                mod_adds=ops.mod_adds - share.mod_adds * (tasklets - 1),
                mod_muls=ops.mod_muls - share.mod_muls * (tasklets - 1),
            )
        ]
        return DpuRun({"c": out}, tasklet_ops)


def wram_chunk_elements(cfg: DpuSystemConfig, tasklets: int, streams: int) -> int:
    """Elements per WRAM chunk when ``streams`` arrays are staged side by side."""
    budget = cfg.wram_bytes // tasklets
    chunk_bytes = cfg.wram_chunk_bytes or budget
    if chunk_bytes > budget:
        raise KernelPanic(
            code="WRAM_OVERFLOW",
            message=f"WRAM chunk of {chunk_bytes} bytes exceeds the {budget}-byte per-tasklet share",
            details={"wram_bytes": cfg.wram_bytes, "tasklets": tasklets},
        )
    elements = chunk_bytes // (ELEMENT_BYTES * streams)
    if elements < 1:
        raise KernelPanic(
            code="WRAM_OVERFLOW",
            message=f"{chunk_bytes}-byte WRAM chunk cannot stage {streams} operands",
            details={"wram_bytes": cfg.wram_bytes, "tasklets": tasklets},
        )
    return elements
