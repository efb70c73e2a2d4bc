"""Simulated DPUs with private MRAM, driven by the host through a DpuSet.

The host protocol is scatter -> launch -> gather. Every copy goes through
8-byte aligned MRAM transfers and is charged to the set's TransferLedger.
"""
from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from app.errors import AlignmentError, MramOverflow, UnloadedData
from app.kernels.counters import OpCounter
from app.pimsim.config import DpuSystemConfig
from app.pimsim.kernels import ELEMENT_BYTES, DpuKernel, DpuRun
from app.pimsim.ledger import TransferLedger, dpu_cycles
from app.pimsim.partition import TRANSFER_ALIGNMENT

LOGGER = logging.getLogger("pimhe.pimsim")


def _check_alignment(offset: int, length: int) -> None:
    if offset % TRANSFER_ALIGNMENT or length % TRANSFER_ALIGNMENT:
        raise AlignmentError(
            code="MISALIGNED_TRANSFER",
            message=f"MRAM transfers need {TRANSFER_ALIGNMENT}-byte aligned offset and length, got {offset}/{length}",
            details={"offset": offset, "length": length},
        )


class Mram:
    """A DPU's main bank: a lazily grown byte image plus a symbol table.

    Regions are packed back to back. A symbol that outgrows its region is moved
    to the end and the regions behind it slide down, so ``used_bytes`` never
    counts abandoned space.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._image = bytearray()
        # symbol -> (offset, length, reserved)
        self._symbols: dict[str, tuple[int, int, int]] = {}
        self._next_free = 0

    @property
    def used_bytes(self) -> int:
        return self._next_free

    def allocate(self, symbol: str, length: int) -> int:
        existing = self._symbols.get(symbol)
        reserved = 0
        if existing is not None:
            offset, _, reserved = existing
            if length <= reserved:
                self._symbols[symbol] = (offset, length, reserved)
                return offset
        needed = self._next_free - reserved + length
        if needed > self.capacity:
            raise MramOverflow(
                code="MRAM_OVERFLOW",
                message=f"symbol {symbol!r} of {length} bytes does not fit in the {self.capacity}-byte MRAM",
                details={"symbol": symbol, "length": length, "used": self._next_free - reserved},
            )
        if existing is not None and existing[0] + reserved == self._next_free:
            self._symbols[symbol] = (existing[0], length, length)
            self._next_free = existing[0] + length
            return existing[0]
        kept = self._release(symbol) if existing is not None else b""
        offset = self._next_free
        self._symbols[symbol] = (offset, length, length)
        self._next_free = offset + length
        if kept:
            self._image[offset : offset + len(kept)] = kept
        return offset

    def _release(self, symbol: str) -> bytes:
        offset, length, reserved = self._symbols.pop(symbol)
        if len(self._image) < self._next_free:
            self._image.extend(bytes(self._next_free - len(self._image)))
        kept = bytes(self._image[offset : offset + length])
        del self._image[offset : offset + reserved]
        self._symbols = {
            name: (start - reserved if start > offset else start, size, room)
            for name, (start, size, room) in self._symbols.items()
        }
        self._next_free -= reserved
        return kept

    def symbol(self, name: str) -> tuple[int, int]:
        try:
            offset, length, _ = self._symbols[name]
        except KeyError:
            raise UnloadedData(
                code="UNLOADED_DATA", message=f"symbol {name!r} was never written to MRAM", details={"symbol": name}
            ) from None
        return offset, length

    def write(self, offset: int, data: bytes) -> None:
        _check_alignment(offset, len(data))
        end = offset + len(data)
        if end > self.capacity:
            raise MramOverflow(
                code="MRAM_OVERFLOW",
                message=f"write to [{offset}, {end}) exceeds the {self.capacity}-byte MRAM",
                details={"offset": offset, "length": len(data)},
            )
        if end > len(self._image):
            self._image.extend(bytes(end - len(self._image)))
        self._image[offset:end] = data

    def read(self, offset: int, length: int) -> bytes:
        _check_alignment(offset, length)
        end = offset + length
        if end > self.capacity:
            raise MramOverflow(
                code="MRAM_OVERFLOW",
                message=f"read of [{offset}, {end}) exceeds the {self.capacity}-byte MRAM",
                details={"offset": offset, "length": length},
            )
        chunk = bytes(self._image[offset:end])
        return chunk + bytes(length - len(chunk))

    def store(self, symbol: str, values: np.ndarray, offset: int = 0) -> None:
        data = np.ascontiguousarray(values, dtype="<u8").tobytes()
        _check_alignment(offset, len(data))
        base = self.allocate(symbol, offset + len(data))
        self.write(base + offset, data)

    def load(self, symbol: str, length: int | None = None, offset: int = 0) -> np.ndarray:
        base, size = self.symbol(symbol)
        length = size - offset if length is None else length
        return np.frombuffer(self.read(base + offset, length), dtype="<u8").astype(np.uint64)


class Dpu:
    def __init__(self, index: int, cfg: DpuSystemConfig):
        self.index = index
        self.mram = Mram(cfg.mram_bytes)
        self.last_cycles = 0.0

    def run(self, kernel: DpuKernel, tasklets: int, cfg: DpuSystemConfig) -> DpuRun:
        data = {name: self.mram.load(name) for name in kernel.inputs}
        result = kernel.execute(self.index, data, tasklets, cfg)
        for name, values in result.outputs.items():
            self.mram.store(name, values)
        self.last_cycles = dpu_cycles(
            cfg,
            [ops.cycles(cfg.add_cycles, cfg.mul_cycles) for ops in result.tasklet_ops],
            result.serial_ops.cycles(cfg.add_cycles, cfg.mul_cycles),
        )
        return result


class DpuSet:
    """Host handle on ``num_dpus`` simulated DPUs.

    ``workers`` > 1 runs DPU programs on a thread pool; results and ledger totals
    are reduced in DPU index order either way.
    """

    def __init__(
        self,
        cfg: DpuSystemConfig,
        *,
        num_dpus: int | None = None,
        ledger: TransferLedger | None = None,
        workers: int = 1,
    ):
        self.cfg = cfg
        self.dpus = [Dpu(i, cfg) for i in range(num_dpus or cfg.num_dpus)]
        self.ledger = ledger if ledger is not None else TransferLedger()
        self.workers = max(1, workers)
        self._loaded = False
        self._pending_outputs: tuple[str, ...] = ()
        self._active: list[int] = []

    def __len__(self) -> int:
        return len(self.dpus)

    def copy_to(self, symbol: str, buffers: Sequence[np.ndarray | None], offset: int = 0) -> None:
        """Host -> MRAM copy of one buffer per DPU; ``None`` skips a DPU."""
        per_dpu = [0] * len(self.dpus)
        transfers = 0
        for dpu, values in zip(self.dpus, buffers):
            if values is None:
                continue
            dpu.mram.store(symbol, values, offset)
            per_dpu[dpu.index] = len(values) * ELEMENT_BYTES
            transfers += 1
        self.ledger.record_host_to_dpu(self.cfg, per_dpu, transfers)
        self._loaded = True

    def copy_from(self, symbol: str, dpus: Sequence[int] | None = None, length: int | None = None) -> list[np.ndarray]:
        """MRAM -> host copy of ``symbol`` from each listed DPU."""
        indices = range(len(self.dpus)) if dpus is None else dpus
        out = []
        per_dpu = [0] * len(self.dpus)
        for i in indices:
            values = self.dpus[i].mram.load(symbol, length)
            per_dpu[i] = len(values) * ELEMENT_BYTES
            out.append(values)
        self.ledger.record_dpu_to_host(self.cfg, per_dpu, len(out))
        return out

    def scatter(self, buffers: Mapping[str, Sequence[np.ndarray | None]]) -> None:
        """One host -> DPU round: all symbols share the per-DPU bandwidth."""
        per_dpu = [0] * len(self.dpus)
        transfers = 0
        active: set[int] = set()
        for symbol, values_per_dpu in buffers.items():
            for dpu, values in zip(self.dpus, values_per_dpu):
                if values is None:
                    continue
                dpu.mram.store(symbol, values)
                per_dpu[dpu.index] += len(values) * ELEMENT_BYTES
                transfers += 1
                active.add(dpu.index)
        self.ledger.record_host_to_dpu(self.cfg, per_dpu, transfers)
        self.ledger.scatter_rounds += 1
        self._active = sorted(active)
        self._loaded = True
        self._pending_outputs = ()

    def launch(self, kernel: DpuKernel, tasklets: int | None = None) -> list[DpuRun]:
        if not self._loaded:
            raise UnloadedData(code="UNLOADED_DATA", message="launch before any data was scattered to the DPUs")
        tasklets = tasklets or self.cfg.tasklets_per_dpu
        active = self._active or list(range(len(self.dpus)))
        if self.workers > 1 and len(active) > 1:
            with ThreadPoolExecutor(max_workers=min(self.workers, len(active))) as pool:
                runs = list(pool.map(lambda i: self.dpus[i].run(kernel, tasklets, self.cfg), active))
        else:
            runs = [self.dpus[i].run(kernel, tasklets, self.cfg) for i in active]
        ops = OpCounter()
        for run in runs:
            ops.merge(run.total_ops())
        cycles = [self.dpus[i].last_cycles for i in active]
        self.ledger.record_launch(self.cfg, cycles, ops)
        self._pending_outputs = kernel.outputs
        LOGGER.debug(
            "launch",
            extra={"kernel": kernel.kind.value, "dpus": len(active), "tasklets": tasklets, "max_cycles": max(cycles)},
        )
        return runs

    def gather(self) -> dict[str, list[np.ndarray]]:
        """One DPU -> host round over every output symbol of the last launch."""
        if not self._pending_outputs:
            raise UnloadedData(code="UNLOADED_DATA", message="gather before a kernel produced results")
        active = self._active or list(range(len(self.dpus)))
        per_dpu = [0] * len(self.dpus)
        transfers = 0
        results: dict[str, list[np.ndarray]] = {}
        for symbol in self._pending_outputs:
            results[symbol] = []
            for i in active:
                values = self.dpus[i].mram.load(symbol)
                per_dpu[i] += len(values) * ELEMENT_BYTES
                transfers += 1
                results[symbol].append(values)
        self.ledger.record_dpu_to_host(self.cfg, per_dpu, transfers)
        self.ledger.gather_rounds += 1
        return results
