"""CPU-reference vs simulated-PIM sweeps, emitted as CSV rows."""
from __future__ import annotations

import csv
import io
import logging
import statistics
import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from app.bench.config import Backend, BenchConfig, BenchOp, CpuTiming
from app.costmodel.model import OpKind, alpha_ratio, cpu_times
from app.costmodel.params import CostParams
from app.errors import CorrectnessMismatch, ParameterError
from app.kernels import hekernels as he
from app.kernels.modmath import generate_ntt_prime
from app.kernels.ntt import ntt_forward_nwc, twiddle_table
from app.kernels.polyring import RingParams, cw_mul, make_rng, poly_add, random_poly, schoolbook_convolution
from app.kernels.rns import build_basis, dcrt_mul, decompose, reconstruct_centered
from app.pimsim.config import DpuSystemConfig
from app.pimsim.kernels import DpuKernel
from app.pimsim.ledger import TransferLedger
from app.pimsim.workflow import run_dcrt_mul, run_ntt_staged, run_workflow

LOGGER = logging.getLogger("pimhe.bench")

CSV_COLUMNS = ("op", "n", "backend", "dpus", "tasklets", "cpu_time", "dpu_time", "host_dpu", "dpu_host", "alpha", "correct")


@dataclass(frozen=True)
class BenchRow:
    op: str
    n: int
    backend: str
    dpus: int
    tasklets: int
    cpu_time: float
    dpu_time: float | None
    host_dpu: float | None
    dpu_host: float | None
    alpha: Fraction
    correct: bool | None

    def csv_fields(self) -> list[str]:
        def seconds(value: float | None) -> str:
            return "" if value is None else f"{value:.9e}"

        return [
            self.op,
            str(self.n),
            self.backend,
            str(self.dpus),
            str(self.tasklets),
            seconds(self.cpu_time),
            seconds(self.dpu_time),
            seconds(self.host_dpu),
            seconds(self.dpu_host),
            str(self.alpha),
            "" if self.correct is None else str(self.correct).lower(),
        ]

    def as_dict(self) -> dict[str, object]:
        return dict(zip(CSV_COLUMNS, self.csv_fields()))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent, platform-stable seed per (run seed, keys)."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, dtype=np.uint32)[0])


def _median_wallclock(fn: Callable[[], object], repetitions: int, warmup: int) -> float:
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


@dataclass
class _Case:
    """One (op, n) workload: a CPU reference, its modeled cost, and a PIM runner per DPU config."""

    model_kind: OpKind
    towers: int
    reference: Callable[[], object]
    run_pim: Callable[[DpuSystemConfig], tuple[object, TransferLedger]]
    check: Callable[[object, object], bool]
    reference_ok: Callable[[object], bool] | None = None


def _same(reference: object, result: object) -> bool:
    return reference == result


def _kernel_case(op: BenchOp, n: int, cfg: BenchConfig, seed: int) -> _Case:
    ring = RingParams(n, generate_ntt_prime(cfg.q_bits, n, seed))
    rng = make_rng(seed)
    a, b = random_poly(ring, rng), random_poly(ring, rng)
    if op in (BenchOp.ADD, BenchOp.CWMUL, BenchOp.CONV):
        reference, kernel, kind = {
            BenchOp.ADD: (poly_add, DpuKernel.poly_add, OpKind.ADD),
            BenchOp.CWMUL: (cw_mul, DpuKernel.cw_mul, OpKind.CWMUL),
            BenchOp.CONV: (schoolbook_convolution, DpuKernel.convolution, OpKind.CONV),
        }[op]
        return _Case(
            model_kind=kind,
            towers=1,
            reference=lambda: reference(a, b),
            run_pim=lambda dpu: run_workflow(kernel(ring.modulus), (a, b), dpu, workers=cfg.workers),
            check=_same,
        )
    table = twiddle_table(n, ring.modulus)
    if op is BenchOp.NTT_STAGE:
        return _Case(
            model_kind=OpKind.NTT_STAGED,
            towers=1,
            reference=lambda: ntt_forward_nwc(a, table),
            run_pim=lambda dpu: run_ntt_staged(a, table, dpu, workers=cfg.workers),
            check=_same,
        )
    basis = build_basis(1, cfg.q_bits, n, seed)
    pa = decompose([int(v) % basis.big_q for v in a.tolist()], basis)
    pb = decompose([int(v) % basis.big_q for v in b.tolist()], basis)
    return _Case(
        model_kind=OpKind.NTT_TOWER,
        towers=1,
        reference=lambda: dcrt_mul(pa, pb),
        run_pim=lambda dpu: run_dcrt_mul(pa, pb, None, dpu, workers=cfg.workers),
        check=_same,
    )


def _he_case(op: BenchOp, n: int, cfg: BenchConfig, seed: int) -> _Case:
    params = he.SchemeParams.build(n, cfg.he_q_bits, cfg.plaintext_modulus, seed=seed)
    keys = he.keygen(params, derive_seed(seed, 1))
    rng = make_rng(derive_seed(seed, 2))
    m1 = rng.integers(0, params.t, size=n).tolist()
    m2 = rng.integers(0, params.t, size=n).tolist()
    c1 = he.encrypt(m1, keys, params, derive_seed(seed, 3))
    c2 = he.encrypt(m2, keys, params, derive_seed(seed, 4))

    if op is BenchOp.HE_ADD:
        expected = [(x + y) % params.t for x, y in zip(m1, m2)]

        def run_pim(dpu: DpuSystemConfig) -> tuple[object, TransferLedger]:
            ledger = TransferLedger()
            kernel = DpuKernel.poly_add(params.ring.modulus)
            elements = []
            for x, y in zip(c1.elements, c2.elements):
                summed, _ = run_workflow(kernel, (x, y), dpu, workers=cfg.workers, ledger=ledger)
                elements.append(summed)
            return he.decrypt(he.Ciphertext(tuple(elements)), keys, params), ledger

        return _Case(
            model_kind=OpKind.ADD,
            towers=1,
            reference=lambda: he.decrypt(he.eval_add(c1, c2), keys, params),
            run_pim=run_pim,
            check=lambda ref, got: ref == got == expected,
            reference_ok=lambda ref: ref == expected,
        )

    expected = he.plaintext_product(m1, m2, params)
    basis = he.aux_basis(n, params.q.bit_length())

    def run_pim(dpu: DpuSystemConfig) -> tuple[object, TransferLedger]:
        ledger = TransferLedger()

        def tensor(x: Sequence[int], y: Sequence[int]) -> list[int]:
            big_q = basis.big_q
            px = decompose([v % big_q for v in x], basis)
            py = decompose([v % big_q for v in y], basis)
            product, used = run_dcrt_mul(px, py, None, dpu, workers=cfg.workers)
            ledger.merge(used)
            return reconstruct_centered(product, basis)

        product = he.relinearize(he.eval_mult(c1, c2, params, tensor=tensor), keys, params)
        return he.decrypt(product, keys, params), ledger

    return _Case(
        model_kind=OpKind.NTT_TOWER,
        towers=4 * basis.k,
        reference=lambda: he.decrypt(he.relinearize(he.eval_mult(c1, c2, params), keys, params), keys, params),
        run_pim=run_pim,
        check=lambda ref, got: ref == got == expected,
        reference_ok=lambda ref: ref == expected,
    )


def _build_case(op: BenchOp, n: int, cfg: BenchConfig, seed: int) -> _Case:
    if op in (BenchOp.HE_ADD, BenchOp.HE_MULT):
        return _he_case(op, n, cfg, seed)
    return _kernel_case(op, n, cfg, seed)


def _cpu_time(case: _Case, n: int, cfg: BenchConfig, cost: CostParams) -> float:
    if cfg.cpu_timing is CpuTiming.WALLCLOCK:
        return _median_wallclock(case.reference, cfg.repetitions, cfg.warmup)
    return cpu_times(case.model_kind, n, cost, case.towers)[0]


def _rows_for(cfg: BenchConfig, log_n: int, dpu_counts: Sequence[int], cost: CostParams) -> Iterable[BenchRow]:
    n = 1 << log_n
    case = _build_case(cfg.op, n, cfg, derive_seed(cfg.seed, log_n))
    alpha = alpha_ratio(case.model_kind, n, case.towers)
    cpu_time = _cpu_time(case, n, cfg, cost)
    reference = case.reference()
    if cfg.backend in (Backend.CPU, Backend.BOTH):
        correct = case.reference_ok(reference) if case.reference_ok else None
        if correct is False:
            raise CorrectnessMismatch(
                code="CORRECTNESS_MISMATCH",
                message=f"{cfg.op.value} reference failed its decryption check at n={n}",
                details={"op": cfg.op.value, "n": n},
            )
        yield BenchRow(cfg.op.value, n, Backend.CPU.value, 0, 0, cpu_time, None, None, None, alpha, correct)
    if cfg.backend is Backend.CPU:
        return
    for count in dpu_counts:
        dpu = DpuSystemConfig(**{**cost.dpu.model_dump(), "num_dpus": count, "tasklets_per_dpu": cfg.tasklets})
        result, ledger = case.run_pim(dpu)
        if not case.check(reference, result):
            raise CorrectnessMismatch(
                code="CORRECTNESS_MISMATCH",
                message=f"simulated {cfg.op.value} differs from the CPU reference at n={n}, dpus={count}",
                details={"op": cfg.op.value, "n": n, "dpus": count},
            )
        yield BenchRow(
            cfg.op.value,
            n,
            Backend.PIM.value,
            count,
            cfg.tasklets,
            cpu_time,
            ledger.kernel_time,
            ledger.host_dpu_time,
            ledger.dpu_host_time,
            alpha,
            True,
        )


def _warn_oversized(cfg: BenchConfig) -> None:
    for log_n in cfg.oversized():
        LOGGER.warning(
            "size beyond desk-scale cap; expect long runtimes",
            extra={"op": cfg.op.value, "log_n": log_n},
        )


def run_bench(cfg: BenchConfig, cost: CostParams | None = None) -> list[BenchRow]:
    cost = cost or CostParams()
    _warn_oversized(cfg)
    rows: list[BenchRow] = []
    for log_n in cfg.log_n:
        rows.extend(_rows_for(cfg, log_n, cfg.dpus, cost))
    LOGGER.info("bench complete", extra={"op": cfg.op.value, "rows": len(rows)})
    return rows


def run_scaling(cfg: BenchConfig, cost: CostParams | None = None) -> list[BenchRow]:
    if len(cfg.log_n) != 1:
        raise ParameterError(
            code="INVALID_SCALING", message="scaling runs take exactly one size", details={"log_n": cfg.log_n}
        )
    cost = cost or CostParams()
    _warn_oversized(cfg)
    rows = list(_rows_for(cfg, cfg.log_n[0], cfg.dpus, cost))
    pim = [row for row in rows if row.backend == Backend.PIM.value]
    copies = [row.host_dpu for row in pim]
    if any(later < earlier for earlier, later in zip(copies, copies[1:])):
        LOGGER.warning("host->DPU copy time decreased with more DPUs", extra={"op": cfg.op.value})
    return rows


def render_csv(rows: Sequence[BenchRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buffer.getvalue()


def write_csv(rows: Sequence[BenchRow], path: str | None) -> str:
    text = render_csv(rows)
    if path:
        Path(path).write_text(text, encoding="utf-8")
    return text
