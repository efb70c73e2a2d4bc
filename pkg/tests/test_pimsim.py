import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import AlignmentError, IndivisibleError, KernelPanic, MramOverflow, UnloadedData
from app.kernels.modmath import generate_ntt_prime
from app.kernels.ntt import ct_iteration, fast_negacyclic_mul, gs_iteration, ntt_forward_nwc, twiddle_table
from app.kernels.polyring import RingParams, cw_mul, poly_add, random_poly, schoolbook_convolution
from app.kernels.rns import build_basis, dcrt_mul, decompose, reconstruct
from app.pimsim.config import DpuSystemConfig
from app.pimsim.kernels import DpuKernel
from app.pimsim.ledger import TransferLedger, dpu_cycles, launch_time, transfer_time
from app.pimsim.partition import plan_partition, plan_towers
from app.pimsim.system import DpuSet, Mram
from app.pimsim.workflow import (
    run_dcrt_mul,
    run_intt_staged,
    run_negacyclic_mul_staged,
    run_ntt_staged,
    run_workflow,
)


def _ring(n, bits=30, seed=0):
    return RingParams(n, generate_ntt_prime(bits, n, seed))


class TestConfig:
    @pytest.mark.parametrize("tasklets", [0, 25])
    def test_tasklet_bounds(self, tasklets):
        with pytest.raises(ValidationError):
            DpuSystemConfig(tasklets_per_dpu=tasklets)

    def test_lint(self):
        assert DpuSystemConfig(tasklets_per_dpu=8).lint()
        assert DpuSystemConfig(tasklets_per_dpu=16).lint() == []

    def test_ranks(self):
        assert DpuSystemConfig().ranks(1) == 1
        assert DpuSystemConfig().ranks(1024) == 16


class TestPartition:
    def test_index_formulas(self):
        plan = plan_partition(1024, DpuSystemConfig(num_dpus=4, tasklets_per_dpu=16))
        assert (plan.per_dpu, plan.per_tasklet) == (256, 16)
        assert plan.dpu_range(1) == (256, 511)
        assert plan.tasklet_range(1, 2) == (288, 303)

    def test_tasklet_ranges_tile_the_vector(self):
        plan = plan_partition(96, DpuSystemConfig(num_dpus=3, tasklets_per_dpu=4))
        covered = [k for _, _, lo, hi in plan.ranges() for k in range(lo, hi + 1)]
        assert covered == list(range(96))

    def test_mram_capacity(self):
        cfg = DpuSystemConfig(num_dpus=1)
        assert plan_partition(1 << 20, cfg).per_dpu_bytes == 8 * 2**20
        with pytest.raises(MramOverflow):
            plan_partition(1 << 24, cfg)

    def test_indivisible_without_padding(self):
        with pytest.raises(IndivisibleError):
            plan_partition(10, DpuSystemConfig(num_dpus=4, tasklets_per_dpu=1, padding=False))

    def test_padding(self):
        plan = plan_partition(10, DpuSystemConfig(num_dpus=4, tasklets_per_dpu=1))
        assert (plan.padded_elements, plan.per_dpu, plan.padding) == (12, 3, 2)

    def test_padding_keeps_narrow_elements_aligned(self):
        plan = plan_partition(10, DpuSystemConfig(num_dpus=2, tasklets_per_dpu=2), element_bytes=4)
        assert (plan.per_tasklet * 4) % 8 == 0

    def test_misaligned_without_padding(self):
        with pytest.raises(AlignmentError):
            plan_partition(16, DpuSystemConfig(num_dpus=2, tasklets_per_dpu=8, padding=False), element_bytes=4)

    def test_tower_plan(self):
        plan = plan_towers(5, 64, DpuSystemConfig(num_dpus=2))
        assert plan.per_dpu == 3
        assert plan.active_dpus == 2
        assert list(plan.towers_on(1)) == [3, 4]


class TestTiming:
    def test_zero_bandwidth(self):
        cfg = DpuSystemConfig(per_dpu_bandwidth_bytes_per_s=0)
        assert math.isinf(transfer_time(cfg, 1, 8))
        assert transfer_time(cfg, 2, 0) == pytest.approx(1e-5)

    def test_pipeline_model(self):
        cfg = DpuSystemConfig()
        # one tasklet issues every pipeline_depth cycles
        assert dpu_cycles(cfg, [100]) == 1100
        assert dpu_cycles(cfg, [100] * 16) == 1600
        assert dpu_cycles(cfg, [100] * 16, serial_cycles=10) == 1710

    def test_launch_overhead_per_rank(self):
        cfg = DpuSystemConfig()
        assert launch_time(cfg, 1024, 0) > launch_time(cfg, 64, 0)
        assert launch_time(cfg, 1, 0) == pytest.approx(cfg.launch_overhead_s)


class TestMram:
    def test_unknown_symbol(self):
        with pytest.raises(UnloadedData):
            Mram(64).symbol("a")

    def test_capacity(self):
        with pytest.raises(MramOverflow):
            Mram(64).store("a", np.zeros(9, dtype=np.uint64))

    def test_store_load(self):
        mram = Mram(1024)
        mram.store("a", np.arange(4, dtype=np.uint64))
        assert mram.load("a").tolist() == [0, 1, 2, 3]
        assert mram.load("a", 16, offset=8).tolist() == [1, 2]

    def test_growing_symbol_reuses_space(self):
        mram = Mram(48)
        mram.store("a", np.array([1, 2], dtype=np.uint64))
        mram.store("b", np.array([3, 4], dtype=np.uint64))
        mram.store("a", np.arange(4, dtype=np.uint64))
        assert mram.used_bytes == 48
        assert mram.load("a").tolist() == [0, 1, 2, 3]
        assert mram.load("b").tolist() == [3, 4]

    def test_growth_keeps_existing_prefix(self):
        mram = Mram(1024)
        mram.store("a", np.array([1, 2], dtype=np.uint64))
        mram.store("b", np.array([3], dtype=np.uint64))
        mram.store("a", np.array([9], dtype=np.uint64), offset=16)
        assert mram.load("a").tolist() == [1, 2, 9]
        assert mram.load("b").tolist() == [3]
        assert mram.used_bytes == 32

    def test_last_symbol_grows_in_place(self):
        mram = Mram(1024)
        mram.store("a", np.zeros(2, dtype=np.uint64))
        mram.store("b", np.zeros(2, dtype=np.uint64))
        offset, _ = mram.symbol("b")
        mram.store("b", np.zeros(8, dtype=np.uint64))
        assert mram.symbol("b") == (offset, 64)
        mram.store("b", np.zeros(1, dtype=np.uint64))
        mram.store("b", np.zeros(4, dtype=np.uint64))
        assert mram.symbol("b") == (offset, 32)
        assert mram.used_bytes == 80

    def test_repeated_growing_scatters_fit(self):
        system = DpuSet(DpuSystemConfig(num_dpus=1, mram_bytes=256))
        for size in (2, 4, 8, 16):
            system.scatter({"a": [np.zeros(size, dtype=np.uint64)], "b": [np.zeros(size, dtype=np.uint64)]})
        assert system.dpus[0].mram.used_bytes == 256


class TestDpuSet:
    def test_misaligned_offsets(self):
        system = DpuSet(DpuSystemConfig(num_dpus=1))
        for offset in range(1, 8):
            with pytest.raises(AlignmentError):
                system.copy_to("a", [np.zeros(2, dtype=np.uint64)], offset=offset)

    def test_raw_copies(self):
        system = DpuSet(DpuSystemConfig(num_dpus=2))
        system.copy_to("x", [np.arange(4, dtype=np.uint64), None])
        assert system.copy_from("x", [0])[0].tolist() == [0, 1, 2, 3]
        assert system.ledger.host_dpu_bytes == 32
        assert system.ledger.dpu_host_bytes == 32

    def test_launch_before_scatter(self, q17):
        with pytest.raises(UnloadedData):
            DpuSet(DpuSystemConfig(num_dpus=1)).launch(DpuKernel.poly_add(q17))

    def test_gather_before_launch(self):
        system = DpuSet(DpuSystemConfig(num_dpus=1))
        system.scatter({"a": [np.zeros(2, dtype=np.uint64)]})
        with pytest.raises(UnloadedData):
            system.gather()

    def test_gather_twice(self, q17):
        system = DpuSet(DpuSystemConfig(num_dpus=2, tasklets_per_dpu=1))
        system.scatter(
            {
                "a": [np.array([1, 2], dtype=np.uint64), np.array([3, 4], dtype=np.uint64)],
                "b": [np.array([4, 3], dtype=np.uint64), np.array([2, 1], dtype=np.uint64)],
            }
        )
        system.launch(DpuKernel.poly_add(q17), 1)
        first = system.gather()
        once = system.ledger.dpu_host_bytes
        second = system.gather()
        assert [x.tobytes() for x in first["c"]] == [x.tobytes() for x in second["c"]]
        assert system.ledger.dpu_host_bytes == 2 * once
        assert system.ledger.gather_rounds == 2

    def test_scatter_accounting(self):
        n = 1 << 20
        system = DpuSet(DpuSystemConfig(num_dpus=64))
        parts = [np.zeros(n // 64, dtype=np.uint64)] * 64
        system.scatter({"a": parts, "b": parts})
        assert system.ledger.host_dpu_bytes == 16 * 2**20

    def test_more_dpus_more_latency(self):
        n = 1 << 16

        def scatter(count):
            system = DpuSet(DpuSystemConfig(num_dpus=count))
            parts = [np.zeros(n // count, dtype=np.uint64)] * count
            system.scatter({"a": parts, "b": parts})
            return system.ledger

        small, large = scatter(64), scatter(128)
        assert small.host_dpu_bytes == large.host_dpu_bytes
        assert large.host_dpu_transfers > small.host_dpu_transfers
        assert large.host_dpu_time > small.host_dpu_time


class TestWorkflows:
    def test_poly_add_hand_example(self, ring4, poly, small_system):
        a, b = poly([1, 2, 3, 4], ring4), poly([4, 3, 2, 1], ring4)
        result, ledger = run_workflow(DpuKernel.poly_add(ring4.modulus), (a, b), small_system(2, 2))
        assert result.tolist() == [5, 5, 5, 5]
        assert result == poly_add(a, b)
        assert (ledger.launches, ledger.scatter_rounds, ledger.gather_rounds) == (1, 1, 1)

    def test_cw_mul_with_padding(self, small_system):
        ring = _ring(256)
        a, b = random_poly(ring, 1), random_poly(ring, 2)
        result, _ = run_workflow(DpuKernel.cw_mul(ring.modulus), (a, b), small_system(3, 5))
        assert result == cw_mul(a, b)

    @pytest.mark.parametrize("dpus,tasklets", [(1, 1), (2, 4), (4, 2), (8, 16)])
    def test_convolution_matches_schoolbook(self, dpus, tasklets, small_system):
        ring = _ring(128)
        a, b = random_poly(ring, 3), random_poly(ring, 4)
        result, _ = run_workflow(DpuKernel.convolution(ring.modulus), (a, b), small_system(dpus, tasklets))
        assert result == schoolbook_convolution(a, b)

    def test_convolution_partials_overlap(self, small_system):
        ring = _ring(64)
        a, b = random_poly(ring, 5), random_poly(ring, 6)
        result, ledger = run_workflow(DpuKernel.convolution(ring.modulus), (a, b), small_system(4, 16))
        assert result == schoolbook_convolution(a, b)
        # b is broadcast to every DPU
        assert ledger.host_dpu_bytes == 4 * (16 + 64) * 8

    def test_chunked_execution_is_bit_exact(self, small_system):
        ring = _ring(256)
        a, b = random_poly(ring, 7), random_poly(ring, 8)
        cfg = small_system(2, 4, wram_chunk_bytes=48)
        result, _ = run_workflow(DpuKernel.cw_mul(ring.modulus), (a, b), cfg)
        assert result == cw_mul(a, b)
        product, _ = run_workflow(DpuKernel.convolution(ring.modulus), (a, b), cfg)
        assert product == schoolbook_convolution(a, b)

    def test_chunked_convolution_keeps_op_tally(self, small_system):
        ring = _ring(64)
        a, b = random_poly(ring, 3), random_poly(ring, 4)
        kernel = DpuKernel.convolution(ring.modulus)
        data = {"a": a.coeffs, "b": b.coeffs}
        whole = kernel.execute(0, data, 2, small_system(1, 2))
        chunked = kernel.execute(0, data, 2, small_system(1, 2, wram_chunk_bytes=24))
        assert chunked.outputs["c"].tolist() == whole.outputs["c"].tolist()
        for ops in chunked.tasklet_ops:
            assert (ops.mod_muls, ops.mod_adds) == (32 * 64, 31 * 63)

    @pytest.mark.parametrize("factory", [DpuKernel.poly_add, DpuKernel.cw_mul, DpuKernel.convolution])
    @pytest.mark.parametrize("chunk", [8, 1 << 15])
    def test_wram_overflow(self, factory, chunk, small_system):
        ring = _ring(64)
        a = random_poly(ring, 1)
        with pytest.raises(KernelPanic):
            run_workflow(factory(ring.modulus), (a, a), small_system(2, 4, wram_chunk_bytes=chunk))

    @pytest.mark.parametrize("factory", [DpuKernel.cw_mul, DpuKernel.convolution])
    def test_chunk_larger_than_tasklet_share(self, factory):
        ring = _ring(64)
        a, b = random_poly(ring, 1), random_poly(ring, 2)
        cfg = DpuSystemConfig(num_dpus=2, tasklets_per_dpu=16, wram_bytes=64, wram_chunk_bytes=64)
        with pytest.raises(KernelPanic):
            run_workflow(factory(ring.modulus), (a, b), cfg)

    def test_butterfly_stages_match_iterations(self, small_system):
        ring = _ring(32)
        table = twiddle_table(32, ring.modulus)
        p = random_poly(ring, 9)
        for stage in range(5):
            forward, _ = run_workflow(DpuKernel.butterfly_stage(ring.modulus, stage), (p, table), small_system(2, 2))
            assert forward == ct_iteration(p, stage, table)
            inverse, _ = run_workflow(
                DpuKernel.butterfly_stage(ring.modulus, stage, inverse=True), (p, table), small_system(2, 2)
            )
            assert inverse == gs_iteration(p, stage, table)

    def test_staged_ntt(self, small_system):
        ring = _ring(64)
        table = twiddle_table(64, ring.modulus)
        p = random_poly(ring, 10)
        forward, ledger = run_ntt_staged(p, table, small_system(4, 4))
        assert forward == ntt_forward_nwc(p, table)
        assert ledger.launches == ledger.scatter_rounds == ledger.gather_rounds == 6
        back, _ = run_intt_staged(forward, table, small_system(4, 4))
        assert back == p

    def test_staged_product_round_trips(self, small_system):
        ring = _ring(32)
        table = twiddle_table(32, ring.modulus)
        a, b = random_poly(ring, 1), random_poly(ring, 2)
        product, ledger = run_negacyclic_mul_staged(a, b, table, small_system(2, 4))
        assert product == fast_negacyclic_mul(a, b, table)
        assert ledger.launches == 3 * 5 + 1

    def test_staged_copies_exceed_single_shot(self, small_system):
        n = 64
        basis = build_basis(1, 30, n)
        ring = RingParams(n, basis.towers[0])
        table = twiddle_table(n, ring.modulus)
        a, b = random_poly(ring, 1), random_poly(ring, 2)
        _, staged = run_negacyclic_mul_staged(a, b, table, small_system(2, 4))
        _, single = run_dcrt_mul(decompose(a.tolist(), basis), decompose(b.tolist(), basis), None, small_system(2, 4))
        assert staged.host_dpu_bytes + staged.dpu_host_bytes > single.host_dpu_bytes + single.dpu_host_bytes
        assert staged.copy_time > single.copy_time
        assert single.launches == 1

    def test_dcrt_mul_uneven_towers(self, small_system):
        n = 32
        basis = build_basis(5, 30, n, seed=4)
        rng = np.random.default_rng(2)
        x = decompose([int(v) for v in rng.integers(0, 2**60, size=n)], basis)
        y = decompose([int(v) for v in rng.integers(0, 2**60, size=n)], basis)
        result, ledger = run_dcrt_mul(x, y, None, small_system(2, 4))
        assert reconstruct(result, basis) == reconstruct(dcrt_mul(x, y), basis)
        assert ledger.host_dpu_bytes == 4 * 5 * n * 8

    def test_workers_do_not_change_results_or_ledger(self, small_system):
        ring = _ring(128)
        a, b = random_poly(ring, 1), random_poly(ring, 2)
        kernel = DpuKernel.convolution(ring.modulus)
        serial, serial_ledger = run_workflow(kernel, (a, b), small_system(4, 4))
        threaded, threaded_ledger = run_workflow(kernel, (a, b), small_system(4, 4), workers=4)
        assert serial == threaded
        assert serial_ledger.as_dict() == threaded_ledger.as_dict()

    def test_ledger_merge(self):
        left = TransferLedger(host_dpu_bytes=8, launches=1)
        left.merge(TransferLedger(host_dpu_bytes=16, launches=2))
        assert (left.host_dpu_bytes, left.launches) == (24, 3)



SHAPES = [(1, 1), (1, 16), (2, 2), (2, 8), (3, 5), (4, 4), (4, 16), (8, 1), (8, 8), (16, 16), (32, 8), (64, 24)]


@pytest.mark.parametrize("dpus,tasklets", SHAPES)
def test_kernels_are_transparent(dpus, tasklets, small_system):
    n = 256
    ring = _ring(n)
    table = twiddle_table(n, ring.modulus)
    cfg = small_system(dpus, tasklets)
    padded = plan_partition(n, cfg).padded_elements
    half = plan_partition(n // 2, cfg).padded_elements
    per_dpu = padded // dpus

    for seed in range(5):
        a, b = random_poly(ring, 2 * seed + 11), random_poly(ring, 2 * seed + 12)
        for kernel, reference in (
            (DpuKernel.poly_add(ring.modulus), poly_add(a, b)),
            (DpuKernel.cw_mul(ring.modulus), cw_mul(a, b)),
        ):
            result, ledger = run_workflow(kernel, (a, b), cfg)
            assert result == reference
            assert (ledger.host_dpu_bytes, ledger.dpu_host_bytes) == (2 * padded * 8, padded * 8)

        result, ledger = run_workflow(DpuKernel.convolution(ring.modulus), (a, b), cfg)
        assert result == schoolbook_convolution(a, b)
        assert ledger.host_dpu_bytes == dpus * (per_dpu + n) * 8
        assert ledger.dpu_host_bytes == dpus * (per_dpu + n - 1) * 8

        stage = seed % 8
        result, ledger = run_workflow(DpuKernel.butterfly_stage(ring.modulus, stage), (a, table), cfg)
        assert result == ct_iteration(a, stage, table)
        assert (ledger.host_dpu_bytes, ledger.dpu_host_bytes) == (3 * half * 8, 2 * half * 8)
