"""Command-line entry point: ``python -m app.cli {bench,scaling,explain,serve}``.

Exit status: 0 success, 2 usage or configuration error, 3 PIM/CPU correctness mismatch.
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from pydantic import ValidationError

from app.bench.config import DEFAULT_DPU_SWEEP, Backend, BenchConfig, BenchOp, CpuTiming, load_bench_defaults, parse_int_list, parse_log_n
from app.bench.explain import explain
from app.bench.runner import run_bench, run_scaling, write_csv
from app.config import load_settings
from app.costmodel.model import OpKind
from app.costmodel.params import CostParams
from app.errors import CorrectnessMismatch, PimheError
from app.logger import configure_logging

LOGGER = logging.getLogger("pimhe.cli")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISMATCH = 3


def _add_bench_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--op", choices=[op.value for op in BenchOp], help="workload to run")
    parser.add_argument("--log-n", help="sizes as log2(n): A..B, a,b,c or a single value")
    parser.add_argument("--dpus", help="comma-separated DPU counts")
    parser.add_argument("--tasklets", type=int, help="tasklets per DPU (1-24)")
    parser.add_argument("--repetitions", type=int, help="timed repetitions per row (median reported)")
    parser.add_argument("--warmup", type=int, help="untimed warmup iterations")
    parser.add_argument("--seed", type=int, help="run seed")
    parser.add_argument("--backend", choices=[b.value for b in Backend])
    parser.add_argument("--cpu-timing", choices=[c.value for c in CpuTiming], help="model (deterministic) or wallclock")
    parser.add_argument("--q-bits", type=int, help="modulus width for the polynomial kernels")
    parser.add_argument("--workers", type=int, help="threads used to run simulated DPUs")
    parser.add_argument("--output", "-o", help="CSV path; stdout when omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pimhe", description="PIM simulator and HE kernel benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_bench_arguments(sub.add_parser("bench", help="CPU reference vs simulated PIM sweep"))
    _add_bench_arguments(sub.add_parser("scaling", help="one size across DPU counts"))

    explain_parser = sub.add_parser("explain", help="cost-model breakdown for one size")
    explain_parser.add_argument("--op", required=True, choices=[k.value for k in OpKind])
    explain_parser.add_argument("--log-n", type=int, required=True)
    explain_parser.add_argument("--dpus", type=int, default=1024)
    explain_parser.add_argument("--tasklets", type=int, default=16)

    sub.add_parser("serve", help="run the HTTP service")
    return parser


_ARG_FIELDS = ("op", "tasklets", "repetitions", "warmup", "seed", "backend", "cpu_timing", "q_bits", "workers", "output")


def bench_config_from_args(args: argparse.Namespace, defaults: dict) -> BenchConfig:
    values = dict(defaults)
    for name in _ARG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    if args.log_n is not None:
        values["log_n"] = parse_log_n(args.log_n)
    if args.dpus is not None:
        values["dpus"] = parse_int_list(args.dpus)
    elif args.command == "scaling" and "dpus" not in defaults:
        values["dpus"] = list(DEFAULT_DPU_SWEEP)
    if "seed" not in values:
        values["seed"] = load_settings().default_seed
    return BenchConfig(**values)


def _run(args: argparse.Namespace) -> int:
    settings = load_settings()
    if args.command == "serve":
        import uvicorn

        uvicorn.run("app.main:app", host=settings.host, port=settings.port, log_level=settings.log_level.lower())
        return EXIT_OK

    if args.command == "explain":
        base = CostParams()
        params = base.model_copy(update={"dpu": base.dpu.with_dpus(args.dpus).with_tasklets(args.tasklets)})
        sys.stdout.write(explain(args.op, 1 << args.log_n, params))
        return EXIT_OK

    cfg = bench_config_from_args(args, load_bench_defaults(settings.bench_config_path))
    if cfg.workers == 1 and settings.sim_workers > 1:
        cfg = cfg.model_copy(update={"workers": settings.sim_workers})
    rows = run_scaling(cfg) if args.command == "scaling" else run_bench(cfg)
    text = write_csv(rows, cfg.output)
    if not cfg.output:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging(load_settings().log_level)
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except CorrectnessMismatch as exc:
        LOGGER.error(exc.message, extra={"code": exc.code})
        return EXIT_MISMATCH
    except PimheError as exc:
        LOGGER.error(exc.message, extra={"code": exc.code})
        return EXIT_USAGE
    except ValidationError as exc:
        LOGGER.error("invalid configuration: %s", exc.errors(include_url=False))
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
