from __future__ import annotations

from app.costmodel.model import OpKind, crossover_n, estimate
from app.costmodel.params import CostParams


def _seconds(value: float) -> str:
    return f"{value:.6e} s"


def explain(op_kind: OpKind | str, n: int, params: CostParams | None = None) -> str:
    """Human-readable breakdown of one model evaluation."""
    params = params or CostParams()
    est = estimate(op_kind, n, params)
    crossover = crossover_n(est.op, params)
    lines = [
        f"op:               {est.op.value}",
        f"n:                {n}",
        f"dpus:             {est.num_dpus} x {params.dpu.tasklets_per_dpu} tasklets",
        f"alpha:            {est.alpha} (~{float(est.alpha):.4g})",
        f"cpu_time:         {_seconds(est.cpu_time_s)} ({params.cpu_threads} threads)",
        f"cpu_single:       {_seconds(est.cpu_single_thread_time_s)}",
        f"dpu_kernel:       {_seconds(est.dpu_kernel_time_s)}",
        f"host_dpu:         {_seconds(est.host_dpu_time_s)} ({est.host_dpu_bytes} bytes)",
        f"dpu_host:         {_seconds(est.dpu_host_time_s)} ({est.dpu_host_bytes} bytes)",
        f"dpu_total:        {_seconds(est.dpu_total_time_s)}",
        f"winner:           {est.winner}",
        f"winner (kernel):  {est.winner_kernel_only}",
        f"crossover_n:      {crossover if crossover is not None else 'none in [2^4, 2^24]'}",
    ]
    return "\n".join(lines) + "\n"
