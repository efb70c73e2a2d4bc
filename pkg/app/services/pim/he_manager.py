from __future__ import annotations

import asyncio
from typing import Any

from app.kernels import hekernels as he

from .base import LOGGER, BaseManager


def _roundtrip(
    n: int, message: list[int], other: list[int] | None, t: int, q_bits: int, seed: int
) -> dict[str, Any]:
    params = he.SchemeParams.build(n, q_bits, t, seed=seed)
    keys = he.keygen(params, seed)
    c1 = he.encrypt(message, keys, params, seed + 1)
    result: dict[str, Any] = {
        "n": n,
        "q": params.q,
        "t": t,
        "decrypted": he.decrypt(c1, keys, params)[: len(message)],
        "noiseBudgetBits": he.noise_budget(c1, keys, params),
    }
    if other is None:
        return result

    c2 = he.encrypt(other, keys, params, seed + 2)
    width = max(len(message), len(other))
    padded = [message + [0] * (width - len(message)), other + [0] * (width - len(other))]
    expected_sum = [(x + y) % t for x, y in zip(*padded)]
    summed = he.decrypt(he.eval_add(c1, c2), keys, params)[:width]

    product = he.relinearize(he.eval_mult(c1, c2, params), keys, params)
    expected_product = he.plaintext_product(message, other, params)
    decrypted_product = he.decrypt(product, keys, params)
    result["add"] = {"decrypted": summed, "correct": summed == expected_sum}
    result["mult"] = {
        "decrypted": decrypted_product,
        "correct": decrypted_product == expected_product,
        "noiseBudgetBits": he.noise_budget(product, keys, params),
    }
    return result


class HeManager(BaseManager):
    async def roundtrip(self, payload: dict[str, Any]) -> dict[str, Any]:
        n = 1 << payload["logN"]
        seed = self._seed(payload.get("seed"))
        data = await asyncio.to_thread(
            _roundtrip, n, payload["message"], payload.get("other"), payload["plaintextModulus"], payload["qBits"], seed
        )
        LOGGER.info("he roundtrip served", extra={"n": n, "with_other": payload.get("other") is not None})
        return self._to_json_safe(data)
