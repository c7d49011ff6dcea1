"""Latency microbenchmark for the correction path (geometry only, no encoder)."""

from __future__ import annotations

import time

import numpy as np

from .core import AgcConfig, agc_infer
from .zeroshot import build_text_bank

_POOL_SIZE = 128
_WARMUP_FRACTION = 0.10


def bench_latency(
    d: int = 512,
    n_views: int = 32,
    iters: int = 10_000,
    n_classes: int = 100,
    seed: int = 0,
    cfg: AgcConfig | None = None,
) -> dict:
    """Time single-sample inference on pre-generated random inputs.

    The first 10% of iterations warm caches and are excluded from the
    statistics. Input generation and I/O are outside the timed region.
    """
    if iters < 100:
        raise ValueError("need at least 100 iterations")
    cfg = cfg or AgcConfig()
    rng = np.random.default_rng(seed)

    def unit_rows(shape):
        raw = rng.standard_normal(shape)
        return raw / np.linalg.norm(raw, axis=-1, keepdims=True)

    bank = build_text_bank(unit_rows((n_classes, d)), [f"class-{i:03d}" for i in range(n_classes)])
    pool = min(iters, _POOL_SIZE)
    zs = unit_rows((pool, d))
    views = unit_rows((pool, n_views, d))

    times = np.zeros(iters, dtype=np.float64)
    for i in range(iters):
        k = i % pool
        t0 = time.perf_counter()
        agc_infer(zs[k], views[k], bank, cfg)
        times[i] = time.perf_counter() - t0
    warmup = int(iters * _WARMUP_FRACTION)
    measured = times[warmup:]
    return {
        "d": int(d),
        "n_views": int(n_views),
        "n_classes": int(n_classes),
        "iters": int(iters),
        "warmup_excluded": warmup,
        "mean_s": float(measured.mean()),
        "p50_s": float(np.percentile(measured, 50)),
        "p95_s": float(np.percentile(measured, 95)),
    }
