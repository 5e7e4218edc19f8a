"""timing harness: reconciliation and predictor inference vs a calibrated
dense-solver cost model.

the "traditional" post-processing cost is modeled as c1*n + c2*n^2 + c3*n^3
with per-element constants calibrated by timing dense vector/matrix
primitives at sizes up to 512 on this machine, then extrapolated.  scaling
is summarized by least-squares slopes in log-log space.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .autoencoder import AutoencoderModel, predict
from .cascade import CascadeConfig, run_cascade

BENCH_ERROR_RATE = 0.05
CALIBRATION_MAX_SIZE = 512

CSV_HEADER = "n,cascade_seconds,inference_seconds,traditional_model_seconds"


@dataclass
class BenchRow:
    n: int
    cascade_seconds: float
    inference_seconds: float
    traditional_model_seconds: float


def _best_time(fn, trials: int) -> float:
    best = math.inf
    for _ in range(max(1, trials)):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def calibrate_cost_model(seed: int = 0, trials: int = 5):
    """per-element costs (c1, c2, c3) of dense O(n), O(n^2), O(n^3) primitives."""
    rng = np.random.default_rng(int(seed))
    sizes = (128, 256, CALIBRATION_MAX_SIZE)
    c1s, c2s, c3s = [], [], []
    for s in sizes:
        v = rng.normal(size=s)
        w = rng.normal(size=s)
        m = rng.normal(size=(s, s))
        c1s.append(_best_time(lambda: v + w, trials) / s)
        c2s.append(_best_time(lambda: m @ v, trials) / s**2)
        c3s.append(_best_time(lambda: m @ m, trials) / s**3)
    return float(np.median(c1s)), float(np.median(c2s)), float(np.median(c3s))


def traditional_seconds(n: int, coeffs) -> float:
    c1, c2, c3 = coeffs
    return c1 * n + c2 * n**2 + c3 * n**3


def _synthetic_pair(n: int, e: float, seed: int):
    rng = np.random.default_rng(int(seed))
    alice = rng.integers(0, 2, size=n, dtype=np.uint8)
    flips = (rng.random(n) < e).astype(np.uint8)
    return alice, alice ^ flips


def fit_loglog_slope(ns, ts) -> float:
    """least-squares slope of log10(t) against log10(n)."""
    ns = np.asarray(ns, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if ns.size < 2 or np.any(ts <= 0):
        raise ValueError("need at least two sizes with positive times")
    return float(np.polyfit(np.log10(ns), np.log10(ts), 1)[0])


def bench(sizes, model: AutoencoderModel, trials: int = 1, seed: int = 0):
    """time reconciliation and batched inference at each size.

    returns (rows, summary) where summary holds the fitted log-log slopes
    and the traditional/inference ratio at the largest size.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or sizes[0] < 1000:
        raise ValueError("benchmark sizes must be >= 1000")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("benchmark sizes must be strictly increasing")
    coeffs = calibrate_cost_model(seed=seed)
    rng = np.random.default_rng(int(seed) + 1)
    rows = []
    for n in sizes:
        alice, bob = _synthetic_pair(n, BENCH_ERROR_RATE, seed + n)
        cascade_t = _best_time(
            lambda: run_cascade(alice, bob, BENCH_ERROR_RATE, CascadeConfig(seed=seed)), trials
        )
        feats = np.column_stack(
            [
                rng.uniform(3.0, 6.0, size=n),
                rng.integers(1, 11, size=n).astype(float),
                rng.uniform(0.0, 0.1, size=n),
            ]
        )
        inference_t = _best_time(lambda: predict(model, feats), trials)
        rows.append(
            BenchRow(
                n=n,
                cascade_seconds=cascade_t,
                inference_seconds=inference_t,
                traditional_model_seconds=traditional_seconds(n, coeffs),
            )
        )
    summary = {
        "cascade_slope": fit_loglog_slope([r.n for r in rows], [r.cascade_seconds for r in rows]),
        "inference_slope": fit_loglog_slope(
            [r.n for r in rows], [r.inference_seconds for r in rows]
        ),
        "traditional_slope": fit_loglog_slope(
            [r.n for r in rows], [r.traditional_model_seconds for r in rows]
        ),
        "traditional_over_inference_at_max": rows[-1].traditional_model_seconds
        / rows[-1].inference_seconds,
        "cost_coefficients": list(coeffs),
    }
    return rows, summary


def save_csv(rows, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.n},{r.cascade_seconds:.17g},{r.inference_seconds:.17g},"
                f"{r.traditional_model_seconds:.17g}\n"
            )


def load_csv(path: str) -> list[BenchRow]:
    rows = []
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"line 1: unexpected header {header!r}")
        for ln, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != 4:
                raise ValueError(f"line {ln}: expected 4 fields, got {len(parts)}")
            rows.append(
                BenchRow(
                    n=int(parts[0]),
                    cascade_seconds=float(parts[1]),
                    inference_seconds=float(parts[2]),
                    traditional_model_seconds=float(parts[3]),
                )
            )
    return rows
