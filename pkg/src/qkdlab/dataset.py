"""training-corpus generation: one record per simulated session pipeline.

each record draws a source rate log-uniformly, runs the full chain
(session -> reconciliation -> verification -> amplification plan) at
n_initial = min(rate * 1 s, cap) raw rounds, and stores the outcome.  the
whole corpus is reproducible from the master seed, and every record carries
its own 64-bit seed so any row can be replayed in isolation (which is also
what makes record-level parallel generation safe).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .amplify import AmplificationPlan, privacy_amplify, verify_keys
from .cascade import CascadeConfig, run_cascade
from .channel import ChannelParams, channel_state
from .keyrate import VARIANT_F, binary_entropy, build_kraus, objective
from .protocol import DEFAULT_QBER_THRESHOLD, DEFAULT_TEST_FRACTION, run_session

N_INITIAL_CAP = 1_000_000
DEFAULT_RECORDS = 10_000
DEFAULT_Q_MAX = 0.16
ATTEMPT_CYCLE = 10

CSV_HEADER = (
    "attempt_id,rate_bps,n_initial,attempt_index,qber_true,qber_est,"
    "leak_ab_bits,leak_ba_bits,final_key_len,seed"
)

# sub-stream labels for the per-record stage seeds; offset past the
# protocol's own spawn children so no stream is reused across stages
_STREAM_CASCADE = 101
_STREAM_HASH = 102
_STREAM_TOEPLITZ = 103

_KRAUS_F = None


@dataclass
class DatasetRecord:
    attempt_id: int
    rate_bps: float
    n_initial: int
    attempt_index: int
    qber_true: float
    qber_est: float
    leak_ab_bits: int
    leak_ba_bits: int
    final_key_len: int
    seed: int


def stage_seed(record_seed: int, stream: int) -> int:
    """derive a deterministic per-stage seed from the record seed."""
    ss = np.random.SeedSequence(entropy=int(record_seed), spawn_key=(stream,))
    return int(ss.generate_state(1, np.uint64)[0])


def default_channel_sampler(rng: np.random.Generator) -> ChannelParams:
    """aligned bases, depolarizing weight uniform in [0, DEFAULT_Q_MAX]."""
    return ChannelParams(theta=0.0, q=float(rng.uniform(0.0, DEFAULT_Q_MAX)))


def entropy_rate_for(params: ChannelParams) -> float:
    """per-sifted-bit entropy term f(rho)/p_pass for the channel state."""
    global _KRAUS_F
    if _KRAUS_F is None:
        _KRAUS_F = build_kraus(VARIANT_F)
    f = objective(channel_state(params), kraus=_KRAUS_F)
    rate = f / _KRAUS_F.p_pass
    return min(1.0, max(0.0, rate))


def _pipeline(task) -> DatasetRecord:
    """run one full session pipeline; `task` carries the pre-drawn inputs."""
    (attempt_id, rate, n_initial, attempt_index, record_seed, theta, q,
     test_fraction, threshold, conservative) = task
    params = ChannelParams(theta=theta, q=q)
    session = run_session(
        n_initial, params, test_fraction=test_fraction, qber_threshold=threshold,
        seed=record_seed,
    )
    leak_ab = 0
    leak_ba = 0
    final_len = 0
    if not session.aborted and session.n_sifted >= 2:
        result = run_cascade(
            session.alice_key,
            session.bob_key,
            session.qber_est,
            CascadeConfig(seed=stage_seed(record_seed, _STREAM_CASCADE)),
        )
        leak_ab = result.transcript.leak_ab_bits
        leak_ba = result.transcript.leak_ba_bits
        verified = verify_keys(
            session.alice_key, result.corrected_bob_key, stage_seed(record_seed, _STREAM_HASH)
        )
        if verified:
            if conservative:
                rate_term = max(0.0, 1.0 - binary_entropy(min(0.5, session.qber_est)))
            else:
                rate_term = entropy_rate_for(params)
            plan = AmplificationPlan(
                input_len=session.n_sifted,
                leak_total=leak_ab + leak_ba + session.n_test,
                entropy_rate=rate_term,
            )
            final_len = plan.output_len
            if final_len > 0:
                privacy_amplify(session.alice_key, plan,
                                stage_seed(record_seed, _STREAM_TOEPLITZ))
    return DatasetRecord(
        attempt_id=attempt_id,
        rate_bps=rate,
        n_initial=n_initial,
        attempt_index=attempt_index,
        qber_true=session.qber_true,
        qber_est=session.qber_est,
        leak_ab_bits=leak_ab,
        leak_ba_bits=leak_ba,
        final_key_len=final_len,
        seed=record_seed,
    )


def generate(
    records: int,
    rate_min_bps: float,
    rate_max_bps: float,
    channel_sampler=None,
    master_seed: int = 0,
    test_fraction: float = DEFAULT_TEST_FRACTION,
    qber_threshold: float = DEFAULT_QBER_THRESHOLD,
    jobs: int = 1,
    conservative_entropy: bool = False,
) -> list[DatasetRecord]:
    """simulate `records` independent pipelines at log-uniform source rates.

    the sampler (default: default_channel_sampler) draws per-record channel
    parameters from the master stream; everything downstream of the
    pre-drawn inputs depends only on the record seed, so jobs > 1 changes
    nothing but wall time.  with conservative_entropy the amplification
    plan budgets 1 - h(qber_est) entropy per sifted bit instead of the
    channel-aware objective, making the planned output length a function
    of quantities both parties actually observe.
    """
    if records < 1:
        raise ValueError("need at least one record")
    if not 100 <= rate_min_bps <= rate_max_bps:
        raise ValueError("need 100 <= rate_min_bps <= rate_max_bps")
    if channel_sampler is None:
        channel_sampler = default_channel_sampler

    master = np.random.default_rng(int(master_seed))
    tasks = []
    for i in range(records):
        rate = float(10.0 ** master.uniform(math.log10(rate_min_bps), math.log10(rate_max_bps)))
        n_initial = min(int(rate), N_INITIAL_CAP)
        params = channel_sampler(master)
        record_seed = int(master.integers(0, 2**63, dtype=np.int64))
        tasks.append((i, rate, n_initial, (i % ATTEMPT_CYCLE) + 1, record_seed,
                      params.theta, params.q, test_fraction, qber_threshold,
                      bool(conservative_entropy)))

    if jobs <= 1:
        return [_pipeline(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_pipeline, tasks, chunksize=max(1, records // (jobs * 8))))


def split(records, train_fraction: float = 0.8, seed: int = 0):
    """seeded shuffle then cut into (train, test) lists."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    order = np.random.default_rng(int(seed)).permutation(len(records))
    cut = int(train_fraction * len(records))
    train = [records[i] for i in order[:cut]]
    test = [records[i] for i in order[cut:]]
    return train, test


def to_features(records):
    """(X, Y) arrays: [log10 n_initial, attempt_index, qber_est] ->
    [qber_true, final_key_len / n_initial]."""
    x = np.array(
        [[math.log10(r.n_initial), r.attempt_index, r.qber_est] for r in records], dtype=float
    )
    y = np.array(
        [[r.qber_true, r.final_key_len / r.n_initial] for r in records], dtype=float
    )
    return x, y


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_csv(records, path: str) -> None:
    """write the corpus with the fixed header; reals keep 17 significant digits."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.attempt_id},{_fmt(r.rate_bps)},{r.n_initial},{r.attempt_index},"
                f"{_fmt(r.qber_true)},{_fmt(r.qber_est)},{r.leak_ab_bits},{r.leak_ba_bits},"
                f"{r.final_key_len},{r.seed}\n"
            )


def load_csv(path: str) -> list[DatasetRecord]:
    """parse a corpus written by save_csv; errors name the offending line."""
    out = []
    with open(path, encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("line 1: empty file, expected header") from None
        if ",".join(header) != CSV_HEADER:
            raise ValueError(f"line 1: unexpected header {','.join(header)!r}")
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 10:
                raise ValueError(f"line {ln}: expected 10 fields, got {len(row)}")
            try:
                out.append(
                    DatasetRecord(
                        attempt_id=int(row[0]),
                        rate_bps=float(row[1]),
                        n_initial=int(row[2]),
                        attempt_index=int(row[3]),
                        qber_true=float(row[4]),
                        qber_est=float(row[5]),
                        leak_ab_bits=int(row[6]),
                        leak_ba_bits=int(row[7]),
                        final_key_len=int(row[8]),
                        seed=int(row[9]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"line {ln}: {exc}") from None
    return out
