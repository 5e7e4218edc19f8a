"""seeded BB84 session: raw rounds, sifting, estimation, abort decision.

the receiver is not simulated photon by photon; his basis and outcome are
drawn from the exact joint outcome distribution of the channel state,
conditioned on the sender's basis and bit.  a session is reproducible from
its 64-bit seed: the generator is split into five labeled sub-streams
(alice-bits, alice-bases, bob-bases, bob-outcomes, test-set) so that each
random decision has its own stream.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from .channel import BASES, ChannelParams, channel_state, default_povm, outcome_distribution

MIN_RAW_ROUNDS = 100
DEFAULT_TEST_FRACTION = 0.1
DEFAULT_QBER_THRESHOLD = 0.11

STREAM_LABELS = ("alice-bits", "alice-bases", "bob-bases", "bob-outcomes", "test-set")


class ProtocolAbort(Exception):
    """raised by callers that treat an aborted session as an error path."""


@dataclass
class SiftedSession:
    """outcome of one session after sifting and parameter estimation.

    alice_key/bob_key hold the post-test-removal sifted bits (uint8 0/1);
    for an aborted session both are empty.  qber_est is the disclosed-test
    estimate, qber_true the exact mismatch rate of the surviving key bits.
    """

    n_raw: int
    alice_key: np.ndarray
    bob_key: np.ndarray
    qber_est: float
    qber_true: float
    test_fraction: float
    aborted: bool
    seed: int
    params: ChannelParams
    n_test: int

    @property
    def n_sifted(self) -> int:
        return int(self.alice_key.size)


def qber_exact(a: np.ndarray, b: np.ndarray) -> float:
    """exact mismatch fraction of two equal-length bit arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("keys must have equal length")
    if a.size == 0:
        return 0.0
    return float(np.mean(a != b))


def _streams(seed: int):
    root = np.random.SeedSequence(int(seed))
    children = root.spawn(len(STREAM_LABELS))
    return {label: np.random.default_rng(c) for label, c in zip(STREAM_LABELS, children)}


def _conditional_outcome_table(params: ChannelParams) -> np.ndarray:
    """P(receiver bit = 1 | sender basis a, sender bit x, receiver basis b).

    indexed [a, x, b] with Z = 0, X = 1.
    """
    dist = outcome_distribution(channel_state(params), default_povm())
    table = np.zeros((2, 2, 2))
    for ai, alpha in enumerate(BASES):
        for bi, beta in enumerate(BASES):
            for x in (0, 1):
                p0 = dist.probability(alpha, beta, x, 0)
                p1 = dist.probability(alpha, beta, x, 1)
                table[ai, x, bi] = p1 / (p0 + p1)
    return table


def run_session(
    n_raw: int,
    params: ChannelParams,
    test_fraction: float = DEFAULT_TEST_FRACTION,
    qber_threshold: float = DEFAULT_QBER_THRESHOLD,
    seed: int = 0,
) -> SiftedSession:
    """run one seeded session and return the sifted keys plus estimates.

    aborts (empty keys, aborted=True) when the disclosed-test estimate
    exceeds qber_threshold.  test positions are sampled uniformly without
    replacement from the sifted positions and removed from both keys.
    """
    if n_raw < MIN_RAW_ROUNDS:
        raise ValueError(f"n_raw must be >= {MIN_RAW_ROUNDS}, got {n_raw}")
    if not 0.0 < test_fraction < 0.5:
        raise ValueError(f"test_fraction must be in (0, 0.5), got {test_fraction}")
    if not 0.0 <= qber_threshold < 0.5:
        raise ValueError(f"qber_threshold must be in [0, 0.5), got {qber_threshold}")

    rngs = _streams(seed)
    alice_bits = rngs["alice-bits"].integers(0, 2, size=n_raw, dtype=np.uint8)
    alice_bases = rngs["alice-bases"].integers(0, 2, size=n_raw, dtype=np.uint8)
    bob_bases = rngs["bob-bases"].integers(0, 2, size=n_raw, dtype=np.uint8)

    p_one = _conditional_outcome_table(params)[alice_bases, alice_bits, bob_bases]
    bob_bits = (rngs["bob-outcomes"].random(n_raw) < p_one).astype(np.uint8)

    matched = alice_bases == bob_bases
    alice_sift = alice_bits[matched]
    bob_sift = bob_bits[matched]
    n_sifted_total = int(alice_sift.size)

    n_test = int(test_fraction * n_sifted_total)
    if n_test > 0:
        test_idx = np.sort(rngs["test-set"].choice(n_sifted_total, size=n_test, replace=False))
        test_mask = np.zeros(n_sifted_total, dtype=bool)
        test_mask[test_idx] = True
        qber_est = qber_exact(alice_sift[test_mask], bob_sift[test_mask])
        alice_key = alice_sift[~test_mask]
        bob_key = bob_sift[~test_mask]
    else:
        qber_est = 0.0
        alice_key = alice_sift
        bob_key = bob_sift

    qber_true = qber_exact(alice_key, bob_key)
    aborted = qber_est > qber_threshold
    if aborted:
        alice_key = np.zeros(0, dtype=np.uint8)
        bob_key = np.zeros(0, dtype=np.uint8)

    return SiftedSession(
        n_raw=n_raw,
        alice_key=alice_key,
        bob_key=bob_key,
        qber_est=float(qber_est),
        qber_true=float(qber_true),
        test_fraction=test_fraction,
        aborted=aborted,
        seed=int(seed),
        params=params,
        n_test=n_test,
    )


def pack_bits(bits: np.ndarray) -> str:
    """base64 of the bit array packed MSB-first into bytes."""
    bits = np.asarray(bits, dtype=np.uint8)
    return base64.b64encode(np.packbits(bits).tobytes()).decode("ascii")


def unpack_bits(data: str, n: int) -> np.ndarray:
    """inverse of pack_bits given the original bit count."""
    raw = np.frombuffer(base64.b64decode(data.encode("ascii")), dtype=np.uint8)
    return np.unpackbits(raw)[:n].astype(np.uint8)


def session_to_json(session: SiftedSession) -> str:
    """deterministic JSON encoding of a session (sorted keys, packed bits)."""
    obj = {
        "schema": "session.v1",
        "n_raw": session.n_raw,
        "n_sifted": session.n_sifted,
        "n_test": session.n_test,
        "alice_key": pack_bits(session.alice_key),
        "bob_key": pack_bits(session.bob_key),
        "qber_est": session.qber_est,
        "qber_true": session.qber_true,
        "test_fraction": session.test_fraction,
        "aborted": session.aborted,
        "seed": session.seed,
        "params": {"theta": session.params.theta, "q": session.params.q},
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def session_from_json(text: str) -> SiftedSession:
    """parse a session written by session_to_json."""
    obj = json.loads(text)
    if obj.get("schema") != "session.v1":
        raise ValueError("not a session file (missing schema marker)")
    n_sifted = int(obj["n_sifted"])
    return SiftedSession(
        n_raw=int(obj["n_raw"]),
        alice_key=unpack_bits(obj["alice_key"], n_sifted),
        bob_key=unpack_bits(obj["bob_key"], n_sifted),
        qber_est=float(obj["qber_est"]),
        qber_true=float(obj["qber_true"]),
        test_fraction=float(obj["test_fraction"]),
        aborted=bool(obj["aborted"]),
        seed=int(obj["seed"]),
        params=ChannelParams(theta=float(obj["params"]["theta"]), q=float(obj["params"]["q"])),
        n_test=int(obj["n_test"]),
    )
