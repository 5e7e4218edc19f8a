"""interactive parity-exchange reconciliation with full back-tracking.

pass 1 partitions the key sequentially into blocks of k1 (by default
ceil(0.73 / max(qber_est, 1/n))); every later pass applies a seeded uniform
permutation and doubles the block size.  for every block parity the sender
discloses, the receiver reciprocates, and every odd-mismatch block is
resolved by a halving search that locates exactly one flipped bit.  each
correction re-checks all previously registered blocks containing the
corrected position, smallest block first, until no known block has an odd
parity mismatch.

every disclosed parity counts as one leaked bit in its direction; a located
correction is additionally announced by the receiver at ceil(log2 k) bits.
the transcript records every message so the leak counters can be audited by
replay.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .keyrate import binary_entropy

ALICE_TO_BOB = "alice_to_bob"
BOB_TO_ALICE = "bob_to_alice"

KIND_BLOCK_PARITY = "block-parity"
KIND_BINARY_PARITY = "binary-parity"
KIND_BINARY_REPLY = "binary-reply"
KIND_CORRECTION = "correction-announce"

K1_NUMERATOR = 0.73
DEFAULT_PASSES = 4
DEFAULT_GROWTH = 2


class Message(NamedTuple):
    direction: str
    kind: str
    pass_idx: int
    block_id: int
    payload_bits: int


@dataclass(frozen=True)
class CascadeConfig:
    n_passes: int = DEFAULT_PASSES
    growth: int = DEFAULT_GROWTH
    k1: int | None = None  # None: derive from the error estimate
    seed: int = 0

    def __post_init__(self):
        if self.n_passes < 1:
            raise ValueError("need at least one pass")
        if self.growth < 2:
            raise ValueError("block growth factor must be >= 2")
        if self.k1 is not None and self.k1 < 2:
            raise ValueError("k1 must be >= 2")


@dataclass
class CascadeTranscript:
    """ordered message log plus leak counters and correction events."""

    messages: list = field(default_factory=list)
    leak_ab_bits: int = 0
    leak_ba_bits: int = 0
    corrections: list = field(default_factory=list)  # (pass_idx, position)
    final_mismatch: int | None = None
    pass_sizes: list = field(default_factory=list)

    def record(self, direction: str, kind: str, pass_idx: int, block_id: int, bits: int) -> None:
        self.messages.append(Message(direction, kind, pass_idx, block_id, bits))
        if direction == ALICE_TO_BOB:
            self.leak_ab_bits += bits
        else:
            self.leak_ba_bits += bits

    def recount_leaks(self) -> tuple[int, int]:
        """recompute the directional totals from the raw message log."""
        ab = sum(m.payload_bits for m in self.messages if m.direction == ALICE_TO_BOB)
        ba = sum(m.payload_bits for m in self.messages if m.direction == BOB_TO_ALICE)
        return ab, ba


def default_k1(qber_est: float, n: int) -> int:
    """initial block size: ceil(0.73 / max(qber_est, 1/n)), clamped to [2, n/2]."""
    e = max(qber_est, 1.0 / n)
    k = math.ceil(K1_NUMERATOR / e)
    return max(2, min(k, max(2, n // 2)))


def _ceil_log2(k: int) -> int:
    return (k - 1).bit_length() if k >= 1 else 0


def _binary(alice, bob, positions, transcript, pass_idx, block_id) -> int:
    """halving search over `positions` (odd parity difference assumed).

    per round the sender discloses the parity of the first half and the
    receiver replies which half disagrees; the receiver finally announces
    the located position at ceil(log2 k) bits.
    """
    cur = positions
    while cur.size > 1:
        half = (cur.size + 1) // 2
        left = cur[:half]
        a_par = int(alice[left].sum()) & 1
        transcript.record(ALICE_TO_BOB, KIND_BINARY_PARITY, pass_idx, block_id, 1)
        b_par = int(bob[left].sum()) & 1
        transcript.record(BOB_TO_ALICE, KIND_BINARY_REPLY, pass_idx, block_id, 1)
        cur = left if a_par != b_par else cur[half:]
    transcript.record(
        BOB_TO_ALICE, KIND_CORRECTION, pass_idx, block_id, _ceil_log2(int(positions.size))
    )
    return int(cur[0])


def binary_locate(alice_block: np.ndarray, bob_block: np.ndarray, transcript: CascadeTranscript,
                  pass_idx: int = 0, block_id: int = 0) -> int:
    """locate the single mismatch in a block with odd parity difference.

    returns the index within the block.  raises ValueError when the block
    parities agree (an even number of mismatches cannot be located).
    """
    alice_block = np.asarray(alice_block, dtype=np.uint8)
    bob_block = np.asarray(bob_block, dtype=np.uint8)
    if alice_block.size != bob_block.size or alice_block.size == 0:
        raise ValueError("blocks must be nonempty and of equal length")
    if (int(alice_block.sum()) & 1) == (int(bob_block.sum()) & 1):
        raise ValueError("block parities agree; nothing to locate")
    return _binary(alice_block, bob_block, np.arange(alice_block.size), transcript,
                   pass_idx, block_id)


class _PassState:
    """partition bookkeeping for one pass: block views and mismatch flags."""

    __slots__ = ("perm", "offsets", "block_of", "mismatch", "n")

    def __init__(self, perm: np.ndarray, block_size: int, alice, bob):
        self.n = perm.size
        self.perm = perm
        self.offsets = np.arange(0, self.n, block_size)
        a_par = np.add.reduceat(alice[perm].astype(np.int64), self.offsets) & 1
        b_par = np.add.reduceat(bob[perm].astype(np.int64), self.offsets) & 1
        self.mismatch = (a_par ^ b_par).astype(np.uint8)
        lengths = np.diff(np.append(self.offsets, self.n))
        self.block_of = np.empty(self.n, dtype=np.int64)
        self.block_of[perm] = np.repeat(np.arange(self.offsets.size), lengths)

    @property
    def n_blocks(self) -> int:
        return int(self.offsets.size)

    def positions(self, j: int) -> np.ndarray:
        end = self.offsets[j + 1] if j + 1 < self.offsets.size else self.n
        return self.perm[self.offsets[j] : end]

    def block_len(self, j: int) -> int:
        end = self.offsets[j + 1] if j + 1 < self.offsets.size else self.n
        return int(end - self.offsets[j])


@dataclass
class ReconciliationResult:
    corrected_bob_key: np.ndarray
    transcript: CascadeTranscript
    measured_f: float | None


def run_cascade(
    alice_key: np.ndarray,
    bob_key: np.ndarray,
    qber_est: float,
    config: CascadeConfig | None = None,
) -> ReconciliationResult:
    """reconcile bob's key against alice's over an authenticated channel.

    returns the corrected key, the full transcript, and the measured
    reconciliation efficiency leak_ab / (n * h(e_true)) (None for
    error-free inputs).
    """
    if config is None:
        config = CascadeConfig()
    alice = np.asarray(alice_key, dtype=np.uint8)
    bob = np.asarray(bob_key, dtype=np.uint8).copy()
    n = alice.size
    if bob.size != n:
        raise ValueError("keys must have equal length")
    if n < 2:
        raise ValueError("need at least 2 bits to reconcile")
    if not 0.0 <= qber_est < 0.5:
        raise ValueError(f"qber_est must be in [0, 0.5), got {qber_est}")

    e_true = float(np.mean(alice != bob))
    transcript = CascadeTranscript()
    k1 = config.k1 if config.k1 is not None else default_k1(qber_est, n)
    children = np.random.SeedSequence(int(config.seed)).spawn(config.n_passes)

    passes: list[_PassState] = []
    heap: list[tuple[int, int, int]] = []

    for i in range(config.n_passes):
        k = min(n, k1 * config.growth**i)
        transcript.pass_sizes.append(int(k))
        if i == 0:
            perm = np.arange(n)
        else:
            perm = np.random.default_rng(children[i]).permutation(n)
        state = _PassState(perm, k, alice, bob)
        passes.append(state)

        # both parties disclose every block parity (reciprocal, 1 bit each)
        nb = state.n_blocks
        transcript.messages.extend(
            Message(d, KIND_BLOCK_PARITY, i, j, 1)
            for j in range(nb)
            for d in (ALICE_TO_BOB, BOB_TO_ALICE)
        )
        transcript.leak_ab_bits += nb
        transcript.leak_ba_bits += nb

        for j in np.nonzero(state.mismatch)[0]:
            heapq.heappush(heap, (state.block_len(int(j)), i, int(j)))

        # resolve every known odd block, smallest first; corrections ripple
        # back through all registered passes
        while heap:
            _, pi, bj = heapq.heappop(heap)
            st = passes[pi]
            if not st.mismatch[bj]:
                continue  # stale entry; parity already toggled even
            pos = _binary(alice, bob, st.positions(bj), transcript, pi, bj)
            bob[pos] ^= 1
            transcript.corrections.append((pi, pos))
            for pj, st2 in enumerate(passes):
                b2 = int(st2.block_of[pos])
                st2.mismatch[b2] ^= 1
                if st2.mismatch[b2]:
                    heapq.heappush(heap, (st2.block_len(b2), pj, b2))

    transcript.final_mismatch = int(np.sum(alice != bob))
    measured = None
    if e_true > 0.0:
        measured = measured_efficiency(transcript, e_true, n)
    return ReconciliationResult(corrected_bob_key=bob, transcript=transcript, measured_f=measured)


def measured_efficiency(transcript: CascadeTranscript, e_true: float, n: int) -> float:
    """sender-to-receiver leak relative to the Shannon limit n * h(e_true)."""
    if e_true <= 0.0:
        raise ValueError("efficiency is undefined for error-free keys")
    return transcript.leak_ab_bits / (n * binary_entropy(e_true))


def transcript_to_ndjson(transcript: CascadeTranscript) -> str:
    """one JSON object per message, in disclosure order."""
    lines = []
    for m in transcript.messages:
        lines.append(
            json.dumps(
                {
                    "direction": m.direction,
                    "kind": m.kind,
                    "pass": m.pass_idx,
                    "block": m.block_id,
                    "bits": m.payload_bits,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def transcript_from_ndjson(text: str) -> CascadeTranscript:
    """replay an exported message log; leak counters are recomputed."""
    t = CascadeTranscript()
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            t.record(obj["direction"], obj["kind"], int(obj["pass"]), int(obj["block"]),
                     int(obj["bits"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"bad transcript line {ln}: {exc}") from exc
    return t
