"""key verification and privacy amplification over GF(2).

verification tags both keys with a seeded 64-bit polynomial hash: the key is
split into 64-bit chunks that form the coefficients of a polynomial over
GF(2^64), evaluated by Horner's rule at a nonzero point derived from the
seed.  keys that differ in a single bit always produce different tags; for
arbitrary differing keys the collision probability is at most
(chunks)/2^64 per comparison.

amplification compresses the verified key with a seeded Toeplitz matrix over
GF(2): an l x n matrix needs n + l - 1 seed bits and the product reduces to
a convolution, computed exactly via FFT on 0/1 integers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

DEFAULT_SECURITY_MARGIN = 64

_MASK64 = (1 << 64) - 1
# reduction polynomial x^64 + x^4 + x^3 + x + 1 (low part 0x1B)
_REDUCE = 0x1B


def _gf64_mul(a: int, b: int) -> int:
    """carryless product of two 64-bit values reduced mod the field polynomial."""
    r = 0
    while b:
        lsb = b & -b
        r ^= a << (lsb.bit_length() - 1)
        b ^= lsb
    while r >> 64:
        hi = r >> 64
        r = (r & _MASK64) ^ hi ^ (hi << 1) ^ (hi << 3) ^ (hi << 4)
    return r


def _chunks64(bits: np.ndarray) -> list[int]:
    """pack a 0/1 array MSB-first into 64-bit integer chunks (zero padded)."""
    bits = np.asarray(bits, dtype=np.uint8)
    packed = np.packbits(bits)
    pad = (-packed.size) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    words = packed.tobytes()
    return [int.from_bytes(words[i : i + 8], "big") for i in range(0, len(words), 8)]


def polynomial_hash(bits: np.ndarray, hash_seed: int) -> int:
    """64-bit universal hash of a bit string under the seeded evaluation point."""
    point = np.random.default_rng(int(hash_seed)).integers(0, 1 << 63, dtype=np.uint64)
    alpha = int(point) | 1  # force nonzero so single-bit flips never collide
    h = 0
    for c in _chunks64(bits):
        h = _gf64_mul(h, alpha) ^ c
    return h


def verify_keys(key_a: np.ndarray, key_b: np.ndarray, hash_seed: int) -> bool:
    """compare the seeded 64-bit tags of two equal-length keys."""
    key_a = np.asarray(key_a, dtype=np.uint8)
    key_b = np.asarray(key_b, dtype=np.uint8)
    if key_a.size != key_b.size:
        raise ValueError("keys must have equal length")
    return polynomial_hash(key_a, hash_seed) == polynomial_hash(key_b, hash_seed)


@dataclass(frozen=True)
class AmplificationPlan:
    """output-length budget for one amplification step.

    output_len = max(0, floor(input_len * entropy_rate - leak_total
                               - security_margin)).
    """

    input_len: int
    leak_total: int
    entropy_rate: float
    security_margin: int = DEFAULT_SECURITY_MARGIN
    output_len: int = -1  # derived; filled in by __post_init__ when negative

    def __post_init__(self):
        if self.input_len < 0 or self.leak_total < 0 or self.security_margin < 0:
            raise ValueError("lengths and margins must be nonnegative")
        if not 0.0 <= self.entropy_rate <= 1.0 + 1e-12:
            raise ValueError(f"entropy rate must be in [0, 1], got {self.entropy_rate}")
        if self.output_len < 0:
            derived = max(
                0,
                math.floor(self.input_len * self.entropy_rate - self.leak_total
                           - self.security_margin),
            )
            object.__setattr__(self, "output_len", derived)
        if self.output_len > self.input_len:
            raise ValueError("cannot output more bits than the input key holds")


def toeplitz_seed_bits(input_len: int, output_len: int, seed: int) -> np.ndarray:
    """the n + l - 1 seed bits defining the Toeplitz extractor."""
    count = max(0, input_len + output_len - 1)
    return np.random.default_rng(int(seed)).integers(0, 2, size=count, dtype=np.uint8)


def privacy_amplify(key: np.ndarray, plan: AmplificationPlan, seed: int) -> np.ndarray:
    """compress the key to plan.output_len bits with a seeded Toeplitz matrix.

    row i of the matrix is s[i - j + n - 1] for columns j, so the product
    over GF(2) is one slice of the full convolution of the key with the
    seed bits.
    """
    key = np.asarray(key, dtype=np.uint8)
    if key.size != plan.input_len:
        raise ValueError(f"plan expects {plan.input_len} input bits, got {key.size}")
    ell = plan.output_len
    if ell == 0:
        return np.zeros(0, dtype=np.uint8)
    s = toeplitz_seed_bits(plan.input_len, ell, seed)
    # 0/1 convolution is exact in float64 up to ~1e12 overlaps; round then reduce
    conv = fftconvolve(key.astype(np.float64), s.astype(np.float64))
    counts = np.rint(conv[plan.input_len - 1 : plan.input_len - 1 + ell]).astype(np.int64)
    return (counts & 1).astype(np.uint8)


def toeplitz_matrix(input_len: int, output_len: int, seed: int) -> np.ndarray:
    """materialize the full matrix (tests and small cases only)."""
    s = toeplitz_seed_bits(input_len, output_len, seed)
    cols = np.arange(input_len)
    rows = np.arange(output_len).reshape(-1, 1)
    return s[rows - cols + input_len - 1]


def write_final_key(path_prefix: str, key_bits: np.ndarray, plan: AmplificationPlan,
                    toeplitz_seed: int, verify_seed: int) -> tuple[str, str]:
    """write the packed key plus a JSON sidecar; returns (bin_path, json_path)."""
    bin_path = f"{path_prefix}.key.bin"
    json_path = f"{path_prefix}.key.json"
    packed = np.packbits(np.asarray(key_bits, dtype=np.uint8)).tobytes()
    with open(bin_path, "wb") as fh:
        fh.write(packed)
    sidecar = {
        "schema": "final-key.v1",
        "input_len": plan.input_len,
        "leak_total": plan.leak_total,
        "entropy_rate": plan.entropy_rate,
        "security_margin": plan.security_margin,
        "output_len": plan.output_len,
        "toeplitz_seed": int(toeplitz_seed),
        "verify_seed": int(verify_seed),
    }
    with open(json_path, "w", encoding="ascii") as fh:
        fh.write(json.dumps(sidecar, sort_keys=True, separators=(",", ":")) + "\n")
    return bin_path, json_path
