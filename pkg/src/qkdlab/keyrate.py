"""asymptotic key-rate objectives built from announcement-block Kraus maps.

the post-measurement structure is captured by an isometry-like map G that
writes the sender bit into a key register Z, the receiver bit into a record
register Y, and tags each kept announcement with its own block.  the
objective is

    f(rho) = D( G(rho) || Z(G(rho)) )

with D the quantum relative entropy in bits and Z the pinching that removes
coherence in the key register.  two announcement conventions are supported:

* "F"       -- one block per matched basis (Z or X)
* "F_prime" -- one block per (basis, parity of x xor y), i.e. the receiver
               additionally announces whether the round looks error-free

subtracting an error-correction allowance p_pass * delta_leak from the
objective gives the rate per transmitted pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BASES, PovmSet, default_povm
from .linalg import dagger

EIG_CUTOFF = 1e-12

VARIANT_F = "F"
VARIANT_F_PRIME = "F_prime"

_E2 = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))


def binary_entropy(e: float) -> float:
    """h(e) = -e log2 e - (1-e) log2 (1-e), with h(0) = h(1) = 0."""
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"binary entropy argument must be in [0, 1], got {e}")
    if e == 0.0 or e == 1.0:
        return 0.0
    return float(-e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e))


def delta_leak(f_eff: float, e: float) -> float:
    """error-correction allowance per sifted bit: f_eff * h(e).

    f_eff is the reconciliation inefficiency and must be >= 1.
    """
    if f_eff < 1.0:
        raise ValueError(f"reconciliation inefficiency must be >= 1, got {f_eff}")
    return f_eff * binary_entropy(e)


@dataclass(frozen=True)
class KrausSet:
    """kept-announcement Kraus operators, one 16x4 block per announcement.

    blocks map the 4-dim pair space into Z (x) Y (x) AB (2*2*4 = 16 dims);
    the key register Z is the most significant tensor factor.
    """

    variant: str
    blocks: tuple  # of (label tuple, ndarray (16, 4))
    p_pass: float

    def operators(self):
        return [k for _, k in self.blocks]

    def validate(self, tol: float = 1e-10) -> None:
        """raise unless sum_i K_i^dagger K_i == p_pass * I on the input space."""
        total = np.zeros((4, 4), dtype=complex)
        for _, k in self.blocks:
            total = total + dagger(k) @ k
        if np.max(np.abs(total - self.p_pass * np.eye(4))) > tol:
            raise ValueError("Kraus blocks do not resolve p_pass * identity")


def build_kraus(variant: str = VARIANT_F, povm: PovmSet | None = None) -> KrausSet:
    """assemble the announcement-block Kraus operators from the POVM.

    each operator is sum_{x,y} |x>_Z (x) |y>_Y (x) (sqrt(P_x^alpha) (x) sqrt(P_y^alpha));
    the F_prime variant splits every basis block by w = x xor y.
    """
    if povm is None:
        povm = default_povm()
    sqrt_elem = {}
    for basis in BASES:
        p = povm.basis_probability(basis)
        for bit in (0, 1):
            # elements are weighted rank-1 projectors, so the square root
            # is sqrt(weight) times the bare projector
            sqrt_elem[(basis, bit)] = math.sqrt(p) * povm.projector(basis, bit)

    def term(basis, x, y):
        reg = np.kron(_E2[x], _E2[y]).reshape(4, 1)
        return np.kron(reg, np.kron(sqrt_elem[(basis, x)], sqrt_elem[(basis, y)]))

    blocks = []
    if variant == VARIANT_F:
        for basis in BASES:
            op = sum(term(basis, x, y) for x in (0, 1) for y in (0, 1))
            blocks.append(((basis,), op))
    elif variant == VARIANT_F_PRIME:
        for basis in BASES:
            for w in (0, 1):
                op = sum(term(basis, x, x ^ w) for x in (0, 1))
                blocks.append(((basis, w), op))
    else:
        raise ValueError(f"unknown Kraus variant {variant!r}")

    p_pass = povm.p_z**2 + povm.p_x**2
    ks = KrausSet(variant=variant, blocks=tuple(blocks), p_pass=p_pass)
    ks.validate()
    return ks


@dataclass
class BlockDiagonalState:
    """direct sum of per-announcement 16x16 blocks (subnormalized in general)."""

    labels: tuple
    blocks: tuple

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks))

    def assemble(self) -> np.ndarray:
        """materialize the full block-diagonal matrix (tests only; small)."""
        dim = sum(b.shape[0] for b in self.blocks)
        out = np.zeros((dim, dim), dtype=complex)
        at = 0
        for b in self.blocks:
            d = b.shape[0]
            out[at : at + d, at : at + d] = b
            at += d
        return out


def g_map(rho: np.ndarray, kraus: KrausSet) -> BlockDiagonalState:
    """apply the announcement map: one K rho K^dagger block per announcement."""
    rho = np.asarray(rho, dtype=complex)
    blocks = tuple(k @ rho @ dagger(k) for _, k in kraus.blocks)
    return BlockDiagonalState(labels=tuple(l for l, _ in kraus.blocks), blocks=blocks)


def z_map(state: BlockDiagonalState) -> BlockDiagonalState:
    """pinch the key register: zero all coherences between Z = 0 and Z = 1.

    the key register is the leading tensor factor, so pinching zeroes the
    off-diagonal half-blocks of each announcement block.
    """
    out = []
    for b in state.blocks:
        half = b.shape[0] // 2
        p = b.copy()
        p[:half, half:] = 0.0
        p[half:, :half] = 0.0
        out.append(p)
    return BlockDiagonalState(labels=state.labels, blocks=tuple(out))


def relative_entropy(x: np.ndarray, y: np.ndarray, cutoff: float = EIG_CUTOFF) -> float:
    """quantum relative entropy D(x || y) in bits via eigendecomposition.

    eigenvalues below cutoff are treated as zero.  raises ValueError when x
    has weight outside the support of y (the divergence would be infinite).
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    wx, vx = np.linalg.eigh(x)
    wy, vy = np.linalg.eigh(y)

    tr_x_log_x = 0.0
    for w in wx:
        if w > cutoff:
            tr_x_log_x += w * math.log2(w)

    keep = wy > cutoff
    if not np.all(keep):
        # weight of x on the orthogonal complement of supp(y)
        v_perp = vy[:, ~keep]
        leak = float(np.einsum("ij,ik,kj->", v_perp.conj(), x, v_perp).real)
        if leak > 100.0 * cutoff * max(1.0, float(np.trace(x).real)):
            raise ValueError("support of first argument exceeds support of second")
    v_keep = vy[:, keep]
    # <v_j | x | v_j> for each kept eigenvector of y
    overlaps = np.einsum("ij,ik,kj->j", v_keep.conj(), x, v_keep).real
    tr_x_log_y = float(np.sum(np.log2(wy[keep]) * overlaps))
    return tr_x_log_x - tr_x_log_y


def objective(
    rho: np.ndarray,
    variant: str = VARIANT_F,
    povm: PovmSet | None = None,
    kraus: KrausSet | None = None,
) -> float:
    """f(rho) = D(G(rho) || Z(G(rho))) in bits per transmitted pair.

    additive over announcement blocks, so the divergence is evaluated block
    by block.
    """
    if kraus is None:
        kraus = build_kraus(variant, povm)
    g = g_map(rho, kraus)
    z = z_map(g)
    return sum(relative_entropy(gb, zb) for gb, zb in zip(g.blocks, z.blocks))


@dataclass(frozen=True)
class KeyRateReport:
    """rate decomposition for one channel configuration."""

    qber: float
    entropy_per_signal: float
    entropy_per_sifted: float
    p_pass: float
    delta_leak: float
    rate: float
    rate_bps: float
    objective_gap: float | None = None

    def as_dict(self) -> dict:
        d = {
            "qber": self.qber,
            "entropy_per_signal": self.entropy_per_signal,
            "entropy_per_sifted": self.entropy_per_sifted,
            "p_pass": self.p_pass,
            "delta_leak": self.delta_leak,
            "rate": self.rate,
            "rate_bps": self.rate_bps,
        }
        if self.objective_gap is not None:
            d["objective_gap"] = self.objective_gap
        return d


def key_rate(
    entropy_per_signal: float,
    p_pass: float,
    delta_leak_bits: float,
    repetition_rate: float = 1.0,
    qber: float = 0.0,
    objective_f: float | None = None,
    objective_f_prime: float | None = None,
) -> KeyRateReport:
    """combine the entropy term with the error-correction allowance.

    rate = entropy_per_signal - p_pass * delta_leak_bits (bits per pair);
    rate_bps scales by the source repetition rate.  when both objective
    values are supplied the report carries their measured gap.
    """
    if p_pass <= 0.0:
        raise ValueError("p_pass must be positive")
    if repetition_rate < 0.0:
        raise ValueError("repetition rate must be nonnegative")
    rate = entropy_per_signal - p_pass * delta_leak_bits
    gap = None
    if objective_f is not None and objective_f_prime is not None:
        gap = objective_f - objective_f_prime
    return KeyRateReport(
        qber=qber,
        entropy_per_signal=entropy_per_signal,
        entropy_per_sifted=entropy_per_signal / p_pass,
        p_pass=p_pass,
        delta_leak=delta_leak_bits,
        rate=rate,
        rate_bps=repetition_rate * rate,
        objective_gap=gap,
    )
