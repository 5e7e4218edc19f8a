"""entangled-pair channel model for a BB84 source.

the source emits the two-qubit state (|00> + |11>)/sqrt(2); the qubit kept by
the sender is ideal and the transmitted qubit suffers a basis misalignment
(rotation by theta in the Z-X plane) followed by depolarizing noise of
strength q.  both parties measure with basis-choice-weighted POVMs, Z with
probability p_z and X with probability p_x.

basis ordering everywhere: |00>, |01>, |10>, |11> with the sender's qubit
first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import dagger, is_psd, partial_trace_second

# computational and Hadamard bases of one qubit
KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
KETP = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
KETM = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)

PROJ0 = np.outer(KET0, KET0.conj())
PROJ1 = np.outer(KET1, KET1.conj())
PROJP = np.outer(KETP, KETP.conj())
PROJM = np.outer(KETM, KETM.conj())

ID2 = np.eye(2, dtype=complex)

BASIS_Z = "Z"
BASIS_X = "X"
BASES = (BASIS_Z, BASIS_X)


@dataclass(frozen=True)
class ChannelParams:
    """misalignment angle theta (radians) and depolarizing weight q in [0, 1]."""

    theta: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"depolarizing weight q must be in [0, 1], got {self.q}")
        if not np.isfinite(self.theta):
            raise ValueError("theta must be finite")


def bell_state() -> np.ndarray:
    """density matrix of (|00> + |11>)/sqrt(2)."""
    psi = (np.kron(KET0, KET0) + np.kron(KET1, KET1)) / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


def misalign(rho: np.ndarray, theta: float) -> np.ndarray:
    """rotate the transmitted (second) qubit by theta in the Z-X plane.

    applies (I (x) R(theta)) rho (I (x) R(theta))^dagger with
    R(theta) = [[cos, -sin], [sin, cos]].
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-qubit state, got shape {rho.shape}")
    c, s = np.cos(theta), np.sin(theta)
    r = np.array([[c, -s], [s, c]], dtype=complex)
    u = np.kron(ID2, r)
    return u @ rho @ dagger(u)


def depolarize(rho: np.ndarray, q: float) -> np.ndarray:
    """mix the transmitted qubit with the maximally mixed state.

    returns (1 - q) rho + q * (rho_kept (x) I/2) where rho_kept is the
    reduced state of the first qubit.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-qubit state, got shape {rho.shape}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"depolarizing weight q must be in [0, 1], got {q}")
    kept = partial_trace_second(rho)
    return (1.0 - q) * rho + q * np.kron(kept, ID2 / 2.0)


def channel_state(params: ChannelParams) -> np.ndarray:
    """joint state after misalignment then depolarization of the pair source."""
    return depolarize(misalign(bell_state(), params.theta), params.q)


@dataclass(frozen=True)
class PovmSet:
    """basis-choice-weighted measurement on one qubit.

    elements are (basis, outcome bit, 2x2 matrix) with the matrix equal to
    the basis probability times the outcome projector.
    """

    p_z: float = 0.5
    p_x: float = 0.5
    elements: tuple = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.p_z < 0 or self.p_x < 0 or abs(self.p_z + self.p_x - 1.0) > 1e-12:
            raise ValueError("basis probabilities must be nonnegative and sum to 1")
        if self.elements is None:
            elems = (
                (BASIS_Z, 0, self.p_z * PROJ0),
                (BASIS_Z, 1, self.p_z * PROJ1),
                (BASIS_X, 0, self.p_x * PROJP),
                (BASIS_X, 1, self.p_x * PROJM),
            )
            object.__setattr__(self, "elements", elems)

    def basis_probability(self, basis: str) -> float:
        return self.p_z if basis == BASIS_Z else self.p_x

    def projector(self, basis: str, outcome: int) -> np.ndarray:
        """bare rank-1 projector of one element (basis weight divided out)."""
        for b, x, m in self.elements:
            if b == basis and x == outcome:
                return m / self.basis_probability(basis)
        raise KeyError((basis, outcome))

    def element(self, basis: str, outcome: int) -> np.ndarray:
        for b, x, m in self.elements:
            if b == basis and x == outcome:
                return m
        raise KeyError((basis, outcome))

    def validate(self, tol: float = 1e-10) -> None:
        """raise unless all elements are PSD and they sum to the identity."""
        total = np.zeros((2, 2), dtype=complex)
        for _, _, m in self.elements:
            if not is_psd(m, tol):
                raise ValueError("POVM element is not positive semidefinite")
            total = total + m
        if np.max(np.abs(total - ID2)) > tol:
            raise ValueError("POVM elements do not sum to the identity")


def default_povm() -> PovmSet:
    """the symmetric p_z = p_x = 1/2 projective BB84 measurement."""
    return PovmSet()


@dataclass
class JointOutcomeDistribution:
    """joint law of (sender basis, receiver basis, sender bit, receiver bit).

    entries[(alpha, beta, x, y)] = p_alpha * p_beta * Tr[(P_x^alpha (x) P_y^beta) rho].
    """

    entries: dict

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def probability(self, alpha: str, beta: str, x: int, y: int) -> float:
        return self.entries[(alpha, beta, x, y)]

    def matched_error_rate(self, basis: str) -> float:
        """Pr[x != y | both chose `basis`]."""
        same = sum(self.entries[(basis, basis, x, y)] for x in (0, 1) for y in (0, 1))
        bad = self.entries[(basis, basis, 0, 1)] + self.entries[(basis, basis, 1, 0)]
        return bad / same

    def qber(self) -> float:
        """Pr[x != y | bases matched], both bases pooled."""
        same = 0.0
        bad = 0.0
        for b in BASES:
            for x in (0, 1):
                for y in (0, 1):
                    p = self.entries[(b, b, x, y)]
                    same += p
                    if x != y:
                        bad += p
        return bad / same


def outcome_distribution(rho: np.ndarray, povm: PovmSet | None = None) -> JointOutcomeDistribution:
    """measure both halves of rho with independent copies of the POVM."""
    if povm is None:
        povm = default_povm()
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-qubit state, got shape {rho.shape}")
    entries = {}
    for alpha in BASES:
        pa = povm.basis_probability(alpha)
        for beta in BASES:
            pb = povm.basis_probability(beta)
            for x in (0, 1):
                proj_a = povm.projector(alpha, x)
                for y in (0, 1):
                    proj_b = povm.projector(beta, y)
                    val = pa * pb * np.trace(np.kron(proj_a, proj_b) @ rho)
                    entries[(alpha, beta, x, y)] = float(val.real)
    return JointOutcomeDistribution(entries)


def analytic_qber(params: ChannelParams) -> float:
    """matched-basis error rate of the channel family.

    equals (1 - q) sin^2(theta) + q/2; kept as a closed form and checked
    against outcome_distribution in the tests.
    """
    s = np.sin(params.theta)
    return float((1.0 - params.q) * s * s + params.q / 2.0)
