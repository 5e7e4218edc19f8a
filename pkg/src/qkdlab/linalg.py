"""small complex-matrix helpers shared by the channel and key-rate code.

everything works on plain numpy arrays (complex128); no wrapper class.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10


def dagger(m: np.ndarray) -> np.ndarray:
    """conjugate transpose."""
    return m.conj().T


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """check m == m^dagger entrywise within tol."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


def is_psd(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """check m is positive semidefinite: hermitian with eigenvalues >= -tol."""
    if not is_hermitian(m, tol):
        return False
    evals = np.linalg.eigvalsh(m)
    return bool(evals.min() >= -tol)


def is_density_matrix(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """check m is a valid state: PSD with unit trace."""
    return is_psd(m, tol) and abs(np.trace(m) - 1.0) <= tol


def partial_trace_second(rho: np.ndarray) -> np.ndarray:
    """trace out the second qubit of a two-qubit state (4x4 -> 2x2).

    index convention: row/col index = 2*i1 + i2 with subsystem 1 first.
    """
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    return np.einsum("ikjk->ij", r)


def partial_trace_first(rho: np.ndarray) -> np.ndarray:
    """trace out the first qubit of a two-qubit state (4x4 -> 2x2)."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    return np.einsum("kikj->ij", r)
