"""channel model: state construction, noise maps, outcome statistics."""

import numpy as np
import pytest

from qkdlab.channel import (
    BASES,
    ChannelParams,
    PovmSet,
    analytic_qber,
    bell_state,
    channel_state,
    default_povm,
    depolarize,
    misalign,
    outcome_distribution,
)
from qkdlab.linalg import is_density_matrix, partial_trace_second

GRID_THETA = np.linspace(0.0, np.pi / 4, 20)
GRID_Q = np.linspace(0.0, 1.0, 20)


def test_bell_state_is_pure_density_matrix():
    rho = bell_state()
    assert rho.shape == (4, 4)
    assert is_density_matrix(rho, tol=1e-12)
    # pure: rho^2 = rho
    assert np.allclose(rho @ rho, rho, atol=1e-12)
    # corners of (|00> + |11>)/sqrt(2)
    for i, j in [(0, 0), (0, 3), (3, 0), (3, 3)]:
        assert rho[i, j] == pytest.approx(0.5, abs=1e-15)
    assert abs(rho[1, 1]) < 1e-15 and abs(rho[2, 2]) < 1e-15


def test_misalign_zero_angle_is_identity():
    rho = bell_state()
    assert np.allclose(misalign(rho, 0.0), rho, atol=1e-15)


def test_misalign_quarter_turn_hand_case():
    # R(pi/2)|0> = |1>, R(pi/2)|1> = -|0>, so the Bell state maps to
    # (|01> - |10>)/sqrt(2); checked against the outer product by hand.
    psi = np.zeros(4, dtype=complex)
    psi[1] = 1.0 / np.sqrt(2.0)
    psi[2] = -1.0 / np.sqrt(2.0)
    expected = np.outer(psi, psi.conj())
    assert np.allclose(misalign(bell_state(), np.pi / 2), expected, atol=1e-12)


def test_misalign_requires_two_qubit_state():
    with pytest.raises(ValueError):
        misalign(np.eye(2, dtype=complex) / 2, 0.1)


def test_depolarize_endpoints():
    rho = bell_state()
    assert np.allclose(depolarize(rho, 0.0), rho, atol=1e-15)
    # q = 1 replaces the transmitted qubit: Tr_2(bell) = I/2, so I/2 (x) I/2
    assert np.allclose(depolarize(rho, 1.0), np.eye(4) / 4, atol=1e-12)


def test_depolarize_keeps_sender_marginal():
    rho = channel_state(ChannelParams(theta=0.3, q=0.0))
    for q in (0.2, 0.7):
        out = depolarize(rho, q)
        assert np.allclose(partial_trace_second(out), partial_trace_second(rho), atol=1e-12)


def test_channel_map_trace_preserving_and_psd_on_grid():
    # map invariants on a 20x20 grid: trace 1 and PSD within 1e-12
    for theta in GRID_THETA:
        for q in GRID_Q:
            rho = channel_state(ChannelParams(theta=theta, q=q))
            assert abs(np.trace(rho).real - 1.0) < 1e-12
            assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(theta=0.0, q=-0.01)
    with pytest.raises(ValueError):
        ChannelParams(theta=0.0, q=1.01)
    with pytest.raises(ValueError):
        ChannelParams(theta=float("nan"), q=0.0)


def test_povm_completeness_and_validation():
    povm = default_povm()
    povm.validate(tol=1e-12)
    total = sum(povm.element(b, o) for b in BASES for o in (0, 1))
    assert np.allclose(total, np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        PovmSet(p_z=0.7, p_x=0.5).validate()


def test_outcome_distribution_normalization():
    dist = outcome_distribution(channel_state(ChannelParams(theta=0.2, q=0.1)))
    assert dist.total() == pytest.approx(1.0, abs=1e-12)
    assert all(p >= -1e-15 for p in dist.entries.values())
    # each (alpha, beta) pair carries p_alpha * p_beta = 1/4
    for alpha in BASES:
        for beta in BASES:
            s = sum(dist.probability(alpha, beta, x, y) for x in (0, 1) for y in (0, 1))
            assert s == pytest.approx(0.25, abs=1e-12)


def test_qber_basis_symmetry_on_grid():
    # Z and X conditional error rates agree within 1e-12 for this family
    for theta in GRID_THETA[::4]:
        for q in GRID_Q[::4]:
            dist = outcome_distribution(channel_state(ChannelParams(theta=theta, q=q)))
            ez = dist.matched_error_rate("Z")
            ex = dist.matched_error_rate("X")
            assert abs(ez - ex) < 1e-12


def test_analytic_qber_matches_enumeration_on_grid():
    for theta in GRID_THETA:
        for q in GRID_Q:
            params = ChannelParams(theta=theta, q=q)
            dist = outcome_distribution(channel_state(params))
            assert abs(dist.qber() - analytic_qber(params)) < 1e-12


def test_analytic_qber_frozen_values():
    # oracle: mpmath 50-digit evaluation of (1-q) sin^2(theta) + q/2
    assert analytic_qber(ChannelParams(0.1, 0.05)) == pytest.approx(
        0.034468375525410225, abs=1e-16)
    assert analytic_qber(ChannelParams(0.3, 0.0)) == pytest.approx(
        0.087332192545160851, abs=1e-16)
    assert analytic_qber(ChannelParams(0.0, 0.16)) == pytest.approx(0.08, abs=1e-16)
    assert analytic_qber(ChannelParams(0.25, 0.1)) == pytest.approx(
        0.10508784714933228, abs=1e-16)
