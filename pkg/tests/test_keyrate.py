"""entropy helpers, Kraus construction, objectives, rate report."""

import numpy as np
import pytest

from qkdlab.channel import ChannelParams, channel_state
from qkdlab.keyrate import (
    VARIANT_F,
    VARIANT_F_PRIME,
    binary_entropy,
    build_kraus,
    delta_leak,
    g_map,
    key_rate,
    objective,
    relative_entropy,
    z_map,
)


def _random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_binary_entropy_frozen_values():
    # oracle: mpmath 50-digit -e log2 e - (1-e) log2(1-e)
    cases = {
        0.02: 0.14144054254182065,
        0.05: 0.28639695711595613,
        0.08: 0.40217919020227285,
        0.10: 0.46899559358928122,
        0.11: 0.499915958164528,
        0.25: 0.81127812445913286,
        0.5: 1.0,
    }
    for e, expected in cases.items():
        assert binary_entropy(e) == pytest.approx(expected, abs=1e-15)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0


def test_binary_entropy_symmetry_and_domain():
    rng = np.random.default_rng(7)
    for e in rng.uniform(0.0, 1.0, size=1000):
        assert abs(binary_entropy(e) - binary_entropy(1.0 - e)) < 1e-12
    # concave: midpoint value above chord, spot checked
    assert binary_entropy(0.3) > 0.5 * (binary_entropy(0.1) + binary_entropy(0.5))
    with pytest.raises(ValueError):
        binary_entropy(-0.1)
    with pytest.raises(ValueError):
        binary_entropy(1.1)


def test_delta_leak_frozen_values():
    # oracle: mpmath, f_eff * h(e)
    assert delta_leak(1.2, 0.05) == pytest.approx(0.34367634853914735, abs=1e-15)
    assert delta_leak(1.2, 0.10) == pytest.approx(0.56279471230713747, abs=1e-15)
    assert delta_leak(1.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        delta_leak(0.99, 0.05)


@pytest.mark.parametrize("variant,n_blocks", [(VARIANT_F, 2), (VARIANT_F_PRIME, 4)])
def test_kraus_completeness(variant, n_blocks):
    kraus = build_kraus(variant)
    ops = kraus.operators()
    assert len(ops) == n_blocks
    assert all(k.shape == (16, 4) for k in ops)
    total = sum(k.conj().T @ k for k in ops)
    # sums to p_pass * I, p_pass = p_z^2 + p_x^2 = 1/2
    assert kraus.p_pass == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(total, kraus.p_pass * np.eye(4), atol=1e-10)
    kraus.validate()


def test_g_map_trace_is_p_pass():
    kraus = build_kraus(VARIANT_F)
    for theta, q in [(0.0, 0.0), (0.2, 0.1), (0.5, 0.6)]:
        rho = channel_state(ChannelParams(theta=theta, q=q))
        state = g_map(rho, kraus)
        assert state.trace() == pytest.approx(kraus.p_pass, abs=1e-12)


def test_z_map_pinches_and_is_idempotent():
    kraus = build_kraus(VARIANT_F)
    state = g_map(channel_state(ChannelParams(theta=0.3, q=0.2)), kraus)
    pinched = z_map(state)
    assert pinched.trace() == pytest.approx(state.trace(), abs=1e-12)
    again = z_map(pinched)
    for b1, b2 in zip(pinched.blocks, again.blocks):
        assert np.allclose(b1, b2, atol=1e-15)
    # off-diagonal key-register quadrants are zeroed
    for block in pinched.blocks:
        half = block.shape[0] // 2
        assert np.all(block[:half, half:] == 0)
        assert np.all(block[half:, :half] == 0)


def test_relative_entropy_hand_case():
    # oracle: hand computation, D(I/2 || diag(3/4, 1/4))
    #       = 1/2 log2(1/2 / 3/4) + 1/2 log2(1/2 / 1/4) = 1 - 1/2 log2 3
    x = np.eye(2, dtype=complex) / 2
    y = np.diag([0.75, 0.25]).astype(complex)
    assert relative_entropy(x, y) == pytest.approx(0.20751874963942191, abs=1e-12)


def test_relative_entropy_properties():
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = _random_density(rng, 4)
        y = _random_density(rng, 4)
        assert relative_entropy(x, x) == pytest.approx(0.0, abs=1e-10)
        assert relative_entropy(x, y) >= -1e-10  # Klein inequality


def test_relative_entropy_support_violation_raises():
    x = np.diag([1.0, 0.0]).astype(complex)
    y = np.diag([0.0, 1.0]).astype(complex)
    with pytest.raises(ValueError):
        relative_entropy(x, y)


def test_objective_perfect_channel():
    rho = channel_state(ChannelParams(theta=0.0, q=0.0))
    # derived: each matched-basis block contributes 1/4 bit, total 1/2
    assert objective(rho, VARIANT_F) == pytest.approx(0.5, abs=1e-9)
    assert objective(rho, VARIANT_F_PRIME) == pytest.approx(0.5, abs=1e-9)


def test_objective_maximally_mixed_is_zero():
    rho = np.eye(4, dtype=complex) / 4
    assert objective(rho, VARIANT_F) == pytest.approx(0.0, abs=1e-9)
    assert objective(rho, VARIANT_F_PRIME) == pytest.approx(0.0, abs=1e-9)


def test_objective_monotone_in_q_and_refinement():
    prev_f = None
    for q in np.linspace(0.0, 1.0, 11):
        rho = channel_state(ChannelParams(theta=0.0, q=q))
        f = objective(rho, VARIANT_F)
        fp = objective(rho, VARIANT_F_PRIME)
        assert fp <= f + 1e-9  # announcing the error bit cannot raise it
        if prev_f is not None:
            assert f <= prev_f + 1e-9
        prev_f = f


def test_objective_additive_over_blocks():
    # blockwise sum equals relative entropy of the assembled direct sums
    kraus = build_kraus(VARIANT_F_PRIME)
    rho = channel_state(ChannelParams(theta=0.25, q=0.15))
    state = g_map(rho, kraus)
    pinched = z_map(state)
    whole = relative_entropy(state.assemble(), pinched.assemble())
    assert objective(rho, VARIANT_F_PRIME) == pytest.approx(whole, abs=1e-9)


def test_key_rate_report_wiring():
    report = key_rate(
        entropy_per_signal=0.5, p_pass=0.5, delta_leak_bits=0.0,
        repetition_rate=2.0, qber=0.0, objective_f=0.5, objective_f_prime=0.5,
    )
    assert report.rate == pytest.approx(0.5)
    assert report.entropy_per_sifted == pytest.approx(1.0)
    assert report.rate_bps == pytest.approx(1.0)
    assert report.objective_gap == pytest.approx(0.0, abs=1e-15)
    d = report.as_dict()
    assert d["rate"] == report.rate and "objective_gap" in d
    with pytest.raises(ValueError):
        key_rate(entropy_per_signal=0.5, p_pass=0.0, delta_leak_bits=0.0)
