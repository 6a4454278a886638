import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecsepp.channels import (
    LossParams,
    apply_channel_dense,
    damping_kraus,
    damping_kraus_matrices,
    dual_rail_to_polarization,
    ecs_abcd,
    ecs_abcd_direct,
    ecs_decohered,
    ecs_matrix4_closed,
    ecs_norm2,
    epp_decohered,
    epp_dual_rail_decohered,
    epp_pure,
    epp_sector_weights,
)
from ecsepp.fock import ModeSpec, coherent_amplitudes, cutoff_for_amplitude, partial_trace
from ecsepp.validate import DENSE_TAIL_TOL, dense_ecs_kraus


def test_loss_params():
    loss = LossParams(0.6)
    assert loss.t2 + loss.r ** 2 == pytest.approx(1, abs=1e-16)
    assert LossParams.from_transmission(0.8).r == pytest.approx(0.6)
    with pytest.raises(ValueError):
        LossParams(1.2)


@pytest.mark.parametrize("r", np.linspace(0, 1, 11))
def test_kraus_completeness(r):
    ks = damping_kraus_matrices(1 - r * r, 12)
    total = sum(K.conj().T @ K for K in ks)
    assert np.abs(total - np.eye(13)).max() <= 1e-12


def test_kraus_limits():
    assert len(damping_kraus(LossParams(0.0), 6)) == 1
    np.testing.assert_array_equal(damping_kraus(LossParams(0.0), 6)[0].entries, np.eye(7))
    three = np.zeros(7)
    three[3] = 1
    rho = sum(K @ np.outer(three, three) @ K.T for K in damping_kraus_matrices(0.0, 6))
    assert rho[0, 0] == pytest.approx(1.0) and np.trace(rho) == pytest.approx(1.0)


def test_kraus_on_coherent_dyad():
    n, t2 = 20, 1 - 0.36
    a, b = coherent_amplitudes(1.0, n), coherent_amplitudes(-1.0, n)
    out = sum(K @ np.outer(a, b) @ K.T for K in damping_kraus_matrices(t2, n))
    t = math.sqrt(t2)
    overlap = math.exp(-2.0)  # <b|a> for a = 1, b = -1
    want = overlap ** (1 - t2) * np.outer(coherent_amplitudes(t, n), coherent_amplitudes(-t, n))
    np.testing.assert_allclose(out, want, atol=1e-10)


def test_kraus_semigroup():
    n = 10
    rng = np.random.default_rng(0)
    psi = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    rho = np.outer(psi, psi.conj()) / np.vdot(psi, psi).real
    spec = ModeSpec(1, n)
    two = apply_channel_dense(apply_channel_dense(rho, damping_kraus_matrices(0.7, n), 0, spec),
                              damping_kraus_matrices(0.5, n), 0, spec)
    one = apply_channel_dense(rho, damping_kraus_matrices(0.35, n), 0, spec)
    np.testing.assert_allclose(two, one, atol=1e-10)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("r", [0.0, 0.3, 0.5, 0.9, 1.0])
def test_matrix4_three_ways(alpha, r):
    m = ecs_decohered(alpha, -1, r).matrix4
    np.testing.assert_allclose(m, ecs_matrix4_closed(alpha, r), atol=1e-14)
    A, B, C, D, pref = ecs_abcd_direct(alpha, r)
    np.testing.assert_allclose(np.array([A, B, C, D]) * pref, ecs_abcd(alpha, r), rtol=1e-9, atol=1e-14)
    assert np.trace(m).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(m).min() >= -1e-9


def test_pure_odd_ecs_at_r0():
    m = ecs_decohered(1.3, -1, 0.0).matrix4
    psi = np.array([0, 1, -1, 0]) / math.sqrt(2)  # |+->-|-+>
    assert np.vdot(psi, m @ psi).real == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.matrix_rank(m, tol=1e-10) == 1


def test_fully_decohered_b_vanishes():
    A, B, C, D = ecs_abcd(1.0, 1.0)
    assert B == 0 and C == 0 and D == 0 and A == pytest.approx(1.0)


def test_even_small_alpha_warns():
    with pytest.warns(RuntimeWarning):
        ecs_decohered(1e-4, 1, 0.2)


def test_ecs_kraus_oracle_cutoff20():
    cutoff = 20
    closed = ecs_decohered(1.0, -1, 0.5).fock_density(cutoff)
    assert np.abs(closed - dense_ecs_kraus(1.0, 0.5, cutoff)).max() <= 1e-8


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("r", [0.0, 0.25, 0.5, 0.75])
def test_ecs_matches_kraus_grid(alpha, r):
    cutoff = cutoff_for_amplitude(alpha, DENSE_TAIL_TOL)
    closed = ecs_decohered(alpha, -1, r).fock_density(cutoff)
    assert np.abs(closed - dense_ecs_kraus(alpha, r, cutoff)).max() <= 1e-8


def test_cross_factor_exponent_in_r():
    # the 2x2 coherent coefficient of |ta,-ta><-ta,ta| after Kraus equals -N^2 e^{-4a^2r^2}
    alpha, r = 1.1, 0.55
    w = [d[0] for d in ecs_decohered(alpha, -1, r).dyads()]
    assert w[2] == pytest.approx(-ecs_norm2(alpha, -1) * math.exp(-4 * alpha ** 2 * r ** 2))


def test_reduced_state_matches_coherent_algebra():
    alpha, r = 1.0, 0.4
    ch = ecs_decohered(alpha, -1, r)
    n = 20
    red = partial_trace(ch.fock_density(n), [0], ModeSpec(2, n)).entries
    ta = ch.t_alpha
    p, m = coherent_amplitudes(ta, n), coherent_amplitudes(-ta, n)
    x = math.exp(-4 * alpha ** 2 * r ** 2) * math.exp(-2 * ta ** 2)
    want = ecs_norm2(alpha, -1) * (np.outer(p, p) + np.outer(m, m) - x * (np.outer(p, m) + np.outer(m, p)))
    np.testing.assert_allclose(red, want, atol=1e-12)


@given(st.floats(0.05, 3.0), st.floats(0.0, 1.0), st.sampled_from([1, -1]))
def test_ecs_channel_is_a_state(alpha, r, sign):
    m = ecs_decohered(alpha, sign, r).matrix4
    assert np.abs(m - m.conj().T).max() <= 1e-12
    assert np.trace(m).real == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.eigvalsh(m).min() >= -1e-9


def test_epp_examples():
    np.testing.assert_allclose(epp_decohered(0.0).matrix9, np.outer(epp_pure(), epp_pure()), atol=1e-16)
    assert epp_sector_weights(math.sqrt(0.5)) == pytest.approx((0.25, 0.5, 0.25), abs=1e-15)
    vac = epp_decohered(1.0).matrix9
    assert vac[8, 8] == 1 and np.count_nonzero(vac) == 1


@given(st.floats(0.0, 1.0))
def test_epp_weights_sum_to_one(r):
    assert sum(epp_sector_weights(r)) == pytest.approx(1.0, abs=1e-15)
    m = epp_decohered(r).matrix9
    assert np.trace(m).real == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.eigvalsh(m).min() >= -1e-14


@pytest.mark.parametrize("r", [0.0, 0.2, 0.5, 0.8, 1.0])
def test_dual_rail_conversion(r):
    folded, outside = dual_rail_to_polarization(epp_dual_rail_decohered(r))
    assert abs(outside) < 1e-15
    np.testing.assert_allclose(folded, epp_decohered(r).matrix9, atol=1e-14)
