import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecsepp import analytic
from ecsepp.analytic import (
    CLASSICAL_LIMIT,
    QuadratureError,
    QuadratureSpec,
    avg_fidelity_ecs,
    closed_form_F_ecs,
    closed_form_P_ecs,
    ecs_outcome,
    epp_metrics,
    success_per_outcome,
    fidelity_excess_ecs,
    fidelity_reference_form,
    input_qubit,
    success_prob_ecs,
    threshold_r,
)
from ecsepp.channels import dynamic_basis_norms, ecs_norm2

alphas = st.floats(0.1, 2.5)
rs = st.floats(0.0, 0.98)
etas = st.floats(0.05, 1.0)
angles = st.tuples(st.floats(0, math.pi), st.floats(0, 2 * math.pi))


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(4, 64)
    U, V, W = QuadratureSpec(8, 8).nodes()
    assert U.shape == V.shape == W.shape == (8, 8)
    assert W.sum() == pytest.approx(1.0, abs=1e-14)


def test_input_qubit_poles():
    n_plus, n_minus = dynamic_basis_norms(math.sqrt(1 - 0.09) * 1.2)
    q = input_qubit(0.0, 0.0, 1.2, 0.3)
    assert q.a == pytest.approx(n_plus) and q.b == pytest.approx(n_plus)
    q = input_qubit(math.pi, 0.0, 1.2, 0.3)
    assert q.a == pytest.approx(n_minus) and q.b == pytest.approx(-n_minus)


def test_input_qubit_large_amplitude_approaches_coherent():
    q = input_qubit(math.pi / 2, 0.0, 6.0, 0.0)
    assert abs(q.a - 1) < 1e-12 and abs(q.b) < 1e-12


@given(alphas, etas, angles)
def test_ideal_channel_retained_fidelity_one(alpha, eta, uv):
    recs = ecs_outcome(alpha, 0.0, 1.0, input_qubit(*uv, alpha, 0.0))
    for rec in recs:
        assert rec.f == pytest.approx(1.0, abs=1e-10)


def test_outcome_example_b_zero():
    # a = 1, b = 0 written directly through the qubit fields
    from ecsepp.analytic import InputQubit

    recs = ecs_outcome(1.0, 0.0, 1.0, InputQubit(0.0, 0.0, 1.0, 0.0, 1.0))
    want = ecs_norm2(1.0, -1) * math.exp(-2) * math.sinh(2)
    assert recs[0].p == pytest.approx(want, abs=1e-14)
    assert recs[0].f == pytest.approx(1.0, abs=1e-14)


@given(alphas, rs, etas, angles)
def test_retained_outcomes_symmetric(alpha, r, eta, uv):
    four, two = ecs_outcome(alpha, r, eta, input_qubit(*uv, alpha, r))
    assert (four.j, two.j) == ("4", "2")
    assert four.p == pytest.approx(two.p, abs=1e-12)
    assert four.f == pytest.approx(two.f, abs=1e-12)
    assert four.p >= 0 and 0 <= four.f <= 1 + 1e-12


def test_ideal_average_fidelity():
    for a in (0.3, 1.0, 2.0):
        assert avg_fidelity_ecs(a, 0.0, 1.0) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.3, 0.8, 1.5, 2.0])
@pytest.mark.parametrize("r", [0.0, 0.3, 0.6, 0.9])
def test_half_success_at_perfect_detection(alpha, r):
    assert success_prob_ecs(alpha, r, 1.0) == pytest.approx(0.5, abs=1e-9)
    assert closed_form_P_ecs(alpha, r, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_example_alpha1_r06():
    f = avg_fidelity_ecs(1.0, 0.6, 1.0)
    assert CLASSICAL_LIMIT < f < avg_fidelity_ecs(1.0, 0.0, 1.0)
    assert f > epp_metrics(0.6)[0] == pytest.approx(0.64)


def test_quadrature_doubling_check(monkeypatch):
    for a, r, e in ((0.5, 0.3, 0.6), (1.5, 0.6, 1.0), (2.0, 0.1, 0.8)):
        avg_fidelity_ecs(a, r, e, QuadratureSpec(8, 8), check=True)
        success_prob_ecs(a, r, e, check=True)
    real = analytic._bloch_average

    def skewed(alpha, r, eta, quad):
        f, p = real(alpha, r, eta, quad)
        return (f + 1e-6, p) if quad.n_polar > 32 else (f, p)

    monkeypatch.setattr(analytic, "_bloch_average", skewed)
    with pytest.raises(QuadratureError):
        avg_fidelity_ecs(1.0, 0.3, 0.7, check=True)
    success_prob_ecs(1.0, 0.3, 0.7, check=True)


def test_reference_fidelity_form_matches_quadrature():
    assert fidelity_reference_form(1.0, 0.5) == pytest.approx(avg_fidelity_ecs(1.0, 0.5, 1.0), abs=1e-8)
    for a in (0.5, 1.0, 1.5):
        for r in (0.0, 0.3, 0.6):
            for e in (0.6, 1.0):
                assert fidelity_reference_form(a, r, e) == pytest.approx(avg_fidelity_ecs(a, r, e), abs=1e-8)


@given(alphas, rs, etas)
def test_closed_forms_match_quadrature(alpha, r, eta):
    assert closed_form_F_ecs(alpha, r, eta) == pytest.approx(avg_fidelity_ecs(alpha, r, eta), abs=1e-8)
    assert closed_form_P_ecs(alpha, r, eta) == pytest.approx(success_prob_ecs(alpha, r, eta), abs=1e-8)
    assert 2 * success_per_outcome(alpha, r, eta) == pytest.approx(success_prob_ecs(alpha, r, eta), abs=1e-8)


@given(st.floats(0.1, 1.8), rs, etas)
def test_stable_excess_agrees_with_reference_form(alpha, r, eta):
    assert CLASSICAL_LIMIT + fidelity_excess_ecs(alpha, r, eta) == pytest.approx(
        fidelity_reference_form(alpha, r, eta), abs=1e-9)


def test_large_alpha_closed_form_is_finite():
    for a in (2.5, 4.0, 8.0):
        f = closed_form_F_ecs(a, 0.5, 0.9)
        assert math.isfinite(f) and 0.5 <= f <= 1
        assert f == pytest.approx(avg_fidelity_ecs(a, 0.5, 0.9), abs=1e-8)


def test_success_small_alpha_reduction():
    for r in (0.2, 0.5, 0.8):
        for eta in (0.3, 0.7, 1.0):
            want = (2 * eta + r * r * (-1 + eta) * eta - eta * eta) / 2
            assert closed_form_P_ecs(1e-3, r, eta) == pytest.approx(want, abs=1e-4)


def test_full_loss_limits():
    assert avg_fidelity_ecs(1.0, 1.0, 0.7) == 0.5
    assert success_prob_ecs(1.0, 1.0, 0.7) == pytest.approx(0.35)
    assert closed_form_P_ecs(1.0, 1.0, 0.7) == pytest.approx(0.35)
    assert avg_fidelity_ecs(1.0, 0.9999, 0.7) == pytest.approx(0.5, abs=1e-3)
    assert success_prob_ecs(1.0, 0.9999, 0.7) == pytest.approx(0.35, abs=1e-3)


def test_epp_metrics_examples():
    assert epp_metrics(1 / math.sqrt(3))[0] == pytest.approx(2 / 3, abs=1e-15)
    assert epp_metrics(0.0, 1.0) == (1.0, 0.5)
    assert epp_metrics(0.0, 0.5)[1] == 0.125
    assert epp_metrics(0.5, 0.8) == pytest.approx((0.75, 0.24))
    assert epp_metrics(0.4, 0.2)[0] == epp_metrics(0.4, 0.6)[0] == epp_metrics(0.4, 1.0)[0]


def test_thresholds():
    assert threshold_r("epp_classical") == pytest.approx(1 / math.sqrt(3), abs=1e-9)
    assert threshold_r("epp_classical", 0.3) == pytest.approx(1 / math.sqrt(3), abs=1e-9)
    r1 = threshold_r("ecs_classical", 1.0, 1.0)
    assert 0.7 < r1 < 0.8
    assert avg_fidelity_ecs(1.0, r1, 1.0) == pytest.approx(CLASSICAL_LIMIT, abs=1e-9)
    assert threshold_r("crossover", 1.0, 0.5) is None
    rc = threshold_r("crossover", 1.0, 1.6)
    assert 0 < rc < 1 / math.sqrt(3)
    assert avg_fidelity_ecs(1.6, rc, 1.0) == pytest.approx(epp_metrics(rc)[0], abs=1e-9)
    with pytest.raises(ValueError):
        threshold_r("ecs_classical")
    with pytest.raises(ValueError):
        threshold_r("bogus", alpha=1.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
def test_ecs_stays_above_classical_longer(alpha):
    assert threshold_r("ecs_classical", 1.0, alpha) > 1 / math.sqrt(3)


@pytest.mark.parametrize("eta", [0.5, 0.8])
def test_large_alpha_hurts_under_inefficiency(eta):
    assert avg_fidelity_ecs(2.0, 0.0, eta) <= avg_fidelity_ecs(0.5, 0.0, eta)


def test_inefficiency_crossover_exists_at_small_alpha():
    # at eta < 1 the ECS starts below the EPP, so a crossover appears
    rc = threshold_r("crossover", 0.9, 0.5)
    assert rc is not None and 0 < rc < 1


@given(alphas, st.floats(0.0, 1.0), etas)
def test_success_ordering(alpha, r, eta):
    assert success_prob_ecs(alpha, r, eta) >= eta * eta * (1 - r * r) / 2 - 1e-12


def test_parameter_validation():
    with pytest.raises(ValueError):
        avg_fidelity_ecs(1.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        success_prob_ecs(1.0, 1.5, 1.0)
    with pytest.raises(ValueError):
        input_qubit(0, 0, -1.0, 0.2)
    with pytest.raises(ValueError):
        epp_metrics(0.2, 1.2)
