import math

import numpy as np
import pytest

from ecsepp.analytic import (
    QuadratureSpec,
    avg_fidelity_ecs,
    ecs_outcome,
    epp_metrics,
    input_qubit,
    success_prob_ecs,
)
from ecsepp.channels import LossParams
from ecsepp.fock import TruncationError
from ecsepp.oracle import (
    ECS_CORRECTIONS,
    EPP_CORRECTIONS,
    ProtocolConfig,
    WiringError,
    bell_state_overlaps,
    cross_term_damping,
    ecs_transfer,
    end_to_end_ecs,
    ideal_fidelities,
    oracle_average,
    resolve_corrections,
    simulate_ecs,
    simulate_epp,
    swapped,
)

POINT = (math.pi / 3, math.pi / 5)


def run(alpha, r, eta=1.0, point=POINT, kind="ecs_odd", **kw):
    return simulate_ecs(ProtocolConfig(kind, alpha, LossParams(r), eta, point, **kw))


@pytest.mark.parametrize("point", [(0.0, 0.0), (math.pi, 0.0), POINT])
def test_ideal_teleportation_is_perfect(point):
    res = run(1.0, 0.0, point=point)
    for rec in res.retained:
        assert rec.f == pytest.approx(1.0, abs=1e-10)
    assert res.success_probability == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("eta", [1.0, 0.8])
def test_oracle_matches_analytic_example(eta):
    res = run(1.0, 0.4, eta)
    want = {rec.j: rec for rec in ecs_outcome(1.0, 0.4, eta, input_qubit(*POINT, 1.0, 0.4))}
    for j in ("2", "4"):
        assert res.record(j).p == pytest.approx(want[j].p, abs=1e-7)
        assert res.record(j).f == pytest.approx(want[j].f, abs=1e-7)


@pytest.mark.parametrize("kind", ["ecs_odd", "ecs_even"])
def test_outcomes_complete_at_unit_efficiency(kind):
    res = run(0.8, 0.3, kind=kind)
    assert res.total_probability == pytest.approx(1.0, abs=1e-8)
    assert res.record("both").p == pytest.approx(0.0, abs=1e-12)


def test_outcomes_complete_with_inefficiency():
    res = run(0.8, 0.3, 0.6)
    assert res.total_probability == pytest.approx(1.0, abs=1e-8)
    epp = simulate_epp(0.3, 0.6, POINT)
    assert epp.total_probability == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["ecs_odd", "ecs_even", "epp"])
def test_resolved_corrections_are_frozen(kind):
    frozen = EPP_CORRECTIONS if kind == "epp" else ECS_CORRECTIONS[kind]
    got = resolve_corrections(kind)
    assert set(got) == set(frozen)
    for j in got:
        assert got[j] == frozen[j]


@pytest.mark.parametrize("kind", ["ecs_odd", "ecs_even", "epp"])
def test_swapped_wiring_fails(kind):
    frozen = EPP_CORRECTIONS if kind == "epp" else ECS_CORRECTIONS[kind]
    assert min(ideal_fidelities(kind, swapped(frozen)).values()) < 0.9


def test_resolve_raises_without_valid_wiring(monkeypatch):
    import ecsepp.oracle as oracle

    monkeypatch.setattr(oracle, "ideal_fidelities", lambda *a, **k: {"x": 0.5})
    with pytest.raises(WiringError):
        oracle.resolve_corrections("ecs_odd")


def test_bell_state_signatures():
    ov = bell_state_overlaps(1.0)
    assert ov["psi-"]["4"] == pytest.approx(1.0, abs=1e-9)
    assert ov["phi-"]["2"] == pytest.approx(1.0, abs=1e-9)
    for name in ("phi+", "psi+"):
        assert ov[name]["2"] + ov[name]["4"] < 1e-9
        assert ov[name]["e"] <= 2 * math.exp(-2) + 1e-12


def test_cross_term_damping():
    c, want = cross_term_damping(1.0, 0.5)
    assert c == pytest.approx(want, abs=1e-8)
    assert want == pytest.approx(math.exp(-2))


def test_epp_examples():
    res = simulate_epp(0.5, 1.0, POINT)
    assert res.fidelity == pytest.approx(0.75, abs=1e-12)
    assert res.success_probability == pytest.approx(0.375, abs=1e-12)
    res = simulate_epp(0.0, 0.8, POINT)
    assert res.success_probability == pytest.approx(0.32, abs=1e-12)
    assert simulate_epp(0.5, 0.8, POINT).success_probability == pytest.approx(0.24, abs=1e-12)


@pytest.mark.parametrize("r,eta", [(0.3, 1.0), (0.6, 0.7)])
def test_epp_oracle_average_matches_closed_form(r, eta):
    f, p = oracle_average("epp", None, r, eta, QuadratureSpec(8, 8))
    assert (f, p) == pytest.approx(epp_metrics(r, eta), abs=1e-12)


def test_even_ecs_same_fidelity_lower_success():
    odd = run(0.5, 0.4, 0.8)
    even = run(0.5, 0.4, 0.8, kind="ecs_even")
    assert even.fidelity == pytest.approx(odd.fidelity, abs=1e-8)
    assert even.success_probability < odd.success_probability


def test_transfer_matches_direct_simulation():
    tr = ecs_transfer(1.0, 0.4, 0.8)
    q = input_qubit(*POINT, 1.0, 0.4)
    p, pf = tr.evaluate(q.a, q.b)
    res = run(1.0, 0.4, 0.8)
    for j in ("2", "4"):
        assert float(p[j]) == pytest.approx(res.record(j).p, abs=1e-10)
        assert float(pf[j]) == pytest.approx(res.record(j).pf, abs=1e-10)


def test_oracle_average_matches_quadrature():
    quad = QuadratureSpec(8, 16)
    f, p = oracle_average("ecs_odd", 1.0, 0.5, 0.7, quad)
    assert f == pytest.approx(avg_fidelity_ecs(1.0, 0.5, 0.7, quad), abs=1e-9)
    assert p == pytest.approx(success_prob_ecs(1.0, 0.5, 0.7, quad), abs=1e-9)


def test_small_cutoff_aborts():
    with pytest.raises(TruncationError):
        run(2.0, 0.0, cutoff=6)


def test_input_validation():
    with pytest.raises(ValueError):
        ProtocolConfig("ecs_odd", 1.0, LossParams(1.0))
    with pytest.raises(ValueError):
        ProtocolConfig("bogus", 1.0, LossParams(0.2))
    with pytest.raises(ValueError):
        ProtocolConfig("ecs_odd", 1.0, LossParams(0.2), eta=0.0)


def test_end_to_end_dense_channel():
    out = end_to_end_ecs()
    for p_o, pf_o, p_a, pf_a in out.values():
        assert p_o == pytest.approx(p_a, abs=1e-9)
        assert pf_o == pytest.approx(pf_a, abs=1e-9)
