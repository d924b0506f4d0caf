import json
import math
import random

import pytest

from hubo_dnr.qre import (EstimationError, HardwareProfile, load_profiles, physical_estimate,
                          required_code_distance, tradeoff_region)
from hubo_dnr.spin import IsingSummary

PROFILES = load_profiles()


def prof(**kw):
    base = dict(name="test", t_gate=1e-7, t_meas=1e-7, p_phys=1e-3)
    base.update(kw)
    return HardwareProfile(**base)


def summary(qubits, rotations):
    return IsingSummary.of(qubits, rotations - 2 * qubits)


def test_builtin_profiles():
    assert len(PROFILES) == 6
    assert [p.family for p in PROFILES].count("gate-based") == 4
    assert [p.family for p in PROFILES].count("majorana") == 2
    assert len({p.name for p in PROFILES}) == 6


@pytest.mark.parametrize("kw", [dict(t_gate=0), dict(t_meas=-1), dict(p_phys=0.02), dict(p_phys=0),
                                dict(family="ion")])
def test_profile_validation(kw):
    with pytest.raises(EstimationError):
        prof(**kw)


def test_logical_error_rate_example():
    p = prof(p_phys=1e-3, p_threshold=1e-2, code_prefactor_a=0.03)
    assert p.logical_error_rate(9) == pytest.approx(3e-7, rel=1e-12)


def test_distance_monotone_in_budget():
    s = summary(100, 10_000)
    for p in PROFILES:
        assert required_code_distance(s, p, 1e-2) <= required_code_distance(s, p, 1e-3)


def test_distance_cap_near_threshold():
    s = summary(100, 10_000)
    with pytest.raises(EstimationError, match="99"):
        required_code_distance(s, prof(p_phys=0.0099), 1e-3)


def test_rejects_bad_inputs():
    with pytest.raises(EstimationError):
        required_code_distance(summary(1, 2), PROFILES[0], 1.5)
    with pytest.raises(EstimationError):
        required_code_distance(IsingSummary.of(0, 0), PROFILES[0])
    with pytest.raises(EstimationError):
        physical_estimate(summary(3, 13), PROFILES[0], distance=4)


def test_runtime_linear_in_rotations():
    p = PROFILES[2]
    a = physical_estimate(summary(50, 1000), p, distance=11)
    b = physical_estimate(summary(50, 2000), p, distance=11)
    assert b.logical_cycles == 2 * a.logical_cycles
    assert b.runtime == pytest.approx(2 * a.runtime, rel=1e-15)


def test_physical_qubit_formula():
    e = physical_estimate(summary(14, 94), PROFILES[0], distance=9)
    assert e.physical_qubits == 2 * 81 * 14 * 2 == 4536


def test_estimate_fields_consistent():
    s = summary(200, 50_000)
    for p in PROFILES:
        e = physical_estimate(s, p, 1e-3)
        assert e.error_budget_used <= 1e-3
        assert e.runtime == pytest.approx(e.logical_cycles * e.code_distance
                                          * (p.cycle_gate_factor * p.t_gate + p.cycle_meas_factor * p.t_meas))
        per_rot = math.ceil(p.synth_a * math.log2(s.rotation_gates_one_layer / (1e-3 / 3)) + p.synth_b)
        assert e.t_count == s.rotation_gates_one_layer * per_rot


def test_tradeoff_region_shape():
    pts = tradeoff_region(summary(47, 5000), PROFILES)
    assert len(pts) >= 18
    for name in {p.name for p in PROFILES}:
        mine = [e for e in pts if e.profile == name]
        ds = [e.code_distance for e in mine]
        assert ds == [ds[0], ds[0] + 2, ds[0] + 4]
        assert all(a.runtime < b.runtime for a, b in zip(mine, mine[1:]))
        assert all(a.physical_qubits < b.physical_qubits for a, b in zip(mine, mine[1:]))
    with pytest.raises(EstimationError):
        tradeoff_region(summary(3, 13), [])


def test_brute_force_distance_scan():
    rng = random.Random(2)
    for _ in range(100):
        q = rng.randint(1, 100_000)
        s = summary(q, 2 * q + rng.randint(1, 10 ** 9))
        p = rng.choice(PROFILES)
        eps = 10 ** rng.uniform(-6, -1)
        ref = next((d for d in range(3, 100, 2)
                    if q * s.rotation_gates_one_layer * 0.03 * (p.p_phys / 0.01) ** ((d + 1) / 2) <= eps / 3), None)
        assert required_code_distance(s, p, eps) == ref


def test_profiles_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps([dict(name="x", t_gate=1e-6, t_meas=1e-6, p_phys=1e-4)]))
    (p,) = load_profiles(path)
    assert p.name == "x" and p.family == "gate-based"
    path.write_text(json.dumps([dict(name="x", speed=3)]))
    with pytest.raises(EstimationError, match=r"\[0\]"):
        load_profiles(path)
