import math

import numpy as np
import pytest

from conftest import schedule_for
from nestlab.circuit import FaultLocation, GateEvent, RoundSchedule
from nestlab.lattice import build_layout
from nestlab.montecarlo import (
    Sampler,
    TrialConfig,
    chunk_rng,
    estimate_rates,
    extract_detection_events,
    get_sampler,
    per_round,
    run_block_trial,
    sample_faults,
    wilson_interval,
)


def idle_fault(sched, step, site, label, rnd=0):
    ev = next(e for e in sched.steps[step] if e.kind == "idle" and e.site == site)
    return FaultLocation(rnd, ev, label, 0.0)


def test_wilson_basic():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    with pytest.raises(ValueError):
        wilson_interval(1, 0)


def test_wilson_coverage_synthetic():
    rng = np.random.default_rng(2024)
    n, rate, runs = 2000, 0.1, 400
    hits = 0
    for k in rng.binomial(n, rate, size=runs):
        lo, hi = wilson_interval(int(k), n)
        hits += lo <= rate <= hi
    assert hits / runs >= 0.93


@pytest.mark.parametrize("f", [1e-4, 0.01, 0.05])
def test_per_round_small(f):
    assert per_round(f, 8) == f / 8
    exact = (1 - (1 - 2 * f) ** (1 / 8)) / 2
    assert math.isclose(per_round(f, 8), exact, rel_tol=2 * f)


def test_per_round_large():
    assert math.isclose(per_round(0.2, 4), (1 - 0.6 ** 0.25) / 2)
    assert per_round(0.6, 4) == 0.5


def test_config_validation():
    for bad in (dict(distance=1), dict(p=0.5), dict(trials=0), dict(rounds=0), dict(sectors="Y")):
        args = dict(distance=3, boundary="planar", p=0.01, trials=10) | bad
        with pytest.raises(ValueError):
            TrialConfig(**args)
    assert TrialConfig(4, "cyclic", 0.01, 10).R == 8


def test_sample_faults_zero_p():
    assert sample_faults(schedule_for(3, "planar"), 4, 0.0, np.random.default_rng(0)) == []


def test_sample_faults_measure_only_all_flip():
    lay = build_layout(3, "planar")
    meas = tuple(GateEvent(7, "measure_z", (s.syndrome,)) for s in lay.stabilizers)
    sched = RoundSchedule(lay, tuple(() for _ in range(7)) + (meas,), idle_noise=False)
    got = sample_faults(sched, 3, 1.0, np.random.default_rng(0))
    assert len(got) == 3 * len(meas)
    assert all(f.pauli == "flip" for f in got)


def test_cx_label_frequency():
    lay = build_layout(2, "planar")
    cx = GateEvent(2, "cx", ((0, 1), (0, 0)))
    sched = RoundSchedule(lay, ((), (), (cx,), (), (), (), (), ()), idle_noise=False)
    n = 1_000_000
    got = sample_faults(sched, n, 0.15, np.random.default_rng(5))
    count = sum(1 for f in got if f.pauli == "XZ")
    sigma = math.sqrt(n * 0.01 * 0.99)
    assert abs(count - n * 0.01) < 3 * sigma


def test_single_measurement_flip_events():
    sched = schedule_for(3, "planar")
    ev = next(e for e in sched.steps[7] if e.site == (2, 3))
    out = extract_detection_events(sched, [FaultLocation(2, ev, "flip", 0.01)], 6)
    assert out["X"] == [(2, 3, 4), (2, 3, 6)]
    assert out["Z"] == []


def test_identical_faults_cancel():
    sched = schedule_for(3, "planar")
    f = idle_fault(sched, 0, (2, 2), "Y", rnd=1)
    assert extract_detection_events(sched, [f, f], 4) == {"X": [], "Z": []}


def test_cyclic_even_event_counts():
    sched = schedule_for(3, "cyclic")
    rng = np.random.default_rng(9)
    for _ in range(20):
        faults = sample_faults(sched, 4, 0.02, rng)
        out = extract_detection_events(sched, faults, 4)
        assert len(out["X"]) % 2 == 0 and len(out["Z"]) % 2 == 0


def test_last_round_fault_closed_by_readout():
    sched = schedule_for(3, "cyclic")
    f = idle_fault(sched, 7, (0, 0), "Z", rnd=3)
    out = extract_detection_events(sched, [f], 4)
    assert [e[2] for e in out["X"]] == [8, 8]


def test_block_trial_p0():
    cfg = TrialConfig(3, "planar", 0.0, 5)
    assert run_block_trial(cfg, chunk_rng(0, 0)) == {"Z": False, "X": False}


def test_short_chain_fails_planar():
    s = Sampler(3, "planar", 6, 0.001)
    sched = s.schedule
    # two of the three qubits of the Z logical row: the decoder completes the chain
    chain = [idle_fault(sched, 0, (0, 0), "Z"), idle_fault(sched, 0, (0, 2), "Z")]
    assert s.decode_faults(chain) == {"Z": True, "X": False}
    assert s.decode_faults(chain[:1]) == {"Z": False, "X": False}


def test_full_logical_chain_well_defined():
    s = Sampler(3, "planar", 6, 0.001)
    sched = s.schedule
    chain = [idle_fault(sched, 0, q, "Z") for q in [(0, 0), (0, 2), (0, 4)]]
    assert extract_detection_events(sched, chain, 6) == {"X": [], "Z": []}
    assert s.decode_faults(chain)["Z"] is True


def test_cyclic_short_chain_fails():
    s = Sampler(4, "cyclic", 4, 0.001)
    sched = s.schedule
    # half of a length-4 horizontal cycle plus one more: must flip Z1
    chain = [idle_fault(sched, 0, (0, j), "Z") for j in (0, 2, 4)]
    assert s.decode_faults(chain)["Z1"] is True


def test_p0_rates():
    est = estimate_rates(TrialConfig(3, "cyclic", 0.0, 1000))
    for r in est.classes.values():
        assert r.failures == 0 and r.per_round_rate == 0 and r.ci_low == 0
        assert r.ci_high == per_round(wilson_interval(0, 1000)[1], 6)


def test_deterministic_and_chunked():
    cfg = TrialConfig(3, "planar", 0.004, 2500, seed=42, chunk=1000)
    a = estimate_rates(cfg)
    b = estimate_rates(cfg)
    assert a.classes == b.classes
    assert a.classes["X"].trials == 2500
    c = estimate_rates(TrialConfig(3, "planar", 0.004, 2500, seed=43, chunk=1000))
    assert c.classes != a.classes


def test_thread_count_does_not_matter():
    cfg = TrialConfig(3, "cyclic", 0.004, 1200, seed=3, chunk=400)
    assert estimate_rates(cfg, threads=1).classes == estimate_rates(cfg, threads=2).classes


def test_target_failures_stops_early():
    cfg = TrialConfig(3, "planar", 0.006, 100_000, seed=1, chunk=500, target_failures=20, target_class="X")
    est = estimate_rates(cfg)
    assert est["X"].failures >= 20
    assert est["X"].trials < 100_000
    assert est["X"].trials % 500 == 0


def test_rate_interval_contains_estimate():
    est = estimate_rates(TrialConfig(3, "cyclic", 0.005, 2000, seed=8))
    for r in est.classes.values():
        assert r.ci_low <= r.per_round_rate <= r.ci_high
    assert "window" in est.metadata


def test_sector_subset():
    est = estimate_rates(TrialConfig(3, "cyclic", 0.003, 500, seed=2, sectors="X"))
    assert set(est.classes) == {"Z1", "Z2"}


def test_sampler_cached():
    assert get_sampler(3, "planar", 6, 0.002, ("X", "Z")) is get_sampler(3, "planar", 6, 0.002, ("X", "Z"))


@pytest.mark.slow
def test_cyclic_symmetry_x1_z2():
    est = estimate_rates(TrialConfig(3, "cyclic", 0.004, 12_000, seed=17))
    for a, b in (("X1", "Z2"), ("X2", "Z1")):
        ka, kb = est[a].failures, est[b].failures
        assert min(ka, kb) >= 300
        n = est[a].trials
        pa, pb = ka / n, kb / n
        pool = (ka + kb) / (2 * n)
        z = (pa - pb) / math.sqrt(2 * pool * (1 - pool) / n)
        assert abs(z) < 4


@pytest.mark.slow
def test_rate_grows_with_p():
    rates = [estimate_rates(TrialConfig(3, "planar", p, 4000, seed=5))["X"] for p in (0.002, 0.004, 0.008)]
    for lo, hi in zip(rates, rates[1:]):
        assert hi.per_round_rate >= lo.per_round_rate or hi.ci_high >= lo.ci_low


@pytest.mark.slow
def test_cyclic_below_planar_small():
    p = 0.004
    cyc = estimate_rates(TrialConfig(4, "cyclic", p, 6000, seed=4))
    pla = estimate_rates(TrialConfig(4, "planar", p, 6000, seed=4))
    assert cyc["X1"].per_round_rate < pla["X"].per_round_rate
    assert cyc["Z1"].per_round_rate < pla["Z"].per_round_rate


def test_unknown_target_class():
    with pytest.raises(ValueError):
        estimate_rates(TrialConfig(3, "planar", 0.01, 10, target_failures=1, target_class="X1"))
