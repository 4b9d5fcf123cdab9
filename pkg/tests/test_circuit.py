import math
from collections import Counter

import pytest

from nestlab.circuit import (
    FLIP,
    PAULIS_2Q,
    FaultLocation,
    GateEvent,
    build_round_schedule,
    enumerate_fault_locations,
    fault_probability,
    label_bits,
)
from nestlab.lattice import build_layout


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("boundary", ["planar", "cyclic"])
def test_no_qubit_twice_per_step(d, boundary):
    sched = build_round_schedule(build_layout(d, boundary))
    assert len(sched.steps) == 8
    for st in sched.steps:
        seen = [q for e in st for q in e.qubits]
        assert len(seen) == len(set(seen))


def test_planar_x_circuits_have_two_hadamards():
    lay = build_layout(3, "planar")
    sched = build_round_schedule(lay)
    had = Counter(e.site for e in sched.events if e.kind == "hadamard")
    assert set(had) == set(lay.syndrome_sites("X"))
    assert set(had.values()) == {2}
    assert len(had) == 6


def test_cyclic_data_four_cx():
    lay = build_layout(3, "cyclic")
    sched = build_round_schedule(lay)
    touches = Counter(q for e in sched.events if e.kind == "cx" for q in e.qubits if q in lay.data_qubits)
    assert set(touches.values()) == {4}
    assert len(touches) == len(lay.data_qubits)


@pytest.mark.parametrize("boundary", ["planar", "cyclic"])
def test_syndrome_init_measure_once(boundary):
    lay = build_layout(4, boundary)
    sched = build_round_schedule(lay)
    sites = [s.syndrome for s in lay.stabilizers]
    for kind in ("init_zero", "measure_z"):
        assert sorted(e.site for e in sched.events if e.kind == kind) == sorted(sites)


def test_cx_directions_and_order():
    lay = build_layout(3, "cyclic")
    sched = build_round_schedule(lay)
    x = (2, 3)
    z = (3, 2)
    got_x = [e.target for step in (2, 3, 4, 5) for e in sched.steps[step] if e.kind == "cx" and e.control == x]
    got_z = [e.control for step in (2, 3, 4, 5) for e in sched.steps[step] if e.kind == "cx" and e.target == z]
    assert got_x == [(1, 3), (2, 2), (2, 4), (3, 3)]  # N W E S
    assert got_z == [(2, 2), (3, 1), (3, 3), (4, 2)]


def test_planar_missing_slot_idles():
    lay = build_layout(3, "planar")
    sched = build_round_schedule(lay)
    # the top-row X check has no North neighbour
    assert any(e.kind == "idle" and e.site == (0, 1) for e in sched.steps[2])


def test_idle_can_be_disabled():
    sched = build_round_schedule(build_layout(3, "planar"), idle_noise=False)
    assert all(e.kind != "idle" for e in sched.noisy_events())


def test_two_qubit_labels():
    assert len(PAULIS_2Q) == 15 and "II" not in PAULIS_2Q
    assert PAULIS_2Q[0] == "IX" and PAULIS_2Q[-1] == "ZZ"


@pytest.mark.parametrize(
    "kind, qubits, n, each",
    [
        ("cx", ((0, 1), (0, 0)), 15, 1 / 15),
        ("hadamard", ((0, 1),), 3, 1 / 3),
        ("idle", ((0, 0),), 3, 1 / 3),
        ("measure_z", ((0, 1),), 1, 1.0),
        ("init_zero", ((0, 1),), 1, 1.0),
    ],
)
def test_label_probabilities(kind, qubits, n, each):
    ev = GateEvent(2, kind, qubits)
    p = 0.03
    locs = [FaultLocation(0, ev, lab, p) for lab in ev.labels]
    assert len(locs) == n
    assert all(math.isclose(fault_probability(f), each * p) for f in locs)
    assert math.isclose(sum(f.probability for f in locs), p, abs_tol=1e-12)


def test_enumeration_scales_with_rounds():
    sched = build_round_schedule(build_layout(3, "cyclic"))
    one = enumerate_fault_locations(sched, 1, 0.01)
    three = enumerate_fault_locations(sched, 3, 0.01)
    assert len(three) == 3 * len(one)
    assert enumerate_fault_locations(sched, 3, 0.01) == three


def test_zero_p():
    sched = build_round_schedule(build_layout(2, "planar"))
    assert all(f.probability == 0 for f in enumerate_fault_locations(sched, 2, 0.0))


def test_per_event_total_is_p():
    sched = build_round_schedule(build_layout(3, "planar"))
    totals = Counter()
    for f in enumerate_fault_locations(sched, 1, 0.07):
        totals[f.event] += f.probability
    assert all(math.isclose(v, 0.07, abs_tol=1e-12) for v in totals.values())


def test_label_bits():
    cx = GateEvent(3, "cx", ((0, 1), (0, 0)))
    assert label_bits(cx, "XZ") == [((0, 1), 1, 0), ((0, 0), 0, 1)]
    assert label_bits(cx, "IY") == [((0, 0), 1, 1)]
    assert label_bits(GateEvent(7, "measure_z", ((0, 1),)), FLIP) == [((0, 1), 1, 0)]


@pytest.mark.parametrize("bad", [0, -1])
def test_rounds_validated(bad):
    with pytest.raises(ValueError):
        enumerate_fault_locations(build_round_schedule(build_layout(2, "planar")), bad, 0.1)
