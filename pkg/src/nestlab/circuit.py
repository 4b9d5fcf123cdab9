"""Syndrome-extraction schedule and depolarizing fault enumeration."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .lattice import CodeLayout, Coord

STEPS_PER_ROUND = 8
INTERACTION_STEPS = (2, 3, 4, 5)

PAULIS_1Q = ("X", "Y", "Z")
# ordered control (first letter) then target (second letter)
PAULIS_2Q = tuple(a + b for a, b in product("IXYZ", repeat=2) if a + b != "II")
FLIP = "flip"


@dataclass(frozen=True)
class GateEvent:
    step: int
    kind: str  # init_zero | hadamard | cx | measure_z | idle
    qubits: tuple[Coord, ...]  # (site,) or (control, target)

    @property
    def site(self) -> Coord:
        return self.qubits[0]

    @property
    def control(self) -> Coord:
        return self.qubits[0]

    @property
    def target(self) -> Coord:
        return self.qubits[1]

    @property
    def labels(self) -> tuple[str, ...]:
        if self.kind in ("init_zero", "measure_z"):
            return (FLIP,)
        if self.kind == "cx":
            return PAULIS_2Q
        return PAULIS_1Q


@dataclass(frozen=True)
class RoundSchedule:
    layout: CodeLayout
    steps: tuple[tuple[GateEvent, ...], ...]
    idle_noise: bool = True
    steps_per_round: int = STEPS_PER_ROUND

    @property
    def events(self) -> list[GateEvent]:
        return [e for st in self.steps for e in st]

    def noisy_events(self) -> list[GateEvent]:
        return [e for e in self.events if e.kind != "idle" or self.idle_noise]


@dataclass(frozen=True)
class FaultLocation:
    round: int
    event: GateEvent
    pauli: str
    p: float = field(default=0.0)

    @property
    def probability(self) -> float:
        return fault_probability(self)


def build_round_schedule(layout: CodeLayout, idle_noise: bool = True) -> RoundSchedule:
    """One round measuring every stabilizer at once.

    X syndromes: init, H, four CX (syndrome controls data), H, measure.
    Z syndromes: init, four CX (data controls syndrome), measure.
    Interactions follow North, West, East, South.  Any qubit not acted on in a
    step gets an ``idle`` event.
    """
    xs = layout.stabilizers_of("X")
    zs = layout.stabilizers_of("Z")
    steps: list[list[GateEvent]] = [[] for _ in range(STEPS_PER_ROUND)]

    for s in xs + zs:
        steps[0].append(GateEvent(0, "init_zero", (s.syndrome,)))
        steps[7].append(GateEvent(7, "measure_z", (s.syndrome,)))
    for s in xs:
        steps[1].append(GateEvent(1, "hadamard", (s.syndrome,)))
        steps[6].append(GateEvent(6, "hadamard", (s.syndrome,)))
    for k, step in enumerate(INTERACTION_STEPS):
        for s in xs:
            q = s.members[k]
            if q is not None:
                steps[step].append(GateEvent(step, "cx", (s.syndrome, q)))
        for s in zs:
            q = s.members[k]
            if q is not None:
                steps[step].append(GateEvent(step, "cx", (q, s.syndrome)))

    syndromes = [s.syndrome for s in xs + zs]
    everyone = list(layout.data_qubits) + syndromes
    for step, events in enumerate(steps):
        busy = {q for e in events for q in e.qubits}
        for q in everyone:
            if q in busy:
                continue
            events.append(GateEvent(step, "idle", (q,)))

    return RoundSchedule(layout, tuple(tuple(st) for st in steps), idle_noise)


def enumerate_fault_locations(schedule: RoundSchedule, rounds: int, p: float) -> list[FaultLocation]:
    """Every (round, event, label) triple in schedule order."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    events = schedule.noisy_events()
    return [
        FaultLocation(r, e, label, p)
        for r in range(rounds)
        for e in events
        for label in e.labels
    ]


def fault_probability(location: FaultLocation) -> float:
    n = len(location.event.labels)
    return location.p / n


def label_bits(event: GateEvent, label: str) -> list[tuple[Coord, int, int]]:
    """(qubit, x bit, z bit) entries for one fault label.

    Init and measurement flips are X on the syndrome qubit, which flips a
    Z-basis preparation or readout.
    """
    if label == FLIP:
        return [(event.site, 1, 0)]
    out = []
    for q, letter in zip(event.qubits, label):
        if letter == "I":
            continue
        out.append((q, int(letter in "XY"), int(letter in "YZ")))
    return out
