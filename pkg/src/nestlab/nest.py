"""Single-fault detection-event graphs ("nests").

A stick joins two detection events ``(i, j, t)`` that some single fault
produces together.  On planar layouts a fault that lights a single event is
recorded as a stick to a virtual coordinate just outside the lattice, on the
side whose logical cut the fault crosses.
"""

from __future__ import annotations

import math
import re
import warnings
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .circuit import RoundSchedule
from .frames import FaultEffects, compute_effects
from .lattice import Boundary, CodeLayout, build_layout, error_classes

Event = tuple[int, int, int]  # (i, j, t)

MAX_DEGREE = 12


class NestConsistencyError(RuntimeError):
    pass


class NestParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnsupportedBoundary(ValueError):
    pass


@dataclass(frozen=True)
class Stick:
    a: Event
    b: Event
    probability: float
    logical_flips: tuple[int, ...] = ()
    marked: bool = False

    @property
    def key(self) -> frozenset:
        return frozenset((self.a, self.b))


@dataclass
class Nest:
    layout: CodeLayout
    rounds: int
    p: Optional[float]
    sector: str
    sticks: dict[frozenset, Stick] = field(default_factory=dict)
    classes: tuple[str, ...] = ()
    closed: bool = False
    dropped: int = 0  # faults with more than two events in this sector

    def __len__(self) -> int:
        return len(self.sticks)

    def __iter__(self):
        return iter(self.sticks.values())

    def is_boundary(self, e: Event) -> bool:
        return self.layout.is_boundary_site(e[:2], self.sector)

    def same_sticks(self, other: "Nest", tol: float = 0.0) -> bool:
        if self.sticks.keys() != other.sticks.keys():
            return False
        return all(
            abs(s.probability - other.sticks[k].probability) <= tol for k, s in self.sticks.items()
        )


def compose_xor(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent events occurs."""
    return p1 + p2 - 2 * p1 * p2


def propagate_fault(schedule: RoundSchedule, fault, rounds: int) -> dict[str, tuple[list[Event], tuple[int, ...]]]:
    """Detection events and logical flips of one fault, per sector.

    ``fault`` is a :class:`FaultLocation`.  Returns
    ``{sector: (events, flips)}`` where ``flips`` follows
    ``error_classes(layout, sector)``.  Events in the trailing noiseless
    round (``t = 2 * rounds``) are included.
    """
    from .circuit import FaultLocation

    if not isinstance(fault, FaultLocation):
        raise TypeError("fault must be a FaultLocation")
    if not 0 <= fault.round < rounds:
        raise ValueError("fault round outside the window")
    single = RoundSchedule(schedule.layout, schedule.steps, schedule.idle_noise)
    eff = compute_effects(single, rounds)
    events = single.noisy_events()
    pos = events.index(fault.event)
    k = int(eff.loc_ptr[fault.round * len(events) + pos]) + fault.event.labels.index(fault.pauli)
    out = {}
    for sector, se in eff.sectors.items():
        evs = []
        for idx in se.events_of(k):
            (i, j), t = se.decode_index(idx)
            evs.append((i, j, t))
        out[sector] = (evs, tuple(int(b) for b in se.flips[k]))
    return out


def boundary_event(layout: CodeLayout, sector: str, e: Event, crosses_cut: bool) -> Event:
    """Virtual endpoint for a lone event: the near edge of the crossed cut."""
    i, j, t = e
    edge = 2 * layout.distance - 1
    if sector == "X":
        return (i, -1 if crosses_cut else edge, t)
    return (-1 if crosses_cut else edge, j, t)


def build_nest(
    schedule: RoundSchedule,
    rounds: int,
    p: float,
    sector: str,
    *,
    closed: bool = False,
    aggregate: str = "sum",
    strict: bool = True,
    effects: Optional[FaultEffects] = None,
) -> Nest:
    """Collect every single-fault stick of one sector.

    With ``closed=False`` the window is ``rounds`` noisy rounds and faults
    whose events spill past the last one are left out.  With ``closed=True``
    a noiseless readout round is appended and its events kept, which is the
    graph a decoder needs.

    ``aggregate`` is ``"sum"`` (default) or ``"xor"`` (:func:`compose_xor`).
    """
    sector = sector.upper()
    if sector not in ("X", "Z"):
        raise ValueError("sector must be X or Z")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not 0 <= p < 0.5:
        raise ValueError("p must lie in [0, 0.5)")
    if aggregate not in ("sum", "xor"):
        raise ValueError("aggregate must be 'sum' or 'xor'")
    layout = schedule.layout
    classes = tuple(error_classes(layout, sector))
    nest = Nest(layout, rounds, p, sector, classes=classes, closed=closed)
    if p == 0:
        return nest
    if effects is None:
        effects = compute_effects(schedule, rounds)
    se = effects.sectors[sector]
    last_layer = rounds  # layer index of the trailing round
    n_sites = se.n_sites

    prob: dict[frozenset, float] = defaultdict(float)
    flips_of: dict[frozenset, tuple[tuple[int, ...], float]] = {}
    ends: dict[frozenset, tuple[Event, Event]] = {}
    for k in range(effects.n_faults):
        idx = se.events_of(k)
        if idx.size == 0:
            continue
        if not closed and idx.max() // n_sites == last_layer:
            continue
        if idx.size > 2:
            nest.dropped += 1
            continue
        q = p * float(effects.weight[k])
        fl = tuple(int(b) for b in se.flips[k])
        evs = []
        for v in idx:
            (i, j), t = se.decode_index(v)
            evs.append((i, j, t))
        if len(evs) == 1:
            if layout.cyclic:
                nest.dropped += 1
                continue
            evs.append(boundary_event(layout, sector, evs[0], bool(fl[0])))
        key = frozenset(evs)
        if len(key) == 1:
            warnings.warn(f"degenerate stick at {evs[0]} dropped")
            continue
        if aggregate == "sum":
            prob[key] += q
        else:
            prob[key] = compose_xor(prob[key], q)
        seen = flips_of.get(key)
        if seen is None:
            flips_of[key] = (fl, q)
            ends[key] = (evs[0], evs[1])
        elif seen[0] != fl:
            if strict:
                raise NestConsistencyError(
                    f"contributors to stick {sorted(key)} disagree on logical flips"
                )
            if q > seen[1]:
                flips_of[key] = (fl, q)

    for key, pr in prob.items():
        a, b = orient(nest, *ends[key])
        nest.sticks[key] = Stick(a, b, pr, flips_of[key][0])
    return nest


def orient(nest: Nest, a: Event, b: Event) -> tuple[Event, Event]:
    """Export orientation: later time first, ties broken by smaller site.

    A virtual boundary endpoint always goes second.
    """
    if nest.is_boundary(a):
        return b, a
    if nest.is_boundary(b):
        return a, b
    if (-a[2], a[:2]) <= (-b[2], b[:2]):
        return a, b
    return b, a


def _second_key(nest: Nest, e: Event):
    if nest.is_boundary(e):
        return (e[0], -math.inf, -math.inf)
    return e


def ordered_sticks(nest: Nest) -> list[Stick]:
    """Sticks in export order.

    Grouped by first endpoint, groups by descending time then descending
    site; within a group by descending second endpoint, with a boundary
    endpoint placed after all events in its row.
    """
    return sorted(
        nest.sticks.values(),
        key=lambda s: (s.a[2], s.a[0], s.a[1], _second_key(nest, s.b)),
        reverse=True,
    )


def _fmt_event(e: Event) -> str:
    return f"({e[0]}, {e[1]}, {e[2]})"


def export_nest(nest: Nest) -> str:
    rows = ordered_sticks(nest)
    lines = ["["]
    for k, s in enumerate(rows):
        sep = "," if k < len(rows) - 1 else ""
        line = f" [{_fmt_event(s.a)}, {_fmt_event(s.b)}, {s.probability:.7f}]{sep}"
        if s.marked:
            line += " *"
        lines.append(line)
    lines.append("]")
    return "\n".join(lines) + "\n"


_LINE = re.compile(
    r"^ ?\[\((-?\d+), ?(-?\d+), ?(-?\d+)\), ?\((-?\d+), ?(-?\d+), ?(-?\d+)\), ?"
    r"([0-9]*\.?[0-9]+(?:[eE][-+]?\d+)?)\],?( \*)?\s*$"
)


def import_nest(
    text: str,
    *,
    distance: Optional[int] = None,
    boundary: Optional[str] = None,
    sector: Optional[str] = None,
) -> Nest:
    """Parse exported nest text.  Geometry is inferred unless given."""
    lines = text.splitlines()
    body = [(n + 1, ln) for n, ln in enumerate(lines) if ln.strip()]
    if not body or body[0][1].strip() != "[":
        raise NestParseError(body[0][0] if body else 1, "expected opening '['")
    if body[-1][1].strip() != "]":
        raise NestParseError(body[-1][0], "expected closing ']'")
    raw = []
    for n, ln in body[1:-1]:
        m = _LINE.match(ln)
        if not m:
            raise NestParseError(n, f"malformed stick: {ln.strip()!r}")
        g = m.groups()
        a = tuple(int(x) for x in g[0:3])
        b = tuple(int(x) for x in g[3:6])
        raw.append((n, a, b, float(g[6]), g[7] is not None))

    sites = [e for _, a, b, _, _ in raw for e in (a, b)]
    if sector is None:
        if not sites:
            raise NestParseError(1, "cannot infer sector of an empty nest")
        inner = [e for e in sites if e[0] >= 0 and e[1] >= 0]
        sector = "X" if all(e[0] % 2 == 0 for e in inner) else "Z"
    sector = sector.upper()
    if boundary is None:
        boundary = "planar" if any(min(e[0], e[1]) < 0 for e in sites) else "cyclic"
    if distance is None:
        axis = 0 if sector == "X" else 1  # the even coordinate of this sector's sites
        top = max((e[axis] for e in sites if min(e[0], e[1]) >= 0), default=2)
        distance = top // 2 + 1
    layout = build_layout(distance, Boundary(boundary))

    rounds = max((e[2] for e in sites), default=0) // 2 + 1
    nest = Nest(layout, rounds, None, sector, classes=tuple(error_classes(layout, sector)))
    for n, a, b, pr, marked in raw:
        if a == b:
            raise NestParseError(n, "stick endpoints coincide")
        for e in (a, b):
            if nest.is_boundary(e):
                continue
            if not layout.cyclic and not (0 <= e[0] <= 2 * distance - 2 and 0 <= e[1] <= 2 * distance - 2):
                raise NestParseError(n, f"endpoint {e} outside the lattice")
            if layout.cyclic and not (0 <= e[0] < 2 * distance and 0 <= e[1] < 2 * distance):
                raise NestParseError(n, f"endpoint {e} outside the lattice")
        key = frozenset((a, b))
        if key in nest.sticks:
            raise NestParseError(n, "duplicate stick")
        nest.sticks[key] = Stick(a, b, pr, (), marked)
    return nest


def diff_nests(ours: Nest, reference: Nest, tol: float) -> dict:
    """Compare stick sets and diameters; report what does not match."""
    missing = sorted(tuple(sorted(k)) for k in reference.sticks.keys() - ours.sticks.keys())
    extra = sorted(tuple(sorted(k)) for k in ours.sticks.keys() - reference.sticks.keys())
    common = ours.sticks.keys() & reference.sticks.keys()
    deltas = {k: abs(ours.sticks[k].probability - reference.sticks[k].probability) for k in common}
    worst = max(deltas.values(), default=0.0)
    over = sorted(tuple(sorted(k)) for k, v in deltas.items() if v > tol)
    return {
        "missing": missing,
        "extra": extra,
        "max_abs_diff": worst,
        "over_tolerance": over,
        "ok": not missing and not extra and not over,
    }


def displacement(nest: Nest, s: Stick) -> tuple[int, int, int]:
    """(di, dj, dt) from a to b, spatial part reduced to the minimal image on cyclic layouts."""
    di, dj, dt = (s.b[0] - s.a[0], s.b[1] - s.a[1], s.b[2] - s.a[2])
    if nest.layout.cyclic:
        n = nest.layout.period
        di = (di + n // 2 - 1) % n - (n // 2 - 1)
        dj = (dj + n // 2 - 1) % n - (n // 2 - 1)
    return di, dj, dt


def verify_no_zigzag(nest: Nest) -> list[dict]:
    """Diagonal stick classes that appear with both temporal directions.

    A diagonal stick has nonzero spatial and temporal displacement.  Sticks
    are oriented so the spatial displacement is lexicographically positive;
    an empty list means no zigzag exists.
    """
    seen: dict[tuple[int, int], dict[int, list[Stick]]] = defaultdict(lambda: defaultdict(list))
    for s in nest:
        if nest.is_boundary(s.a) or nest.is_boundary(s.b):
            continue
        di, dj, dt = displacement(nest, s)
        if dt == 0 or (di, dj) == (0, 0):
            continue
        if (di, dj) < (0, 0):
            di, dj, dt = -di, -dj, -dt
        seen[(di, dj)][int(np.sign(dt))].append(s)
    report = []
    for cls, by_sign in sorted(seen.items()):
        if len(by_sign) > 1:
            report.append({"class": cls, "examples": [by_sign[1][0], by_sign[-1][0]]})
    return report


def degree_violations(nest: Nest, limit: int = MAX_DEGREE) -> dict[Event, int]:
    """Detection events touched by more than ``limit`` sticks."""
    deg: dict[Event, int] = defaultdict(int)
    for s in nest:
        for e in (s.a, s.b):
            if not nest.is_boundary(e):
                deg[e] += 1
    return {e: n for e, n in deg.items() if n > limit}


def max_degree(nest: Nest) -> int:
    deg: dict[Event, int] = defaultdict(int)
    for s in nest:
        for e in (s.a, s.b):
            if not nest.is_boundary(e):
                deg[e] += 1
    return max(deg.values(), default=0)


def count_min_nontrivial_cycles(nest: Nest, homology: str) -> int:
    """Number of length-``d`` stick cycles winding once around the torus.

    ``homology`` is ``"left-right"`` (winding in j) or ``"top-bottom"``
    (winding in i).  A cycle of ``d`` sticks covers ``2d`` lattice units, so
    every stick must advance by exactly 2 in the winding direction.  Cycles
    must return to their starting time; each one is counted once, anchored
    at its earliest node, and only those anchored in one interior layer are
    reported.
    """
    layout = nest.layout
    if not layout.cyclic:
        raise UnsupportedBoundary("cycle counting needs a cyclic nest")
    if nest.rounds < 3:
        raise ValueError("need at least 3 rounds")
    if homology not in ("left-right", "top-bottom"):
        raise ValueError("homology must be 'left-right' or 'top-bottom'")
    d = layout.distance
    axis = 1 if homology == "left-right" else 0
    n = layout.period

    # forward steps only: +2 along the winding axis
    fwd: dict[Event, list[Event]] = defaultdict(list)
    for s in nest:
        for a, b in ((s.a, s.b), (s.b, s.a)):
            delta = (b[axis] - a[axis]) % n
            if delta == 2:
                fwd[a].append(b)

    t0 = 2 * ((nest.rounds - 1) // 2)
    starts = sorted(e for e in fwd if e[2] == t0)
    found: set[frozenset] = set()

    def walk(path: list[Event]):
        if len(path) == d:
            if path[0] in fwd[path[-1]]:
                nodes = frozenset(path)
                if len(nodes) == d and min(e[2] for e in nodes) == t0:
                    found.add(frozenset(zip(path, path[1:] + path[:1])))
            return
        for nxt in fwd[path[-1]]:
            if nxt not in path:
                walk(path + [nxt])

    for st in starts:
        walk([st])
    # a cycle is found once per start node lying in layer t0
    unique = {frozenset(frozenset(edge) for edge in cyc) for cyc in found}
    return len(unique)


def stick_class(nest: Nest, s: Stick) -> tuple[int, int, int]:
    """Displacement class of a stick, oriented with nonnegative time step."""
    di, dj, dt = displacement(nest, s)
    if dt < 0 or (dt == 0 and (di, dj) < (0, 0)):
        di, dj, dt = -di, -dj, -dt
    return di, dj, dt


def with_marks(nest: Nest, marked: set[frozenset]) -> Nest:
    """Copy of ``nest`` with the given sticks flagged for export."""
    out = replace(nest, sticks=dict(nest.sticks))
    for k in marked:
        out.sticks[k] = replace(out.sticks[k], marked=True)
    return out
