"""Planar and cyclic surface-code layouts.

Coordinates are ``(i, j)`` with ``i`` the row (increasing southwards) and
``j`` the column (increasing eastwards).  Data qubits sit where ``i + j`` is
even, X-syndrome qubits at (even, odd) and Z-syndrome qubits at (odd, even).

Planar layouts occupy ``0 <= i, j <= 2d - 2``.  X-type detection events can
terminate on the virtual columns ``j = -1`` and ``j = 2d - 1``; Z-type events
on the virtual rows ``i = -1`` and ``i = 2d - 1``.  Cyclic layouts are the
same pattern on a ``2d x 2d`` torus.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

Coord = tuple[int, int]

# interaction order, also the slot order of Stabilizer.members
DIRECTIONS: dict[str, Coord] = {"N": (-1, 0), "W": (0, -1), "E": (0, 1), "S": (1, 0)}
SLOTS = ("N", "W", "E", "S")


class InvalidParameter(ValueError):
    pass


class Boundary(str, Enum):
    PLANAR = "planar"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class Stabilizer:
    kind: str  # "X" or "Z"
    syndrome: Coord
    members: tuple[Optional[Coord], ...]  # N, W, E, S; None where a planar edge drops the slot

    @property
    def support(self) -> frozenset[Coord]:
        return frozenset(m for m in self.members if m is not None)


@dataclass(frozen=True)
class LogicalOperatorSpec:
    label: str
    pauli: str
    support: frozenset[Coord]
    homology: str  # "left-right" or "top-bottom"


@dataclass(frozen=True)
class CodeLayout:
    distance: int
    boundary: Boundary
    data_qubits: tuple[Coord, ...]
    stabilizers: tuple[Stabilizer, ...]

    @property
    def period(self) -> int:
        return 2 * self.distance

    @property
    def cyclic(self) -> bool:
        return self.boundary is Boundary.CYCLIC

    def stabilizers_of(self, kind: str) -> list[Stabilizer]:
        return [s for s in self.stabilizers if s.kind == kind]

    def syndrome_sites(self, kind: str) -> list[Coord]:
        return [s.syndrome for s in self.stabilizers if s.kind == kind]

    def wrap(self, c: Coord) -> Coord:
        if self.cyclic:
            return (c[0] % self.period, c[1] % self.period)
        return c

    def is_boundary_site(self, c: Coord, kind: str) -> bool:
        """True for the virtual coordinates that stand in for a planar edge."""
        if self.cyclic:
            return False
        edge = 2 * self.distance - 1
        axis = 1 if kind == "X" else 0
        return c[axis] in (-1, edge)


def build_layout(distance: int, boundary: Boundary | str) -> CodeLayout:
    """Construct the distance-``d`` layout for the given boundary kind."""
    boundary = Boundary(boundary)
    if not isinstance(distance, (int, np.integer)) or distance < 2:
        raise InvalidParameter(f"distance must be an integer >= 2, got {distance!r}")
    d = int(distance)
    n = 2 * d if boundary is Boundary.CYCLIC else 2 * d - 1

    data = tuple((i, j) for i in range(n) for j in range(n) if (i + j) % 2 == 0)
    data_set = set(data)

    def neighbour(site: Coord, delta: Coord) -> Optional[Coord]:
        q = (site[0] + delta[0], site[1] + delta[1])
        if boundary is Boundary.CYCLIC:
            q = (q[0] % n, q[1] % n)
        return q if q in data_set else None

    stabs = []
    for i in range(n):
        for j in range(n):
            if (i + j) % 2 == 0:
                continue
            kind = "X" if i % 2 == 0 else "Z"
            members = tuple(neighbour((i, j), DIRECTIONS[s]) for s in SLOTS)
            stabs.append(Stabilizer(kind, (i, j), members))
    # X stabilizers first; row-major within a kind
    stabs.sort(key=lambda s: (s.kind != "X", s.syndrome))
    return CodeLayout(d, boundary, data, tuple(stabs))


def logical_operator_specs(layout: CodeLayout) -> list[LogicalOperatorSpec]:
    d = layout.distance
    col0 = frozenset((i, 0) for i in range(0, 2 * d - 1, 2))
    row0 = frozenset((0, j) for j in range(0, 2 * d - 1, 2))
    if not layout.cyclic:
        return [
            LogicalOperatorSpec("X", "X", col0, "top-bottom"),
            LogicalOperatorSpec("Z", "Z", row0, "left-right"),
        ]
    row1 = frozenset((1, j) for j in range(1, 2 * d, 2))
    col1 = frozenset((i, 1) for i in range(1, 2 * d, 2))
    return [
        LogicalOperatorSpec("X1", "X", col0, "top-bottom"),
        LogicalOperatorSpec("Z1", "Z", row0, "left-right"),
        LogicalOperatorSpec("X2", "X", row1, "left-right"),
        LogicalOperatorSpec("Z2", "Z", col1, "top-bottom"),
    ]


def conjugate_label(label: str) -> str:
    """X <-> Z partner with the same index (X1 <-> Z1, ...)."""
    return ("Z" if label[0] == "X" else "X") + label[1:]


def error_classes(layout: CodeLayout, sector: str) -> list[str]:
    """Logical error classes decoded from detection events of ``sector``.

    X-stabilizer events expose Z errors, so the X sector reports the Z classes.
    """
    want = "Z" if sector == "X" else "X"
    return [s.label for s in logical_operator_specs(layout) if s.pauli == want]


def detecting_support(layout: CodeLayout, label: str) -> frozenset[Coord]:
    """Support whose frame parity reveals a logical error of class ``label``."""
    partner = conjugate_label(label)
    for spec in logical_operator_specs(layout):
        if spec.label == partner:
            return spec.support
    raise KeyError(label)


def check_commutation(layout: CodeLayout) -> list[tuple[Coord, Coord]]:
    """Return (X syndrome, Z syndrome) pairs whose supports overlap oddly."""
    violations = []
    zs = layout.stabilizers_of("Z")
    for xs in layout.stabilizers_of("X"):
        for z in zs:
            if len(xs.support & z.support) % 2:
                violations.append((xs.syndrome, z.syndrome))
    return violations


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    ncols = m.shape[1] if m.ndim == 2 else 0
    for col in range(ncols):
        pivot = np.nonzero(m[rank:, col])[0]
        if pivot.size == 0:
            continue
        r = rank + pivot[0]
        m[[rank, r]] = m[[r, rank]]
        others = np.nonzero(m[:, col])[0]
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def is_stabilizer_product(layout: CodeLayout, pauli: str, support: frozenset[Coord]) -> bool:
    """Brute-force span check of ``support`` against same-type stabilizers."""
    index = {q: k for k, q in enumerate(layout.data_qubits)}
    stabs = layout.stabilizers_of(pauli)
    rows = np.zeros((len(stabs), len(index)), dtype=np.uint8)
    for r, s in enumerate(stabs):
        for q in s.support:
            rows[r, index[q]] = 1
    vec = np.zeros((1, len(index)), dtype=np.uint8)
    for q in support:
        vec[0, index[q]] = 1
    return gf2_rank(np.vstack([rows, vec])) == gf2_rank(rows)
