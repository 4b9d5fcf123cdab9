"""Batch Pauli-frame propagation of single faults.

Every (location, label) pair gets one column in a pair of boolean frame
arrays of shape ``(n_qubits, n_faults)``.  The whole batch is pushed through
``rounds`` noisy rounds followed by one noiseless round, and the measured
syndrome flips are turned into detection events by differencing consecutive
rounds.  Since the circuit is Clifford and the noise is Pauli, the effect of
any fault set is the XOR of the columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import RoundSchedule, label_bits
from .lattice import CodeLayout, Coord, detecting_support, error_classes


@dataclass(frozen=True)
class SectorEffects:
    sector: str
    sites: tuple[Coord, ...]
    classes: tuple[str, ...]
    # CSR: events of fault k are indices[indptr[k]:indptr[k+1]], each layer * n_sites + site
    indptr: np.ndarray
    indices: np.ndarray
    flips: np.ndarray  # (n_faults, n_classes) uint8

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def events_of(self, k: int) -> np.ndarray:
        return self.indices[self.indptr[k]:self.indptr[k + 1]]

    def decode_index(self, idx: int) -> tuple[Coord, int]:
        layer, s = divmod(int(idx), self.n_sites)
        return self.sites[s], 2 * layer


@dataclass(frozen=True)
class FaultEffects:
    schedule: RoundSchedule
    rounds: int
    fault_round: np.ndarray  # (n_faults,)
    fault_event: np.ndarray  # index into schedule.noisy_events()
    fault_label: tuple[str, ...]
    weight: np.ndarray  # probability per unit p, 1 / n_labels
    loc_ptr: np.ndarray  # faults of location l are loc_ptr[l]:loc_ptr[l+1]
    sectors: dict[str, SectorEffects]

    @property
    def n_faults(self) -> int:
        return len(self.fault_label)

    @property
    def n_locations(self) -> int:
        return len(self.loc_ptr) - 1

    @property
    def layers(self) -> int:
        return self.rounds + 1


def qubit_order(layout: CodeLayout) -> list[Coord]:
    return list(layout.data_qubits) + [s.syndrome for s in layout.stabilizers]


def compute_effects(schedule: RoundSchedule, rounds: int) -> FaultEffects:
    """Propagate every single fault of a ``rounds``-round window."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    layout = schedule.layout
    qubits = qubit_order(layout)
    qidx = {q: k for k, q in enumerate(qubits)}
    nq = len(qubits)
    events = schedule.noisy_events()
    ev_pos = {id(e): k for k, e in enumerate(events)}

    # one round's worth of faults, grouped per step
    per_round_event, per_round_label, per_round_weight = [], [], []
    inject: dict[int, list[tuple[int, int, int, int]]] = {}
    for e in events:
        labels = e.labels
        for lab in labels:
            row = len(per_round_label)
            per_round_event.append(ev_pos[id(e)])
            per_round_label.append(lab)
            per_round_weight.append(1.0 / len(labels))
            for q, xb, zb in label_bits(e, lab):
                inject.setdefault(e.step, []).append((row, qidx[q], xb, zb))
    per_round = len(per_round_label)
    nf = per_round * rounds

    inj = {}
    for step, entries in inject.items():
        a = np.array(entries, dtype=np.int64)
        inj[step] = (a[:, 0], a[:, 1], a[:, 2].astype(bool), a[:, 3].astype(bool))

    gates = []
    for st in schedule.steps:
        init = np.array([qidx[e.site] for e in st if e.kind == "init_zero"], dtype=np.int64)
        had = np.array([qidx[e.site] for e in st if e.kind == "hadamard"], dtype=np.int64)
        ctl = np.array([qidx[e.control] for e in st if e.kind == "cx"], dtype=np.int64)
        tgt = np.array([qidx[e.target] for e in st if e.kind == "cx"], dtype=np.int64)
        gates.append((init, had, ctl, tgt))

    fx = np.zeros((nq, nf), dtype=bool)
    fz = np.zeros((nq, nf), dtype=bool)
    sector_sites = {k: [qidx[s] for s in layout.syndrome_sites(k)] for k in ("X", "Z")}
    meas = {k: np.zeros((rounds + 1, len(v), nf), dtype=bool) for k, v in sector_sites.items()}

    for r in range(rounds + 1):
        for step, (init, had, ctl, tgt) in enumerate(gates):
            if init.size:
                fx[init] = False
                fz[init] = False
            if had.size:
                tmp = fx[had].copy()
                fx[had] = fz[had]
                fz[had] = tmp
            if ctl.size:
                fx[tgt] ^= fx[ctl]
                fz[ctl] ^= fz[tgt]
            if r < rounds and step in inj:
                rows, qs, xb, zb = inj[step]
                rows = rows + r * per_round
                fx[qs[xb], rows[xb]] ^= True
                fz[qs[zb], rows[zb]] ^= True
            if step == len(gates) - 1:
                for k, idx in sector_sites.items():
                    meas[k][r] = fx[idx]

    sectors = {}
    for k, m in meas.items():
        det = m.copy()
        det[1:] ^= m[:-1]
        n_sites = det.shape[1]
        flat = det.reshape((rounds + 1) * n_sites, nf).T  # (nf, layers * sites)
        fault_ids, indices = np.nonzero(flat)
        indptr = np.zeros(nf + 1, dtype=np.int64)
        np.add.at(indptr, fault_ids + 1, 1)
        indptr = np.cumsum(indptr)

        classes = tuple(error_classes(layout, k))
        flips = np.zeros((nf, len(classes)), dtype=np.uint8)
        for c, label in enumerate(classes):
            frame = fz if label[0] == "Z" else fx
            support = [qidx[q] for q in detecting_support(layout, label)]
            flips[:, c] = np.bitwise_xor.reduce(frame[support], axis=0)
        sectors[k] = SectorEffects(
            k, tuple(layout.syndrome_sites(k)), classes, indptr, indices.astype(np.int64), flips
        )

    # one location = one noisy event in one round
    loc_sizes = np.array([len(e.labels) for e in events] * rounds, dtype=np.int64)
    loc_ptr = np.concatenate([[0], np.cumsum(loc_sizes)])
    return FaultEffects(
        schedule=schedule,
        rounds=rounds,
        fault_round=np.repeat(np.arange(rounds), per_round),
        fault_event=np.tile(np.array(per_round_event, dtype=np.int64), rounds),
        fault_label=tuple(per_round_label) * rounds,
        weight=np.tile(np.array(per_round_weight), rounds),
        loc_ptr=loc_ptr,
        sectors=sectors,
    )
