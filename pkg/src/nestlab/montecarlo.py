"""Sampling, decoding and per-round logical error rate estimation.

A block starts from a clean code state, runs ``R`` noisy rounds, and ends
with one noiseless readout round.  Every single fault's detection events and
logical flips are precomputed once (:mod:`nestlab.frames`), so a sampled
block is just the XOR of a handful of table rows.  Decoding results are
cached per event set.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from statistics import NormalDist
from typing import Optional

import numpy as np

from .circuit import FaultLocation, RoundSchedule, build_round_schedule
from .decoder import build_matching_graph, mwpm
from .frames import FaultEffects, compute_effects
from .lattice import Boundary, build_layout
from .nest import build_nest

Z95 = NormalDist().inv_cdf(0.975)
SMALL_RATE_LIMIT = 0.1


@dataclass(frozen=True)
class TrialConfig:
    distance: int
    boundary: str
    p: float
    trials: int
    seed: int = 0
    rounds: Optional[int] = None  # R; defaults to 2d
    sectors: str = "both"
    chunk: int = 10_000
    target_failures: Optional[int] = None
    target_class: Optional[str] = None

    def __post_init__(self):
        if self.distance < 2:
            raise ValueError("distance must be >= 2")
        Boundary(self.boundary)
        if not 0 <= self.p < 0.5:
            raise ValueError("p must lie in [0, 0.5)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.rounds is not None and self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.sectors not in ("X", "Z", "both"):
            raise ValueError("sectors must be X, Z or both")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")

    @property
    def R(self) -> int:
        return self.rounds if self.rounds is not None else 2 * self.distance

    @property
    def sector_list(self) -> tuple[str, ...]:
        return ("X", "Z") if self.sectors == "both" else (self.sectors,)


@dataclass(frozen=True)
class ClassRate:
    label: str
    failures: int
    trials: int
    rounds: int
    per_round_rate: float
    ci_low: float
    ci_high: float

    @property
    def block_fraction(self) -> float:
        return self.failures / self.trials


@dataclass(frozen=True)
class RateEstimate:
    config: TrialConfig
    classes: dict[str, ClassRate]
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, label: str) -> ClassRate:
        return self.classes[label]


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # keep the point estimate inside despite rounding
    return min(lo, phat), max(hi, phat)


def per_round(f: float, R: int) -> float:
    """Block failure fraction to per-round rate."""
    if f < SMALL_RATE_LIMIT:
        return f / R
    if f >= 0.5:
        return 0.5
    return (1 - (1 - 2 * f) ** (1 / R)) / 2


class Sampler:
    """Precomputed fault table plus one decoding graph per sector."""

    def __init__(self, distance: int, boundary: str, rounds: int, p: float, sectors=("X", "Z")):
        self.layout = build_layout(distance, Boundary(boundary))
        self.schedule = build_round_schedule(self.layout)
        self.rounds = rounds
        self.p = p
        self.effects: FaultEffects = compute_effects(self.schedule, rounds)
        self.sectors = tuple(sectors)
        self.graphs = {}
        self.nodes = {}
        self.classes: list[str] = []
        self.class_slot = {}
        for s in self.sectors:
            se = self.effects.sectors[s]
            if p > 0:
                nest = build_nest(self.schedule, rounds, p, s, closed=True, strict=False, effects=self.effects)
                self.graphs[s] = build_matching_graph(nest)
            self.nodes[s] = [
                (site[0], site[1], t) for site, t in (se.decode_index(v) for v in range(se.n_sites * (rounds + 1)))
            ]
            for c, label in enumerate(se.classes):
                self.class_slot[label] = (s, c)
                self.classes.append(label)
        # per fault row: event index tuples and flip masks per sector
        self.row_events = {}
        self.row_flips = {}
        for s in self.sectors:
            se = self.effects.sectors[s]
            ip, ix = se.indptr, se.indices
            self.row_events[s] = [tuple(ix[ip[k]:ip[k + 1]].tolist()) for k in range(self.effects.n_faults)]
            weights = 1 << np.arange(se.flips.shape[1], dtype=np.int64)
            self.row_flips[s] = (se.flips.astype(np.int64) @ weights).tolist()
        self.n_labels = np.diff(self.effects.loc_ptr)
        self._cache: dict[tuple, dict[tuple, int]] = {s: {} for s in self.sectors}
        self._event_index = {id(e): k for k, e in enumerate(self.schedule.noisy_events())}

    @property
    def n_locations(self) -> int:
        return self.effects.n_locations

    def correction(self, sector: str, events: tuple[int, ...]) -> int:
        cache = self._cache[sector]
        hit = cache.get(events)
        if hit is None:
            nodes = self.nodes[sector]
            m = mwpm(self.graphs[sector], [nodes[v] for v in events], method="auto")
            hit = sum(b << k for k, b in enumerate(m.logical_flips))
            cache[events] = hit
        return hit

    def failure_masks(self, rows) -> dict[str, int]:
        """Residual logical parity per sector for one block's fault rows."""
        out = {}
        for s in self.sectors:
            evs = self.row_events[s]
            fl = self.row_flips[s]
            if len(rows) == 1:
                key = evs[rows[0]]
                true = fl[rows[0]]
            else:
                odd: set[int] = set()
                true = 0
                for r in rows:
                    odd.symmetric_difference_update(evs[r])
                    true ^= fl[r]
                key = tuple(sorted(odd))
            out[s] = true ^ (self.correction(s, key) if key else 0)
        return out

    def rows_of(self, faults: list[FaultLocation]) -> list[int]:
        per_round = len(self._event_index)
        rows = []
        for f in faults:
            loc = f.round * per_round + self._event_index[id(f.event)]
            rows.append(int(self.effects.loc_ptr[loc]) + f.event.labels.index(f.pauli))
        return rows

    def decode_faults(self, faults: list[FaultLocation]) -> dict[str, bool]:
        """Failure flag per logical class for an explicit fault set."""
        masks = self.failure_masks(self.rows_of(faults)) if faults else {s: 0 for s in self.sectors}
        return {label: bool((masks[s] >> c) & 1) for label, (s, c) in self.class_slot.items()}

    def sample_rows(self, n: int, rng: np.random.Generator) -> list[list[int]]:
        """Fault rows for ``n`` blocks.  Each location fails with probability p."""
        L = self.n_locations
        counts = rng.binomial(L, self.p, size=n)
        total = int(counts.sum())
        out: list[list[int]] = [[] for _ in range(n)]
        if total == 0:
            return out
        locs = rng.integers(0, L, size=total)
        u = rng.random(total)
        start = 0
        for b in np.nonzero(counts)[0]:
            k = int(counts[b])
            sel = locs[start:start + k]
            if k > 1 and len(set(sel.tolist())) < k:
                sel = rng.choice(L, size=k, replace=False)
            lab = (u[start:start + k] * self.n_labels[sel]).astype(np.int64)
            out[b] = (self.effects.loc_ptr[sel] + lab).tolist()
            start += k
        return out

    def run_chunk(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Failure counts per class (in ``self.classes`` order) over n blocks."""
        fails = np.zeros(len(self.classes), dtype=np.int64)
        slots = [self.class_slot[c] for c in self.classes]
        for rows in self.sample_rows(n, rng):
            if not rows:
                continue
            masks = self.failure_masks(rows)
            for k, (s, c) in enumerate(slots):
                if (masks[s] >> c) & 1:
                    fails[k] += 1
        return fails


@lru_cache(maxsize=8)
def get_sampler(distance: int, boundary: str, rounds: int, p: float, sectors: tuple[str, ...]) -> Sampler:
    return Sampler(distance, boundary, rounds, p, sectors)


def _sampler_for(config: TrialConfig) -> Sampler:
    return get_sampler(config.distance, Boundary(config.boundary).value, config.R, config.p, config.sector_list)


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for chunk ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _run_chunk_job(config: TrialConfig, index: int, n: int) -> np.ndarray:
    return _sampler_for(config).run_chunk(n, chunk_rng(config.seed, index))


def sample_faults(schedule: RoundSchedule, rounds: int, p: float, rng: np.random.Generator) -> list[FaultLocation]:
    """Independently realize every fault location; labels are uniform given a fault."""
    events = schedule.noisy_events()
    hits = rng.random((rounds, len(events))) < p
    out = []
    for r, k in zip(*np.nonzero(hits)):
        e = events[k]
        lab = e.labels[int(rng.integers(len(e.labels)))]
        out.append(FaultLocation(int(r), e, lab, p))
    return out


@lru_cache(maxsize=8)
def _effects_for(schedule: RoundSchedule, rounds: int) -> FaultEffects:
    return compute_effects(schedule, rounds)


def extract_detection_events(
    schedule: RoundSchedule, faults: list[FaultLocation], rounds: int
) -> dict[str, list[tuple[int, int, int]]]:
    """Joint detection events of a fault set, per sector.

    The first round is compared against the clean initial state and the
    window is closed by a noiseless readout round at ``t = 2 * rounds``.
    """
    eff = _effects_for(schedule, rounds)
    events = schedule.noisy_events()
    pos = {id(e): k for k, e in enumerate(events)}
    rows = [
        int(eff.loc_ptr[f.round * len(events) + pos[id(f.event)]]) + f.event.labels.index(f.pauli)
        for f in faults
    ]
    out = {}
    for s, se in eff.sectors.items():
        odd: set[int] = set()
        for r in rows:
            odd.symmetric_difference_update(se.events_of(r).tolist())
        out[s] = sorted(
            (site[0], site[1], t) for site, t in (se.decode_index(v) for v in odd)
        )
    return out


def run_block_trial(config: TrialConfig, rng: np.random.Generator) -> dict[str, bool]:
    sampler = _sampler_for(config)
    rows = sampler.sample_rows(1, rng)[0]
    masks = sampler.failure_masks(rows) if rows else {s: 0 for s in sampler.sectors}
    return {label: bool((masks[s] >> c) & 1) for label, (s, c) in sampler.class_slot.items()}


def summarize(config: TrialConfig, labels: list[str], fails: np.ndarray, trials: int) -> RateEstimate:
    R = config.R
    classes = {}
    for label, k in zip(labels, fails.tolist()):
        lo, hi = wilson_interval(k, trials)
        classes[label] = ClassRate(label, k, trials, R, per_round(k / trials, R), per_round(lo, R), per_round(hi, R))
    meta = {
        "window": f"{R} noisy rounds + 1 noiseless readout round, clean start",
        "rate_conversion": f"f/R below f={SMALL_RATE_LIMIT}, else (1-(1-2f)^(1/R))/2",
        "interval": "Wilson 95%",
        "config": asdict(config),
    }
    return RateEstimate(config, classes, meta)


def estimate_rates(config: TrialConfig, threads: int = 1) -> RateEstimate:
    """Run block trials in fixed-size chunks with per-chunk RNG streams.

    Results depend only on the config (including ``chunk``), never on the
    thread count.  With ``target_failures`` set, chunks are consumed in
    order until the target class (default: every class) reaches the target
    or ``trials`` blocks have run.
    """
    sampler = _sampler_for(config)
    labels = list(sampler.classes)
    if config.target_class is not None and config.target_class not in labels:
        raise ValueError(f"target_class {config.target_class!r} not among {labels}")
    fails = np.zeros(len(labels), dtype=np.int64)
    if config.p == 0:
        return summarize(config, labels, fails, config.trials)

    sizes = []
    left = config.trials
    while left > 0:
        sizes.append(min(config.chunk, left))
        left -= sizes[-1]

    def reached() -> bool:
        if config.target_failures is None:
            return False
        if config.target_class is not None:
            return fails[labels.index(config.target_class)] >= config.target_failures
        return bool(np.all(fails >= config.target_failures))

    done = 0
    threads = max(1, int(threads))
    if threads == 1:
        for idx, n in enumerate(sizes):
            fails += sampler.run_chunk(n, chunk_rng(config.seed, idx))
            done += n
            if reached():
                break
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for base in range(0, len(sizes), threads):
                batch = list(range(base, min(base + threads, len(sizes))))
                results = list(pool.map(_run_chunk_job, [config] * len(batch), batch, [sizes[i] for i in batch]))
                for idx, res in zip(batch, results):
                    fails += res
                    done += sizes[idx]
                    if reached():
                        break
                if reached():
                    break
    return summarize(config, labels, fails, done)


def default_threads() -> int:
    env = os.environ.get("NESTLAB_THREADS")
    return int(env) if env else 1
