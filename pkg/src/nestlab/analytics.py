"""Closed-form low-p asymptotes and the stick-path upper bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

# published low-p prefactors A in p_L = A p^(d/2), keyed by distance
TABLE1: dict[int, dict[str, float]] = {
    4: {"X": 3.97e2, "Z": 4.70e2, "X1": 1.23e2, "Z1": 2.76e2},
    6: {"X": 1.67e4, "Z": 2.09e4, "X1": 1.97e3, "Z1": 6.64e3},
    8: {"X": 7.02e5, "Z": 9.34e5, "X1": 2.94e4, "Z1": 1.49e5},
    10: {"X": 2.93e7, "Z": 4.18e7, "X1": 4.23e5, "Z1": 3.21e6},
}

# stick probability per unit p along the cheapest nontrivial cycles
EPS_COEFF = {"Z1": 4.8, "X2": 4.8, "X1": 3.2, "Z2": 3.2}
# by symmetry the second cyclic qubit mirrors the first
CYCLIC_PARTNER = {"X2": "Z1", "Z2": "X1"}

MAX_STICKS_PER_NODE = 12
BRANCHING = MAX_STICKS_PER_NODE - 1
EPS_LIMIT = 1 / 484
EXACT_BINOMIAL_LIMIT = 60


class DivergenceError(ValueError):
    pass


class UnsupportedDistance(ValueError):
    pass


@dataclass(frozen=True)
class AsymptoteSpec:
    d: int
    eps_coeff: float
    A: float | None = None

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise UnsupportedDistance("d must be even and >= 2")
        if self.eps_coeff <= 0:
            raise ValueError("eps_coeff must be positive")


def central_binomial(d: int) -> float:
    if d <= EXACT_BINOMIAL_LIMIT:
        return float(math.comb(d, d // 2))
    return math.exp(math.lgamma(d + 1) - 2 * math.lgamma(d // 2 + 1))


def _check_even(d: int) -> None:
    if d < 2 or d % 2:
        raise UnsupportedDistance(f"even d >= 2 required, got {d}")


def eq1_prefactor(d: int) -> float:
    """(1/2) d C(d, d/2): ways to fail half of one of the d cheapest cycles."""
    _check_even(d)
    if d <= EXACT_BINOMIAL_LIMIT:
        return d * math.comb(d, d // 2) / 2
    return 0.5 * d * central_binomial(d)


def eq1_cyclic_asymptote(d: int, eps: float) -> float:
    _check_even(d)
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    return eq1_prefactor(d) * eps ** (d // 2)


def cyclic_prefactor(d: int, eps_coeff: float) -> float:
    """A such that the cyclic asymptote reads A p^(d/2) when eps = eps_coeff * p."""
    return eq1_prefactor(d) * eps_coeff ** (d // 2)


def power_law_curve(A: float, d: int, p: float) -> float:
    if A <= 0:
        raise ValueError("A must be positive")
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    return A * p ** (d / 2)


def table_prefactor(d: int, label: str) -> float:
    """Published prefactor; X2/Z2 come from their symmetric partners."""
    label = CYCLIC_PARTNER.get(label, label)
    return TABLE1[d][label]


def path_failure_bound(m: int, eps: float) -> float:
    """2^m eps^ceil(m/2): bound on half of an m-stick path failing."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 0.5]")
    return 2.0 ** m * eps ** math.ceil(m / 2)


def binomial_tail(m: int, eps: float) -> float:
    """Exact probability that at least ceil(m/2) of m sticks fail."""
    return sum(math.comb(m, i) * eps ** i * (1 - eps) ** (m - i) for i in range(math.ceil(m / 2), m + 1))


def bound_prefactor(d: int, eps: float) -> float:
    """B = 44 d 22^d / 121 * eps^(d/2), the leading term of the path sum."""
    _check_even(d)
    return 44 * d * 22.0 ** d / 121 * eps ** (d // 2)


def total_upper_bound(d: int, eps: float) -> float:
    _check_even(d)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps >= EPS_LIMIT:
        raise DivergenceError(f"path sum diverges for eps >= 1/484 (got {eps})")
    x = 484 * eps
    return bound_prefactor(d, eps) * (1 + x / (1 - x))


def check_table1(tol: float = 5e-3) -> list[dict]:
    """Cyclic prefactors from the cycle-counting formula versus the table."""
    rows = []
    for d in sorted(TABLE1):
        for label in ("X1", "Z1"):
            ours = cyclic_prefactor(d, EPS_COEFF[label])
            ref = TABLE1[d][label]
            rel = abs(ours - ref) / ref
            rows.append({"d": d, "class": label, "computed": ours, "table": ref, "rel_dev": rel, "ok": rel <= tol})
    return rows


def discrepancy_ratio(d: int, planar: str, cyclic: str) -> float:
    """Planar over cyclic prefactor at distance d."""
    return table_prefactor(d, planar) / table_prefactor(d, cyclic)
