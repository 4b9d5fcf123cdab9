import math
from fractions import Fraction

import pytest

from nestlab.analytics import (
    EPS_COEFF,
    EPS_LIMIT,
    TABLE1,
    AsymptoteSpec,
    DivergenceError,
    UnsupportedDistance,
    binomial_tail,
    bound_prefactor,
    central_binomial,
    check_table1,
    cyclic_prefactor,
    discrepancy_ratio,
    eq1_cyclic_asymptote,
    eq1_prefactor,
    path_failure_bound,
    power_law_curve,
    table_prefactor,
    total_upper_bound,
)


@pytest.mark.parametrize("d, expect", [(2, 2), (4, 12), (6, 60), (8, 280), (10, 1260)])
def test_eq1_prefactor(d, expect):
    assert eq1_prefactor(d) == expect


def test_eq1_d2_is_twice_eps():
    assert eq1_cyclic_asymptote(2, 0.013) == pytest.approx(0.026)


def test_cyclic_prefactor_d4():
    assert cyclic_prefactor(4, 4.8) == pytest.approx(276.48)


def test_cyclic_prefactor_d10():
    assert cyclic_prefactor(10, 3.2) == pytest.approx(4.23e5, rel=5e-3)


@pytest.mark.parametrize("d", [3, 5, 0, -2])
def test_odd_or_small_d_rejected(d):
    with pytest.raises(UnsupportedDistance):
        eq1_prefactor(d)
    with pytest.raises(UnsupportedDistance):
        total_upper_bound(d, 1e-4)


def test_central_binomial_large_matches_exact():
    assert central_binomial(80) == pytest.approx(math.comb(80, 40), rel=1e-10)
    assert eq1_prefactor(80) == pytest.approx(40 * math.comb(80, 40), rel=1e-10)


@pytest.mark.parametrize("A, d, p, expect", [
    (276.0, 4, 1e-3, 2.76e-4),
    (397.0, 4, 5e-4, 9.925e-5),
    (1.0, 6, 0.1, 1e-3),
])
def test_power_law_curve(A, d, p, expect):
    assert power_law_curve(A, d, p) == pytest.approx(expect)


def test_power_law_validation():
    with pytest.raises(ValueError):
        power_law_curve(0.0, 4, 1e-3)
    with pytest.raises(ValueError):
        power_law_curve(1.0, 4, 1.5)


def test_table1_reproduced():
    rows = check_table1()
    assert len(rows) == 2 * len(TABLE1)
    assert all(r["ok"] for r in rows), [r for r in rows if not r["ok"]]


def test_table_prefactor_partners():
    assert table_prefactor(6, "Z2") == TABLE1[6]["X1"]
    assert table_prefactor(6, "X2") == TABLE1[6]["Z1"]


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.4])
@pytest.mark.parametrize("m", range(1, 13))
def test_path_bound_dominates_binomial_tail(m, eps):
    assert path_failure_bound(m, eps) >= binomial_tail(m, eps)


def test_path_bound_validation():
    with pytest.raises(ValueError):
        path_failure_bound(0, 0.1)
    with pytest.raises(ValueError):
        path_failure_bound(4, 0.7)


def _bound_oracle(d: int, eps: Fraction) -> Fraction:
    # geometric series over path lengths d, d+2, ... written out with exact arithmetic
    lead = Fraction(44 * d * 22 ** d, 121) * eps ** (d // 2)
    x = 484 * eps
    return lead * (1 + x / (1 - x))


def test_total_bound_value():
    got = total_upper_bound(4, 1e-4)
    # 176 * 22^4 / 121 * eps^2, times 1 + 0.0484 / 0.9516
    exact = Fraction(176 * 1936, 10**8) * (1 + Fraction(484, 10**4) / (1 - Fraction(484, 10**4)))
    assert got == pytest.approx(float(exact), rel=1e-6)
    assert got == pytest.approx(3.581e-3, rel=1e-3)
    assert got == pytest.approx(float(_bound_oracle(4, Fraction(1, 10_000))), rel=1e-12)


@pytest.mark.parametrize("d", [2, 4, 6, 8])
@pytest.mark.parametrize("eps", [1e-6, 1e-5, 1e-4, 1e-3])
def test_total_bound_matches_exact(d, eps):
    assert total_upper_bound(d, eps) == pytest.approx(float(_bound_oracle(d, Fraction(eps))), rel=1e-12)


def test_factor_two_at_half_limit():
    eps = 1 / 968
    assert total_upper_bound(4, eps) / bound_prefactor(4, eps) == pytest.approx(2.0)


@pytest.mark.parametrize("eps", [EPS_LIMIT, 0.01, 0.5])
def test_divergence(eps):
    with pytest.raises(DivergenceError):
        total_upper_bound(4, eps)


def test_negative_eps_rejected():
    with pytest.raises(ValueError):
        total_upper_bound(4, -1e-5)


@pytest.mark.parametrize("d", [4, 6, 8, 10])
@pytest.mark.parametrize("p", [1e-6, 1e-5])
def test_bound_dominates_asymptote(d, p):
    eps = EPS_COEFF["Z1"] * p
    assert total_upper_bound(d, eps) > eq1_cyclic_asymptote(d, eps)


def test_discrepancy_grows_with_d():
    for planar, cyc in (("X", "Z2"), ("Z", "X2")):
        ratios = [discrepancy_ratio(d, planar, cyc) for d in sorted(TABLE1)]
        assert ratios == sorted(ratios)
    assert discrepancy_ratio(10, "X", "Z2") == pytest.approx(69.27, abs=0.01)
    assert discrepancy_ratio(10, "Z", "X2") == pytest.approx(13.02, abs=0.01)


def test_asymptote_spec_validation():
    AsymptoteSpec(4, 4.8)
    with pytest.raises(UnsupportedDistance):
        AsymptoteSpec(5, 4.8)
    with pytest.raises(ValueError):
        AsymptoteSpec(4, 0.0)
