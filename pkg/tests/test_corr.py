import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import stats

from episignal.corr import (CorrelationError, Strength, align_with_lag, classify_strength,
                            lag_scan, pearson, trend_test)

D0 = dt.date(2020, 3, 1)


def by_date(values, start=D0):
    return {start + dt.timedelta(days=i): float(v) for i, v in enumerate(values)}


# -- alignment -----------------------------------------------------------------


def test_lag_zero_is_pointwise():
    x, y, ds = align_with_lag(by_date([1, 2, 3, 4]), by_date([5, 6, 7, 8]), 0)
    assert x == [1, 2, 3, 4] and y == [5, 6, 7, 8] and ds[0] == D0


def test_negative_lag_pairs_earlier_volume():
    cases = by_date(range(20))
    volume = by_date(range(100, 120))
    x, y, ds = align_with_lag(cases, volume, -5)
    i = ds.index(dt.date(2020, 3, 10))
    assert x[i] == cases[dt.date(2020, 3, 10)]
    assert y[i] == volume[dt.date(2020, 3, 5)]


def test_no_overlap_is_an_error():
    with pytest.raises(CorrelationError, match="insufficient overlap"):
        align_with_lag(by_date(range(10)), by_date(range(10)), -20)


def test_period_restricts_case_dates_only():
    cases, volume = by_date(range(30)), by_date(range(30))
    period = (D0 + dt.timedelta(days=10), D0 + dt.timedelta(days=15))
    x, y, ds = align_with_lag(cases, volume, -5, period)
    assert x == [10, 11, 12, 13, 14] and y == [5, 6, 7, 8, 9]


# -- pearson -------------------------------------------------------------------


@pytest.mark.parametrize("y, r", [([2, 4, 6], 1.0), ([3, 2, 1], -1.0)])
def test_exact_linearity(y, r):
    assert pearson([1, 2, 3], y)[0] == pytest.approx(r, abs=1e-12)


def test_hand_evaluated_example():
    # dx = [-2,-1,0,1,2], dy = [-1,-2,1,0,2]: sum dx*dy = 8, sxx = syy = 10
    r, p = pearson([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
    assert r == pytest.approx(0.8, abs=1e-12)
    assert p == pytest.approx(stats.pearsonr([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])[1], abs=1e-12)


def test_constant_series_has_zero_variance():
    with pytest.raises(CorrelationError, match="zero variance"):
        pearson([1, 1, 1, 1], [1, 2, 3, 4])


def test_p_values_match_reference_on_random_inputs():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(3, 60))
        x = rng.normal(size=n)
        y = 0.5 * x + rng.normal(size=n)
        r, p = pearson(x, y)
        ref = stats.pearsonr(x, y)
        assert r == pytest.approx(ref[0], abs=1e-9)
        assert p == pytest.approx(ref[1], abs=1e-6)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=30),
       st.floats(0.1, 10), st.floats(-100, 100))
def test_symmetry_affine_and_sign(pairs, a, b):
    x = np.array([u for u, _ in pairs])
    y = np.array([v for _, v in pairs])
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    r, p = pearson(x, y)
    r2, p2 = pearson(y, x)
    assert r2 == pytest.approx(r, abs=1e-9) and p2 == pytest.approx(p, abs=1e-9)
    r3, _ = pearson(a * x + b, y)
    assert r3 == pytest.approx(r, abs=1e-6)
    r4, p4 = pearson(-x, y)
    assert r4 == pytest.approx(-r, abs=1e-9) and p4 == pytest.approx(p, abs=1e-9)


# -- strength classes ----------------------------------------------------------


@pytest.mark.parametrize("r, p, cls", [
    (0.85, 0.01, Strength.STRONG),
    (0.5, 0.01, Strength.MODERATE),
    (0.9, 0.2, Strength.NOT_SIGNIFICANT),
    (0.8, 0.01, Strength.MODERATE),
    (0.3, 0.01, Strength.WEAK),
    (-0.903, 0.01, Strength.STRONG),
    (0.1, 0.05, Strength.NOT_SIGNIFICANT),
])
def test_strength_examples(r, p, cls):
    assert classify_strength(r, p) is cls


@given(st.floats(-1, 1), st.floats(0, 1))
def test_strength_is_a_partition(r, p):
    a = abs(r)
    expected = [p < 0.05 and a > 0.8, p < 0.05 and 0.3 < a <= 0.8, p < 0.05 and a <= 0.3,
                p >= 0.05]
    assert sum(expected) == 1
    names = [Strength.STRONG, Strength.MODERATE, Strength.WEAK, Strength.NOT_SIGNIFICANT]
    assert classify_strength(r, p) is names[expected.index(True)]


# -- lag scan ------------------------------------------------------------------


def test_exact_shift_is_found():
    rng = np.random.default_rng(3)
    base = rng.uniform(10, 100, 60)
    cases = by_date(base)
    volume = by_date(base, D0 - dt.timedelta(days=5))  # volume[d - 5] == cases[d]
    scan = lag_scan(cases, volume)
    assert scan.best_lead == -5
    assert scan.at(-5).r == pytest.approx(1.0, abs=1e-12)


def test_noise_has_no_significant_lead():
    rng = np.random.default_rng(20)
    cases, volume = by_date(rng.normal(size=40)), by_date(rng.normal(size=40))
    scan = lag_scan(cases, volume)
    for c in scan.results:
        x, y, _ = align_with_lag(cases, volume, c.lag)
        assert stats.pearsonr(x, y)[1] >= 0.05
    assert scan.best_lead is None


def test_lag_zero_equals_plain_pearson():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=25), rng.normal(size=25)
    scan = lag_scan(by_date(a), by_date(b))
    r, p = pearson(a, b)
    assert (scan.at(0).r, scan.at(0).p, scan.at(0).n) == (r, p, 25)


def test_short_overlap_lags_are_skipped():
    scan = lag_scan(by_date(range(8)), by_date([1, 5, 2, 8, 3, 9, 4, 7]), lags=range(-10, 1))
    assert set(scan.skipped) == {-10, -9, -8, -7, -6}
    assert [c.lag for c in scan.results] == [-5, -4, -3, -2, -1, 0]


def test_ties_prefer_smaller_absolute_lag():
    base = [1, 3, 2, 5, 4, 6, 8, 7, 9, 10]
    # period-10 series: lags -10, 0 and 10 all give r = 1
    cases = by_date(base * 3)
    volume = by_date(base * 3)
    scan = lag_scan(cases, volume, lags=[-10, 0, 10])
    assert scan.best_lead == 0


# -- Mann-Kendall --------------------------------------------------------------


def mann_kendall_oracle(x):
    n = len(x)
    s = sum((x[j] > x[i]) - (x[j] < x[i]) for i in range(n) for j in range(i + 1, n))
    groups = {}
    for v in x:
        groups[v] = groups.get(v, 0) + 1
    var = (n * (n - 1) * (2 * n + 5) - sum(t * (t - 1) * (2 * t + 5) for t in groups.values())) / 18
    if s == 0 or var == 0:
        return s, 1.0
    z = (s - math.copysign(1, s)) / math.sqrt(var)
    return s, 2 * stats.norm.sf(abs(z))


def test_increasing_series_trends_up():
    direction, p = trend_test(list(range(1, 21)))
    assert direction == "up" and p < 0.001


def test_constant_series_has_no_trend():
    assert trend_test([4.0] * 12) == ("none", 1.0)


def test_alternating_example():
    x = [5, 3, 6, 2, 7, 1, 8, 0, 9]
    s, p_ref = mann_kendall_oracle(x)
    direction, p = trend_test(x)
    assert s == 4
    assert direction == "none" and p == pytest.approx(p_ref, abs=1e-12)


def test_short_series_rejected():
    with pytest.raises(CorrelationError):
        trend_test([1, 2, 3])


def test_date_mapping_is_read_in_date_order():
    data = {D0 + dt.timedelta(days=i): float(20 - i) for i in reversed(range(12))}
    assert trend_test(data)[0] == "down"


@given(st.lists(st.integers(0, 6), min_size=8, max_size=30))
def test_trend_matches_oracle_with_ties(x):
    s, p_ref = mann_kendall_oracle(x)
    direction, p = trend_test(x)
    assert p == pytest.approx(p_ref, abs=1e-9)
    if p < 0.05:
        assert direction == ("up" if s > 0 else "down")
    else:
        assert direction == "none"
