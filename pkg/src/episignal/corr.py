"""Lagged Pearson correlation between tweet volume and cases, plus trend tests."""

from __future__ import annotations

import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import betainc

SIGNIFICANCE = 0.05
DEFAULT_LAGS = range(-10, 6)


class CorrelationError(ValueError):
    pass


class Strength(str, enum.Enum):
    STRONG = "strong"
    MODERATE = "moderate"
    WEAK = "weak"
    NOT_SIGNIFICANT = "not_significant"


@dataclass(frozen=True)
class LagCorrelation:
    lag: int
    r: float
    p: float
    n: int

    @property
    def strength(self) -> Strength:
        return classify_strength(self.r, self.p)


@dataclass
class LagScan:
    results: list[LagCorrelation]
    best_lead: int | None
    skipped: dict[int, str] = field(default_factory=dict)

    def at(self, lag: int) -> LagCorrelation | None:
        return next((c for c in self.results if c.lag == lag), None)


def align_with_lag(cases: Mapping[dt.date, float], volume: Mapping[dt.date, float], lag: int,
                   period: tuple[dt.date, dt.date] | None = None):
    """Pair ``cases[d]`` with ``volume[d + lag]``.

    ``period`` is a half-open ``(start, end)`` restricting the case dates;
    the matched volume day may fall outside it. Returns ``(x, y, dates)``.
    """
    delta = dt.timedelta(days=lag)
    xs, ys, ds = [], [], []
    for d in sorted(cases):
        if period is not None and not (period[0] <= d < period[1]):
            continue
        v = volume.get(d + delta)
        if v is None:
            continue
        xs.append(float(cases[d]))
        ys.append(float(v))
        ds.append(d)
    if len(xs) < 3:
        raise CorrelationError(f"insufficient overlap at lag {lag}: {len(xs)} pairs")
    return xs, ys, ds


def t_test_p(r: float, n: int) -> float:
    """Two-sided p-value of a correlation via Student's t with n-2 dof."""
    if n < 3:
        raise CorrelationError("need at least 3 samples")
    df = n - 2
    if abs(r) >= 1.0:
        return 0.0
    t2 = r * r * df / (1.0 - r * r)
    # P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    return float(min(1.0, max(0.0, betainc(df / 2.0, 0.5, df / (df + t2)))))


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise CorrelationError("x and y must be 1-D and of equal length")
    n = x.size
    if n < 3:
        raise CorrelationError("need at least 3 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise CorrelationError("zero variance")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return r, t_test_p(r, n)


def classify_strength(r: float, p: float, alpha: float = SIGNIFICANCE) -> Strength:
    if p >= alpha:
        return Strength.NOT_SIGNIFICANT
    a = abs(r)
    if a > 0.8:
        return Strength.STRONG
    if a > 0.3:
        return Strength.MODERATE
    return Strength.WEAK


def lag_scan(cases: Mapping[dt.date, float], volume: Mapping[dt.date, float],
             lags: Sequence[int] = DEFAULT_LAGS,
             period: tuple[dt.date, dt.date] | None = None,
             alpha: float = SIGNIFICANCE) -> LagScan:
    """Correlate cases against lagged volume at each lag.

    ``best_lead`` maximizes |r| over significant lags, ties going to the
    smaller |lag|. No multiple-comparison correction is applied.
    """
    results, skipped = [], {}
    for lag in lags:
        try:
            x, y, _ = align_with_lag(cases, volume, lag, period)
            r, p = pearson(x, y)
        except CorrelationError as exc:
            skipped[lag] = str(exc)
            continue
        results.append(LagCorrelation(lag, r, p, len(x)))
    significant = [c for c in results if c.p < alpha]
    best = None
    if significant:
        best = min(significant, key=lambda c: (-abs(c.r), abs(c.lag), c.lag)).lag
    return LagScan(results, best, skipped)


def trend_test(series, alpha: float = SIGNIFICANCE) -> tuple[str, float]:
    """Mann-Kendall trend test with tie-corrected normal approximation.

    ``series`` is a date-keyed mapping (taken in date order) or a sequence.
    Returns ``("up" | "down" | "none", p)``.
    """
    if isinstance(series, Mapping):
        x = np.array([series[d] for d in sorted(series)], dtype=float)
    else:
        x = np.asarray(series, dtype=float)
    n = x.size
    if n < 8:
        raise CorrelationError("trend test needs at least 8 observations")
    diff = x[None, :] - x[:, None]
    s = float(np.sign(diff[np.triu_indices(n, k=1)]).sum())
    _, ties = np.unique(x, return_counts=True)
    var = (n * (n - 1) * (2 * n + 5) - float(np.sum(ties * (ties - 1) * (2 * ties + 5)))) / 18.0
    if var <= 0 or s == 0:
        return "none", 1.0
    z = (s - 1) / math.sqrt(var) if s > 0 else (s + 1) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    if p < alpha:
        return ("up" if s > 0 else "down"), p
    return "none", p
