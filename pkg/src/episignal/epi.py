"""Bayesian R(t) filtering and R(t)-threshold period slicing."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .ingest import CaseSeries

DEFAULT_SERIAL_INTERVAL = 7.0
DEFAULT_SIGMA_RW = 0.15
R0_MIN = 1.4
R0_MAX = 2.5


class EpiError(ValueError):
    pass


@dataclass(frozen=True)
class RtGrid:
    r_min: float = 0.0
    r_max: float = 6.0
    step: float = 0.01

    def __post_init__(self):
        if self.r_min < 0 or self.step <= 0 or self.r_min >= self.r_max:
            raise EpiError(f"invalid R grid {self}")
        if self.r_max < 3:
            raise EpiError("r_max must be >= 3 so that R above 2.5 is representable")

    @property
    def values(self) -> np.ndarray:
        n = int(math.floor((self.r_max - self.r_min) / self.step + 1e-9)) + 1
        # rounded so grid points survive a decimal round trip exactly
        return np.round(self.r_min + self.step * np.arange(n), 10)


@dataclass
class RtPosterior:
    dates: list[dt.date]
    grid: RtGrid
    posterior: np.ndarray
    map_estimate: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    ci_mass: float = 0.9
    floored: np.ndarray = None

    def rows(self):
        for i, d in enumerate(self.dates):
            yield d, float(self.map_estimate[i]), float(self.ci_low[i]), float(self.ci_high[i])


def smooth_cases(series: CaseSeries, window: int = 7, sigma: float = 2.0) -> CaseSeries:
    """Centered Gaussian rolling mean, renormalized where the kernel is cut."""
    if window < 1 or window % 2 == 0:
        raise EpiError("window must be a positive odd integer")
    if sigma <= 0:
        raise EpiError("sigma must be positive")
    x = np.asarray(series.counts, dtype=float)
    n = len(x)
    if n < window:
        raise EpiError(f"series of length {n} is shorter than window {window}")
    half = window // 2
    offsets = np.arange(-half, half + 1)
    kernel = np.exp(-offsets ** 2 / (2 * sigma ** 2))
    out = np.empty(n)
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        w = kernel[lo - i + half:hi - i + half]
        out[i] = np.dot(w, x[lo:hi]) / w.sum()
    out = np.maximum(out, 0.0)
    return CaseSeries(series.region, list(series.dates), out, raw=series.raw,
                      clamped=series.clamped, deaths=series.deaths,
                      meta={**series.meta, "smoothing": {"window": window, "sigma": sigma}})


def _transition(r: np.ndarray, sigma: float) -> np.ndarray:
    # plain convolution; mass diffusing off the grid is dropped and the prior
    # renormalized afterwards
    return np.exp(-0.5 * ((r[None, :] - r[:, None]) / sigma) ** 2)


def _hdi(p: np.ndarray, r: np.ndarray, mass: float) -> tuple[float, float]:
    order = np.argsort(-p, kind="stable")
    k = int(np.searchsorted(np.cumsum(p[order]), mass - 1e-12)) + 1
    chosen = r[order[:k]]
    return float(chosen.min()), float(chosen.max())


def estimate_rt(series: CaseSeries, grid: RtGrid = RtGrid(), sigma_rw: float = DEFAULT_SIGMA_RW,
                serial_interval: float = DEFAULT_SERIAL_INTERVAL,
                ci_mass: float = 0.9) -> RtPosterior:
    """Filter R(t) on a grid from daily counts.

    The rate on day t is ``k[t-1] * exp((R - 1) / serial_interval)`` with a
    Poisson observation model; between days the posterior diffuses by a
    Gaussian random walk of std ``sigma_rw``. Output starts on the day after
    the first nonzero count.
    """
    k = np.asarray(series.counts, dtype=float)
    if k.size == 0:
        raise EpiError("empty case series")
    if np.any(k < 0):
        raise EpiError("case series must be nonnegative; clean it first")
    nonzero = np.flatnonzero(k >= 1)
    if nonzero.size == 0:
        raise EpiError("no epidemic signal")
    start = int(nonzero[0])
    if start + 1 >= k.size:
        raise EpiError("no epidemic signal: first case on the last day")

    r = grid.values
    gamma_si = 1.0 / serial_interval
    trans = _transition(r, sigma_rw)
    growth = np.exp(gamma_si * (r - 1.0))

    days = range(start + 1, k.size)
    post = np.empty((len(days), r.size))
    floored = np.zeros(len(days), dtype=bool)
    prev = np.full(r.size, 1.0 / r.size)
    for i, t in enumerate(days):
        prior = prev if i == 0 else prev @ trans
        prior = prior / prior.sum()
        base = k[t - 1]
        if base < 1:
            base = 1.0
            floored[i] = True
        lam = base * growth
        loglik = k[t] * np.log(lam) - lam - gammaln(k[t] + 1)
        p = prior * np.exp(loglik - loglik.max())
        s = p.sum()
        if not np.isfinite(s) or s <= 0:
            p = prior.copy()
            s = p.sum()
        p = p / s
        post[i] = p
        prev = p

    idx = post.argmax(axis=1)
    map_est = r[idx]
    lows, highs = zip(*(_hdi(row, r, ci_mass) for row in post))
    return RtPosterior(dates=[series.dates[t] for t in days], grid=grid, posterior=post,
                       map_estimate=map_est, ci_low=np.array(lows), ci_high=np.array(highs),
                       ci_mass=ci_mass, floored=floored)


# ---------------------------------------------------------------------------
# periods


@dataclass(frozen=True)
class DateInterval:
    """Half-open interval [start, end)."""

    start: dt.date
    end: dt.date

    @property
    def days(self) -> int:
        return max(0, (self.end - self.start).days)

    def __contains__(self, d: dt.date) -> bool:
        return self.start <= d < self.end

    def shift(self, days: int) -> "DateInterval":
        delta = dt.timedelta(days=days)
        return DateInterval(self.start + delta, self.end + delta)

    def to_json(self) -> dict:
        last = self.end - dt.timedelta(days=1) if self.days else None
        return {"start": self.start.isoformat(), "end": self.end.isoformat(),
                "last": last.isoformat() if last else None, "days": self.days}


PERIOD_NAMES = ("pre_peak", "free_contagious", "measures", "decay")


@dataclass
class PandemicPeriods:
    pre_peak: DateInterval
    free_contagious: DateInterval
    measures: DateInterval
    decay: DateInterval
    t0: dt.date
    t1: dt.date
    t0_global: dt.date | None = None
    flags: list[str] = field(default_factory=list)

    def intervals(self) -> dict[str, DateInterval]:
        return {name: getattr(self, name) for name in PERIOD_NAMES}

    def to_json(self) -> dict:
        out = {name: iv.to_json() for name, iv in self.intervals().items()}
        out.update(t0=self.t0.isoformat(), t1=self.t1.isoformat(),
                   t0_global=self.t0_global.isoformat() if self.t0_global else None,
                   flags=sorted(self.flags))
        return out


def _first_local_max_above(m: np.ndarray, level: float) -> int | None:
    n = len(m)
    for i in range(n):
        if m[i] <= level:
            continue
        left_ok = i == 0 or m[i] >= m[i - 1]
        right_ok = i == n - 1 or m[i] >= m[i + 1]
        if left_ok and right_ok:
            return i
    return None


def _first_below(m: np.ndarray, level: float, start: int) -> int:
    below = np.flatnonzero(m[start:] < level)
    return start + int(below[0]) if below.size else len(m)


def slice_periods(rt: RtPosterior, r0_min: float = R0_MIN, r0_max: float = R0_MAX,
                  pre_peak_days: int = 30) -> PandemicPeriods:
    """Cut the MAP trajectory into pre-peak / free-contagious / measures / decay.

    All thresholds use first-crossing semantics, so later oscillations never
    reopen an earlier period.
    """
    m = np.asarray(rt.map_estimate, dtype=float)
    dates = list(rt.dates)
    n = len(m)
    if n == 0:
        raise EpiError("empty R(t) trajectory")
    t0 = _first_local_max_above(m, r0_max)
    if t0 is None:
        raise EpiError("no peak: R(t) never exceeds %.2f" % r0_max)
    t1 = _first_below(m, r0_max, t0)
    if t1 >= n:
        raise EpiError("no peak: R(t) never drops below %.2f after the peak" % r0_max)
    t_meas = _first_below(m, r0_min, t1)
    t_decay = _first_below(m, 1.0, t_meas) if t_meas < n else n

    flags = []
    d_t1 = dates[t1]
    pre_start = d_t1 - dt.timedelta(days=pre_peak_days)
    if pre_start < dates[0]:
        pre_start = dates[0]
        flags.append("pre_peak_clipped")
    if t_meas >= n:
        flags.append("measures_empty")
    if t_decay >= n:
        flags.append("decay_empty")
    end = dates[-1] + dt.timedelta(days=1)

    def at(i):
        return end if i >= n else dates[i]

    peaks = np.flatnonzero(m == m.max())
    return PandemicPeriods(
        pre_peak=DateInterval(pre_start, d_t1),
        free_contagious=DateInterval(d_t1, at(t_meas)),
        measures=DateInterval(at(t_meas), at(t_decay)),
        decay=DateInterval(at(t_decay), end),
        t0=dates[t0], t1=d_t1, t0_global=dates[int(peaks[0])], flags=flags,
    )


def rt_from_map(dates, map_values, grid: RtGrid = RtGrid()) -> RtPosterior:
    """Wrap a bare MAP trajectory (e.g. read back from CSV) for slicing."""
    m = np.asarray(map_values, dtype=float)
    return RtPosterior(dates=list(dates), grid=grid, posterior=np.empty((len(m), 0)),
                       map_estimate=m, ci_low=m.copy(), ci_high=m.copy())
