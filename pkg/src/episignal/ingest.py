"""Tweet and case-count ingestion, offline geocoding and region aggregation."""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

Path_ = tuple[str, ...]

TWEET_FIELDS = ("tweet_id", "full_text", "user_id", "user_geo_original", "user_geo", "date")
CASE_FIELDS = ("date", "region", "new_cases", "deaths")


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    full_text: str
    user_id: str
    user_geo_original: str | None
    user_geo: Path_ | None
    date: dt.date


@dataclass(frozen=True)
class GazetteerEntry:
    pattern: str
    canonical: Path_
    priority: int = 0


@dataclass(frozen=True)
class RegionSpec:
    name: str
    members: tuple[Path_, ...]

    def __post_init__(self):
        if not self.members:
            raise IngestError(f"region {self.name!r} has no members")
        for i, a in enumerate(self.members):
            for j, b in enumerate(self.members):
                if i != j and _is_suffix(a, b):
                    raise IngestError(
                        f"region {self.name!r}: member {format_path(a)!r} "
                        f"overlaps {format_path(b)!r}")


@dataclass(frozen=True)
class CaseRecord:
    date: dt.date
    region: str
    new_cases: int
    deaths: int = 0


@dataclass
class CaseSeries:
    """Contiguous daily series for one region.

    ``counts`` holds the cleaned (clamped, zero-filled) values used for
    estimation; ``raw`` keeps the signed sums for plotting.
    """

    region: str
    dates: list[dt.date]
    counts: np.ndarray
    raw: np.ndarray = None
    clamped: np.ndarray = None
    deaths: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.dates)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.raw is None:
            self.raw = self.counts.copy()
        if self.clamped is None:
            self.clamped = np.zeros(n, dtype=bool)
        if self.deaths is None:
            self.deaths = np.zeros(n, dtype=float)
        if len(self.counts) != n:
            raise IngestError("dates and counts differ in length")

    def __len__(self):
        return len(self.dates)

    def as_dict(self) -> dict[dt.date, float]:
        return dict(zip(self.dates, self.counts.tolist()))


# ---------------------------------------------------------------------------
# location paths


def parse_path(text: str) -> Path_:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    if not parts:
        raise IngestError(f"empty location path: {text!r}")
    return parts


def format_path(path: Path_) -> str:
    return ", ".join(path)


def _is_suffix(member: Path_, path: Path_) -> bool:
    return len(member) <= len(path) and tuple(path[len(path) - len(member):]) == member


_PUNCT = re.compile(r"[^\w\s,]|_")


def normalize_text(raw: str) -> str:
    """Lowercase, fold diacritics, strip punctuation; commas separate tokens."""
    text = unicodedata.normalize("NFKD", raw.lower())
    text = "".join(c for c in text if not unicodedata.combining(c))
    text = _PUNCT.sub(" ", text)
    tokens = [" ".join(tok.split()) for tok in text.split(",")]
    return ", ".join(t for t in tokens if t)


def load_gazetteer(path: str | Path) -> list[GazetteerEntry]:
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = {"pattern", "canonical", "priority"} - set(reader.fieldnames or ())
        if missing:
            raise IngestError(f"{path}: gazetteer missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                entries.append(GazetteerEntry(row["pattern"], parse_path(row["canonical"]),
                                              int(row["priority"] or 0)))
            except (TypeError, ValueError) as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from exc
    validate_gazetteer(entries)
    return entries


def validate_gazetteer(entries: Sequence[GazetteerEntry]) -> None:
    countries = {e.canonical[0] for e in entries if len(e.canonical) == 1}
    for e in entries:
        if not e.pattern or normalize_text(e.pattern) != e.pattern:
            raise IngestError(f"gazetteer pattern not normalized: {e.pattern!r}")
        if not e.canonical:
            raise IngestError(f"gazetteer entry {e.pattern!r} has empty canonical path")
        if e.canonical[-1] not in countries:
            raise IngestError(
                f"gazetteer entry {e.pattern!r}: {e.canonical[-1]!r} is not a known country")


class Gazetteer:
    """Pattern index over gazetteer entries."""

    def __init__(self, entries: Iterable[GazetteerEntry]):
        self.entries = list(entries)
        self._index: dict[str, list[GazetteerEntry]] = defaultdict(list)
        for e in self.entries:
            self._index[e.pattern].append(e)

    def lookup(self, raw: str | None) -> Path_ | None:
        if not raw:
            return None
        norm = normalize_text(raw)
        if not norm:
            return None
        keys = {norm, *norm.split(", ")}
        candidates = [e for key in keys for e in self._index.get(key, ())]
        if not candidates:
            return None
        best = min(candidates,
                   key=lambda e: (-len(e.pattern), -e.priority, format_path(e.canonical)))
        return best.canonical


def normalize_location(raw: str | None,
                       gazetteer: Gazetteer | Sequence[GazetteerEntry]) -> Path_ | None:
    if not isinstance(gazetteer, Gazetteer):
        gazetteer = Gazetteer(gazetteer)
    return gazetteer.lookup(raw)


def load_regions(path: str | Path) -> list[RegionSpec]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("regions", [])
    try:
        return [RegionSpec(d["name"], tuple(parse_path(m) for m in d["members"])) for d in data]
    except (KeyError, TypeError) as exc:
        raise IngestError(f"{path}: malformed region spec: {exc}") from exc


def assign_region(record: TweetRecord, specs: Sequence[RegionSpec]) -> list[str]:
    if not record.user_geo:
        return []
    return [s.name for s in specs if any(_is_suffix(m, record.user_geo) for m in s.members)]


# ---------------------------------------------------------------------------
# tweets


def _parse_date(value) -> dt.date:
    if isinstance(value, dt.date):
        return value
    text = str(value).strip()
    # accept full ISO timestamps; only the calendar day is kept
    return dt.date.fromisoformat(text[:10])


def _tweet_from_mapping(obj: Mapping) -> TweetRecord:
    if not isinstance(obj, Mapping):
        raise IngestError("record is not an object")
    for key in ("tweet_id", "full_text", "user_id", "date"):
        if obj.get(key) is None:
            raise IngestError(f"missing field {key!r}")
    tweet_id = str(obj["tweet_id"]).strip()
    if not tweet_id:
        raise IngestError("empty tweet_id")
    geo = obj.get("user_geo")
    orig = obj.get("user_geo_original")
    return TweetRecord(
        tweet_id=tweet_id,
        full_text=str(obj["full_text"]),
        user_id=str(obj["user_id"]),
        user_geo_original=str(orig) if orig not in (None, "") else None,
        user_geo=parse_path(geo) if geo not in (None, "") else None,
        date=_parse_date(obj["date"]),
    )


def load_tweets(path: str | Path, format: str | None = None, strict: bool = False,
                window: tuple[dt.date, dt.date] | None = None):
    """Read tweets from JSONL or CSV.

    Returns ``(records, skipped)``. Malformed lines, duplicate ids and
    out-of-window dates count as skipped; with ``strict`` the first one
    raises :class:`IngestError` carrying its line number.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"tweet file not found: {path}")
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "csv"):
        raise IngestError(f"unsupported tweet format {fmt!r}")

    records: list[TweetRecord] = []
    seen: set[str] = set()
    skipped = 0

    def rows():
        with open(path, encoding="utf-8", newline="") as fh:
            if fmt == "jsonl":
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        yield lineno, json.loads(line)
                    except json.JSONDecodeError as exc:
                        yield lineno, exc
            else:
                reader = csv.DictReader(fh)
                for row in reader:
                    yield reader.line_num, row

    for lineno, obj in rows():
        try:
            if isinstance(obj, Exception):
                raise IngestError(f"invalid JSON: {obj}")
            rec = _tweet_from_mapping(obj)
            if rec.tweet_id in seen:
                raise IngestError(f"duplicate tweet_id {rec.tweet_id}")
            if window and not (window[0] <= rec.date <= window[1]):
                raise IngestError(f"date {rec.date} outside study window")
        except (IngestError, ValueError, TypeError) as exc:
            if strict:
                raise IngestError(f"{path}:{lineno}: {exc}") from exc
            log.debug("skipping %s:%d: %s", path, lineno, exc)
            skipped += 1
            continue
        seen.add(rec.tweet_id)
        records.append(rec)
    return records, skipped


def geocode_tweets(tweets: Sequence[TweetRecord], gazetteer: Gazetteer) -> list[TweetRecord]:
    """Fill ``user_geo`` from ``user_geo_original`` where it is missing."""
    out = []
    for t in tweets:
        if t.user_geo is None and t.user_geo_original:
            geo = gazetteer.lookup(t.user_geo_original)
            if geo is not None:
                t = TweetRecord(t.tweet_id, t.full_text, t.user_id, t.user_geo_original, geo, t.date)
        out.append(t)
    return out


def daily_volume(tweets: Sequence[TweetRecord], region: str, specs: Sequence[RegionSpec],
                 start: dt.date | None = None, end: dt.date | None = None) -> dict[dt.date, int]:
    """Tweets per day assigned to ``region``, zero-filled over [start, end]."""
    counts: dict[dt.date, int] = defaultdict(int)
    for t in tweets:
        if region in assign_region(t, specs):
            counts[t.date] += 1
    if start is None or end is None:
        all_dates = [t.date for t in tweets]
        if not all_dates:
            return {}
        start = start or min(all_dates)
        end = end or max(all_dates)
    return {d: counts.get(d, 0) for d in date_range(start, end)}


def date_range(start: dt.date, end: dt.date) -> list[dt.date]:
    """Inclusive daily range."""
    return [start + dt.timedelta(days=i) for i in range((end - start).days + 1)]


# ---------------------------------------------------------------------------
# cases


def load_cases(path: str | Path) -> list[CaseRecord]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"case file not found: {path}")
    records = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CASE_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise IngestError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            try:
                rec = CaseRecord(_parse_date(row["date"]), row["region"].strip(),
                                 int(row["new_cases"]), int(row["deaths"] or 0))
            except (TypeError, ValueError) as exc:
                raise IngestError(f"{path}:{reader.line_num}: {exc}") from exc
            key = (rec.date, parse_path(rec.region))
            if key in seen:
                raise IngestError(f"{path}:{reader.line_num}: duplicate record for "
                                  f"{rec.region} on {rec.date}")
            seen.add(key)
            records.append(rec)
    return records


def aggregate_region_cases(records: Sequence[CaseRecord], spec: RegionSpec,
                           zero_fill_before: Mapping[str, dt.date] | None = None) -> CaseSeries:
    """Sum member case counts into one daily series for ``spec``.

    Each member takes the records at the coarsest available depth under it,
    so a country total and its subregions are never double counted.
    """
    zero_fill = {parse_path(k): _parse_date(v) for k, v in (zero_fill_before or {}).items()}

    per_member: dict[Path_, list[tuple[CaseRecord, Path_]]] = {}
    for member in spec.members:
        matched = [(r, p) for r in records
                   if _is_suffix(member, p := parse_path(r.region))]
        if matched:
            depth = min(len(p) for _, p in matched)
            per_member[member] = [(r, p) for r, p in matched if len(p) == depth]
    if not per_member:
        raise IngestError(f"no case records match region {spec.name!r}")

    dates = [r.date for recs in per_member.values() for r, _ in recs]
    days = date_range(min(dates), max(dates))
    index = {d: i for i, d in enumerate(days)}
    n = len(days)
    counts = np.zeros(n)
    raw = np.zeros(n)
    deaths = np.zeros(n)
    clamped = np.zeros(n, dtype=bool)

    for member, recs in per_member.items():
        cutoff = None
        for key, when in zero_fill.items():
            if _is_suffix(key, member):  # member lies within the zero-filled area
                cutoff = when
        m_cases = np.zeros(n)
        m_deaths = np.zeros(n)
        for r, _ in recs:
            if cutoff is not None and r.date < cutoff:
                continue
            m_cases[index[r.date]] += r.new_cases
            m_deaths[index[r.date]] += r.deaths
        neg = m_cases < 0
        raw += m_cases
        counts += np.where(neg, 0.0, m_cases)
        clamped |= neg
        deaths += np.maximum(m_deaths, 0)
    if clamped.any():
        log.info("%s: clamped %d negative daily values", spec.name, int(clamped.sum()))
    return CaseSeries(spec.name, days, counts, raw=raw, clamped=clamped, deaths=deaths,
                      meta={"members": [format_path(m) for m in per_member]})


def restrict(series: CaseSeries, start: dt.date, end: dt.date) -> CaseSeries:
    """Reindex ``series`` onto [start, end], zero-filling missing days."""
    days = date_range(start, end)
    pos = {d: i for i, d in enumerate(series.dates)}

    def take(arr, fill):
        return np.array([arr[pos[d]] if d in pos else fill for d in days])

    return CaseSeries(series.region, days, take(series.counts, 0.0), raw=take(series.raw, 0.0),
                      clamped=take(series.clamped, False), deaths=take(series.deaths, 0.0),
                      meta=dict(series.meta))
