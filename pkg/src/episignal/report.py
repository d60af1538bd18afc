"""Artifact writers.

All CSV/JSON output is UTF-8 with LF line endings, fixed column orders and
floats printed with 9 significant digits, so identical runs give identical
bytes. The manifest carries no wall-clock time for the same reason.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import math
import platform
import re
from importlib import metadata
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import __version__
from .classify.features import CATEGORY_NAMES, N_CATEGORIES
from .epi import PERIOD_NAMES
from .pipeline import Pipeline

STAGES = ("ingest", "rt", "periods", "correlate", "topics", "classify", "report", "pipeline")
CAVEATS = [
    "lag correlations are not corrected for multiple comparisons across lags",
    "negative daily case counts are clamped to 0 for estimation; raw values are kept",
]
PERIOD_COLORS = {"pre_peak": "#d9d9d9", "free_contagious": "#f4a582",
                 "measures": "#fddbc7", "decay": "#d1e5f0"}


# ---------------------------------------------------------------------------
# serialization


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.9g}"
    if isinstance(value, (dt.date, dt.datetime)):
        return value.isoformat()
    return str(value)


def plain(obj):
    """JSON-ready copy: floats cut to 9 significant digits, NaN to null."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return int(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.9g}")
    if isinstance(obj, (dt.date, dt.datetime)):
        return obj.isoformat()
    if hasattr(obj, "item"):          # numpy scalars
        return plain(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(plain(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "region"


class Writer:
    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.written: dict[str, str] = {}

    def text(self, rel: str, content: str) -> None:
        path = self.out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = content.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
        self.written[rel] = hashlib.sha256(data).hexdigest()

    def csv(self, rel: str, header, rows) -> None:
        self.text(rel, csv_text(header, rows))

    def json(self, rel: str, obj) -> None:
        self.text(rel, json_text(obj))


# ---------------------------------------------------------------------------
# artifact groups


def write_summary(p: Pipeline, w: Writer) -> None:
    rows = []
    for r in p.regions:
        s = p.cases[r]
        rows.append((r, len(p.tweets_by_region[r]), p.users[r], int(s.counts.sum()),
                     int(s.raw.sum()), int(s.clamped.sum())))
    w.csv("summary.csv", ["region", "tweets", "users", "cases", "cases_raw", "clamped_days"], rows)


def write_daily_series(p: Pipeline, w: Writer) -> None:
    rows = []
    for r in p.regions:
        s, sm, vol = p.cases[r], p.smoothed[r], p.volume[r]
        for i, d in enumerate(s.dates):
            rows.append((r, d, int(s.raw[i]), int(s.counts[i]), bool(s.clamped[i]),
                         float(sm.counts[i]), vol[d]))
    w.csv("daily_series.csv",
          ["region", "date", "cases_raw", "cases", "clamped", "cases_smoothed", "tweets"], rows)


def write_rt(p: Pipeline, w: Writer) -> None:
    for r in p.regions:
        w.csv(f"rt_{safe_name(r)}.csv", ["date", "map", "ci_low", "ci_high"], p.rt[r].rows())


def write_periods(p: Pipeline, w: Writer) -> None:
    e = p.config["epi"]
    regions = {}
    for r in p.regions:
        per = p.periods[r]
        regions[r] = {"error": per} if isinstance(per, str) else per.to_json()
    w.json("periods.json", {
        "thresholds": {"r0_min": e["r0_min"], "r0_max": e["r0_max"],
                       "pre_peak_days": e["pre_peak_days"]},
        "regions": regions,
    })


def write_correlations(p: Pipeline, w: Writer) -> None:
    rows, leads, trends = [], {}, {}
    for r in p.regions:
        run = p.correlations[r]
        leads[r] = {}
        for period in PERIOD_NAMES:
            scan = run.scans.get(period)
            if scan is None:
                leads[r][period] = None
                continue
            for c in scan.results:
                rows.append((r, period, c.lag, c.r, c.p, c.n, c.strength.value))
            best = scan.at(scan.best_lead) if scan.best_lead is not None else None
            leads[r][period] = {
                "best_lead": scan.best_lead,
                "r": best.r if best else None,
                "p": best.p if best else None,
                "n": best.n if best else None,
                "skipped": {str(k): v for k, v in sorted(scan.skipped.items())},
            }
        trends[r] = {"periods": {k: run.trends[k] for k in PERIOD_NAMES if k in run.trends},
                     "notes": run.notes}
    w.csv("lag_correlations.csv", ["region", "period", "lag", "r", "p", "n", "strength"], rows)
    w.json("best_leads.json", {"caveat": CAVEATS[0], "regions": leads})
    w.json("trends.json", {"test": "mann-kendall", "alpha": p.config["corr"]["alpha"],
                           "regions": trends})


def write_topics(p: Pipeline, w: Writer) -> None:
    for (r, d), slice_ in p.day_topics.items():
        w.json(f"topics/{safe_name(r)}_{d.isoformat()}.json", slice_.to_json())


def write_classifier(p: Pipeline, w: Writer) -> None:
    run = p.classifier
    rows = [(label, CATEGORY_NAMES.get(int(label)) if label.isdigit() else "", *rest)
            for label, *rest in run.report.rows()]
    rows.append(("accuracy", "", None, None, run.report.accuracy, run.report.support))
    w.csv("classifier_metrics.csv", ["class", "name", "precision", "recall", "f1", "support"], rows)
    w.json("classifier_model.json", {
        "vectorizer": run.vectorizer.to_json(),
        "model": run.result.model.to_json(),
        "test_flags": run.report.flags,
    })


def write_predictions(p: Pipeline, w: Writer) -> None:
    rows = []
    for (r, d), slice_ in p.day_topics.items():
        for c in slice_.clusters:
            label = p.categories.get((r, d, c.cluster_id))
            rows.append((r, d, c.cluster_id, len(c.member_ids), c.valid, label,
                         CATEGORY_NAMES.get(label, "") if label else "", " ".join(c.words)))
    w.csv("predictions.csv", ["region", "date", "cluster_id", "members", "valid", "category",
                              "category_name", "top_words"], rows)


def topic_count_rows(p: Pipeline) -> list[tuple]:
    counts: dict[tuple[str, int], int] = {}
    for (r, _d, _cid), label in p.categories.items():
        counts[(r, label)] = counts.get((r, label), 0) + 1
    return [(r, c, CATEGORY_NAMES[c], counts[(r, c)])
            for r in p.topic_regions for c in range(1, N_CATEGORIES + 1) if (r, c) in counts]


def write_topic_counts(p: Pipeline, w: Writer) -> None:
    w.csv("topic_counts.csv", ["region", "category", "category_name", "topics"],
          topic_count_rows(p))


def write_cr(p: Pipeline, w: Writer) -> None:
    rows = []
    for r in p.topic_regions:
        for d, shares, volume in p.category_rates[r]:
            rows.append((r, d, volume, *(shares if shares is not None else [None] * N_CATEGORIES)))
    w.csv("cr_heatmap.csv", ["region", "date", "volume"]
          + [f"cr_{c}" for c in range(1, N_CATEGORIES + 1)], rows)


def write_wordfreq(p: Pipeline, w: Writer) -> None:
    top = p.config["report"]["wordfreq_top"]
    for r in p.regions:
        for window, counts in p.word_frequencies(r).items():
            w.csv(f"wordfreq_{safe_name(r)}_{window}.csv", ["rank", "word", "count"],
                  ((i + 1, word, n) for i, (word, n) in enumerate(counts[:top])))


def write_plot(p: Pipeline, w: Writer) -> None:
    region = p.config["report"]["plot_region"] or p.regions[0]
    if region not in p.regions:
        region = p.regions[0]
    w.text("volume_vs_cases.svg", volume_cases_svg(p, region))


# ---------------------------------------------------------------------------
# SVG


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    mag = 10 ** math.floor(math.log10(v))
    for step in (1, 2, 2.5, 5, 10):
        if step * mag >= v:
            return step * mag
    return 10 * mag


def volume_cases_svg(p: Pipeline, region: str, width: int = 960, height: int = 480) -> str:
    """Daily cases (left axis) and tweet volume (right axis) with period bands."""
    s = p.cases[region]
    days = s.dates
    vol = [p.volume[region][d] for d in days]
    left, right, top, bottom = 70, 70, 40, 60
    pw, ph = width - left - right, height - top - bottom
    n = max(len(days) - 1, 1)
    c_lo = min(0.0, float(min(s.raw)))
    c_hi = _nice_max(float(max(s.raw)))
    v_hi = _nice_max(float(max(vol)))

    def x(i):
        return left + pw * i / n

    def y_cases(v):
        return top + ph * (1 - (v - c_lo) / (c_hi - c_lo))

    def y_vol(v):
        return top + ph * (1 - v / v_hi)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
           f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
           f'{_esc(region)}: daily cases and tweet volume</text>']
    periods = p.periods[region]
    if not isinstance(periods, str):
        index = {d: i for i, d in enumerate(days)}
        for name, iv in periods.intervals().items():
            inside = [index[d] for d in days if d in iv]
            if not inside:
                continue
            x0, x1 = x(inside[0]), x(min(inside[-1] + 1, n))
            out.append(f'<rect x="{x0:.2f}" y="{top}" width="{max(x1 - x0, 1):.2f}" height="{ph}" '
                       f'fill="{PERIOD_COLORS[name]}" fill-opacity="0.6"/>')
            out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{top + 12}" text-anchor="middle" '
                       f'font-size="9">{name.replace("_", " ")}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>')
    for k in range(6):
        cv = c_lo + (c_hi - c_lo) * k / 5
        vv = v_hi * k / 5
        yc, yv = y_cases(cv), y_vol(vv)
        out.append(f'<line x1="{left - 4}" y1="{yc:.2f}" x2="{left}" y2="{yc:.2f}" stroke="#333333"/>')
        out.append(f'<text x="{left - 6}" y="{yc + 4:.2f}" text-anchor="end">{cv:g}</text>')
        out.append(f'<line x1="{left + pw}" y1="{yv:.2f}" x2="{left + pw + 4}" y2="{yv:.2f}" '
                   f'stroke="#333333"/>')
        out.append(f'<text x="{left + pw + 6}" y="{yv + 4:.2f}">{vv:g}</text>')
    for i, d in enumerate(days):
        if d.day == 1:
            out.append(f'<line x1="{x(i):.2f}" y1="{top + ph}" x2="{x(i):.2f}" y2="{top + ph + 4}" '
                       f'stroke="#333333"/>')
            out.append(f'<text x="{x(i):.2f}" y="{top + ph + 16}" text-anchor="middle">'
                       f'{d.isoformat()}</text>')
    cases_pts = " ".join(f"{x(i):.2f},{y_cases(float(v)):.2f}" for i, v in enumerate(s.raw))
    vol_pts = " ".join(f"{x(i):.2f},{y_vol(float(v)):.2f}" for i, v in enumerate(vol))
    out.append(f'<polyline fill="none" stroke="#b2182b" stroke-width="1.5" points="{cases_pts}"/>')
    out.append(f'<polyline fill="none" stroke="#2166ac" stroke-width="1.5" points="{vol_pts}"/>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" transform="rotate(-90 16 {top + ph / 2:.2f})" '
               f'text-anchor="middle" fill="#b2182b">daily cases</text>')
    out.append(f'<text x="{width - 16}" y="{top + ph / 2:.2f}" '
               f'transform="rotate(90 {width - 16} {top + ph / 2:.2f})" text-anchor="middle" '
               f'fill="#2166ac">tweets per day</text>')
    out.append(f'<text x="{left}" y="{height - 12}" fill="#b2182b">cases</text>')
    out.append(f'<text x="{left + 50}" y="{height - 12}" fill="#2166ac">tweets</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# stages + manifest

_GROUPS: dict[str, list[Callable[[Pipeline, Writer], None]]] = {
    "ingest": [write_summary, write_daily_series],
    "rt": [write_rt],
    "periods": [write_periods],
    "correlate": [write_correlations],
    "topics": [write_topics],
    "classify": [write_classifier],
    "report": [write_summary, write_periods, write_correlations, write_topic_counts,
               write_classifier, write_cr, write_wordfreq, write_plot, write_predictions],
}
_GROUPS["pipeline"] = list(dict.fromkeys(f for k in STAGES[:-1] for f in _GROUPS[k]))


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    out = {"episignal": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "numba", "nltk"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def build_manifest(p: Pipeline, stage: str, artifacts: dict[str, str]) -> dict:
    cfg = p.config
    inputs = {}
    for key in ("tweets", "cases", "gazetteer", "regions", "labeled_topics", "embeddings"):
        path = cfg.path(key)
        if path is not None and path.exists():
            inputs[key] = {"file": path.name, "sha256": _digest(path)}
    start, end = p.window
    manifest = {
        "format": "episignal-manifest/1",
        "stage": stage,
        "seed": p.seed,
        "regions": p.regions,
        "config": cfg.snapshot(),
        "config_file": {"file": cfg.source.name, "sha256": _digest(cfg.source)} if cfg.source else None,
        "inputs": inputs,
        "versions": _versions(),
        "timestamps": {"study_start": start, "study_end": end},
        "caveats": CAVEATS,
        "artifacts": dict(sorted(artifacts.items())),
    }
    if stage in ("ingest", "report", "pipeline"):
        manifest["skipped_tweet_rows"] = p.skipped_tweets
    if stage in ("topics", "report", "pipeline"):
        manifest["topics"] = {"regions": p.topic_regions,
                              "days": [p.topic_days[0], p.topic_days[-1]] if p.topic_days else [],
                              "preprocess": p.preprocess_config.manifest()}
    if stage in ("classify", "report", "pipeline"):
        manifest["classifier"] = p.classifier.result.manifest
    return manifest


def emit_reports(p: Pipeline, out_dir: str | Path, stage: str = "pipeline") -> dict[str, str]:
    """Write the artifacts of ``stage`` plus manifest.json; returns {relpath: sha256}."""
    if stage not in _GROUPS:
        raise ValueError(f"unknown stage {stage!r}")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    w = Writer(out_dir)
    for fn in _GROUPS[stage]:
        fn(p, w)
    artifacts = dict(w.written)
    w.json("manifest.json", build_manifest(p, stage, artifacts))
    return w.written
