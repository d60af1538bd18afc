"""Stage graph for a configured run.

Every stage is a lazily computed, cached property; asking for a late stage
computes whatever it needs upstream. Nothing here writes files.
"""

from __future__ import annotations

import datetime as dt
import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classify as cls
from . import corr, epi, ingest, textprep, topics
from .config import Config, ConfigError, as_date

log = logging.getLogger(__name__)


@dataclass
class ClassifierRun:
    vectorizer: cls.TopicVectorizer
    result: cls.TrainResult
    report: cls.ClassificationReport


@dataclass
class CorrelationRun:
    scans: dict[str, corr.LagScan]                 # period -> scan
    trends: dict[str, dict]                        # period -> {"tweets": ..., "cases": ...}
    notes: list[str]


def _model_slice(args):
    tweets, provider, day, region, settings, seed = args
    return topics.model_day(tweets, provider, day, region, settings, seed)


class Pipeline:
    def __init__(self, config: Config, seed: int, regions: Sequence[str] | None = None,
                 strict: bool = False, parallel: bool = False):
        self.config = config
        self.seed = int(seed)
        self.strict = strict
        self.parallel = parallel
        self._only = list(regions) if regions else None

    # -- inputs ----------------------------------------------------------

    @cached_property
    def specs(self) -> list[ingest.RegionSpec]:
        specs = ingest.load_regions(self.config.require_path("regions"))
        if self._only:
            names = {s.name for s in specs}
            unknown = [r for r in self._only if r not in names]
            if unknown:
                raise ConfigError(f"unknown region(s): {', '.join(unknown)}")
        return specs

    @cached_property
    def regions(self) -> list[str]:
        names = [s.name for s in self.specs]
        return [n for n in names if self._only is None or n in self._only]

    def spec(self, region: str) -> ingest.RegionSpec:
        return next(s for s in self.specs if s.name == region)

    @cached_property
    def gazetteer(self) -> ingest.Gazetteer:
        entries = ingest.load_gazetteer(self.config.require_path("gazetteer"))
        ingest.validate_gazetteer(entries)
        return ingest.Gazetteer(entries)

    @cached_property
    def case_records(self) -> list[ingest.CaseRecord]:
        return ingest.load_cases(self.config.require_path("cases"))

    @cached_property
    def window(self) -> tuple[dt.date, dt.date]:
        start, end = self.config.start, self.config.end
        if start is None or end is None:
            dates = [r.date for r in self.case_records]
            start = start or min(dates)
            end = end or max(dates)
        if start > end:
            raise ConfigError(f"study window is empty: {start} > {end}")
        return start, end

    @cached_property
    def _tweet_load(self):
        return ingest.load_tweets(self.config.require_path("tweets"), strict=self.strict,
                                  window=self.window)

    @cached_property
    def tweets(self) -> list[ingest.TweetRecord]:
        records, skipped = self._tweet_load
        if skipped:
            log.warning("skipped %d malformed, duplicate or out-of-window tweet rows", skipped)
        return ingest.geocode_tweets(records, self.gazetteer)

    @property
    def skipped_tweets(self) -> int:
        return self._tweet_load[1]

    @cached_property
    def tweets_by_region(self) -> dict[str, list[ingest.TweetRecord]]:
        out = {r: [] for r in self.regions}
        for t in self.tweets:
            for r in ingest.assign_region(t, self.specs):
                if r in out:
                    out[r].append(t)
        return out

    # -- ingest ----------------------------------------------------------

    @cached_property
    def cases(self) -> dict[str, ingest.CaseSeries]:
        zero_fill = self.config["data"]["zero_fill_before"]
        start, end = self.window
        return {r: ingest.restrict(ingest.aggregate_region_cases(self.case_records, self.spec(r),
                                                                 zero_fill), start, end)
                for r in self.regions}

    @cached_property
    def volume(self) -> dict[str, dict[dt.date, int]]:
        start, end = self.window
        out = {}
        for r, tw in self.tweets_by_region.items():
            counts = Counter(t.date for t in tw)
            out[r] = {d: counts.get(d, 0) for d in ingest.date_range(start, end)}
        return out

    @cached_property
    def users(self) -> dict[str, int]:
        return {r: len({t.user_id for t in tw}) for r, tw in self.tweets_by_region.items()}

    # -- epi -------------------------------------------------------------

    @cached_property
    def smoothed(self) -> dict[str, ingest.CaseSeries]:
        e = self.config["epi"]
        return {r: epi.smooth_cases(s, e["smooth_window"], e["smooth_sigma"])
                for r, s in self.cases.items()}

    @cached_property
    def grid(self) -> epi.RtGrid:
        e = self.config["epi"]
        return epi.RtGrid(e["r_min"], e["r_max"], e["r_step"])

    @cached_property
    def rt(self) -> dict[str, epi.RtPosterior]:
        e = self.config["epi"]
        return {r: epi.estimate_rt(s, self.grid, e["sigma_rw"], e["serial_interval"], e["ci_mass"])
                for r, s in self.smoothed.items()}

    @cached_property
    def periods(self) -> dict[str, epi.PandemicPeriods | str]:
        """Periods per region, or the error message when slicing fails."""
        e = self.config["epi"]
        out = {}
        for r, post in self.rt.items():
            try:
                out[r] = epi.slice_periods(post, e["r0_min"], e["r0_max"], e["pre_peak_days"])
            except epi.EpiError as exc:
                log.warning("%s: %s", r, exc)
                out[r] = str(exc)
        return out

    # -- corr ------------------------------------------------------------

    @cached_property
    def correlations(self) -> dict[str, CorrelationRun]:
        c = self.config["corr"]
        lags = range(c["lag_min"], c["lag_max"] + 1)
        out = {}
        for r in self.regions:
            periods = self.periods[r]
            cases = self.cases[r].as_dict()
            volume = self.volume[r]
            if isinstance(periods, str):
                out[r] = CorrelationRun({}, {}, [f"no periods: {periods}"])
                continue
            scans, trends, notes = {}, {}, []
            for name, iv in periods.intervals().items():
                if iv.days == 0:
                    notes.append(f"{name}: empty period")
                    continue
                scans[name] = corr.lag_scan(cases, volume, lags, (iv.start, iv.end), c["alpha"])
                trends[name] = {}
                for label, series in (("tweets", volume), ("cases", cases)):
                    sub = {d: v for d, v in series.items() if d in iv}
                    try:
                        direction, p = corr.trend_test(sub, c["alpha"])
                        trends[name][label] = {"trend": direction, "p": p, "n": len(sub)}
                    except corr.CorrelationError as exc:
                        trends[name][label] = {"trend": None, "p": None, "n": len(sub),
                                               "note": str(exc)}
            out[r] = CorrelationRun(scans, trends, notes)
        return out

    # -- text + topics ---------------------------------------------------

    @cached_property
    def preprocess_config(self) -> textprep.PreprocessConfig:
        t = self.config["textprep"]
        base = self.config.base_dir

        def rel(p):
            if not p:
                return None
            return str(p if Path(p).is_absolute() else base / p)

        return textprep.PreprocessConfig(
            stopword_lists={lang: textprep.bundled_stopwords(lang) for lang in t["languages"]},
            query_keywords=frozenset(t["query_keywords"]),
            spell_correct=t["spell_correct"], dictionary_path=rel(t["dictionary"]),
            pos_filter=t["pos_filter"], lexicon_path=rel(t["lexicon"]), stemmer=t["stemmer"])

    @cached_property
    def tokens(self) -> dict[str, tuple[str, ...]]:
        cfg = self.preprocess_config
        return {t.tweet_id: tuple(textprep.preprocess(t.full_text, cfg)) for t in self.tweets}

    @cached_property
    def topic_settings(self) -> topics.TopicSettings:
        t = self.config["topics"]
        return topics.TopicSettings(
            k_grid=tuple(int(k) for k in t["k_grid"]),
            gamma_grid=tuple(float(g) for g in t["gamma_grid"]),
            lda_iterations=t["lda_iterations"], quantization=t["quantization"], alpha=t["alpha"],
            beta=t["beta"], latent_dim=t["latent_dim"], hidden_dim=t["hidden_dim"],
            epochs=t["epochs"], lr=t["lr"], batch_size=t["batch_size"], top_n=t["top_n"],
            min_docs=t["min_docs"])

    @cached_property
    def embedder(self):
        t = self.config["topics"]
        if t["embedder"] == "precomputed":
            return topics.PrecomputedEmbeddings.from_file(self.config.require_path("embeddings"))
        return topics.HashedNgramEmbedder(dim=t["embedding_dim"], seed=self.seed)

    @cached_property
    def topic_regions(self) -> list[str]:
        wanted = self.config["topics"]["regions"]
        return [r for r in self.regions if not wanted or r in wanted]

    @cached_property
    def topic_days(self) -> list[dt.date]:
        t = self.config["topics"]
        start = as_date(t["start"], "topics.start") or self.window[0]
        end = as_date(t["end"], "topics.end") or self.window[1]
        start, end = max(start, self.window[0]), min(end, self.window[1])
        return ingest.date_range(start, end) if start <= end else []

    @cached_property
    def day_topics(self) -> dict[tuple[str, dt.date], topics.DayTopics]:
        jobs = []
        for r in self.topic_regions:
            by_day = defaultdict(list)
            for t in self.tweets_by_region[r]:
                by_day[t.date].append(topics.TokenizedTweet(t.tweet_id, self.tokens[t.tweet_id]))
            for d in self.topic_days:
                jobs.append((by_day.get(d, []), self.embedder, d, r, self.topic_settings, self.seed))
        if self.parallel and len(jobs) > 1:
            with ProcessPoolExecutor() as pool:
                results = list(pool.map(_model_slice, jobs))
        else:
            results = [_model_slice(j) for j in jobs]
        return {(j[3], j[2]): res for j, res in zip(jobs, results)}

    # -- classification --------------------------------------------------

    @cached_property
    def classifier(self) -> ClassifierRun:
        k = self.config["classify"]
        labeled = cls.load_labeled_topics(self.config.require_path("labeled_topics"))
        X, vec = cls.build_features(labeled, k["country_encoding"])
        y = np.array([t.category for t in labeled])
        grid = cls.make_grid(k["C_grid"], k["kernels"], k["rbf_gammas"])
        res = cls.train_svm(X, y, grid, k["folds"], k["test_fraction"], k["k_neighbors"], self.seed)
        res.model.manifest["country_encoding"] = k["country_encoding"]
        report = cls.evaluate(res.y_test, res.model.predict(res.X_test))
        return ClassifierRun(vec, res, report)

    @cached_property
    def categories(self) -> dict[tuple[str, dt.date, int], int]:
        """Predicted category per valid cluster, keyed by (region, day, cluster_id)."""
        run = self.classifier
        out = {}
        for (region, day), slice_ in self.day_topics.items():
            valid = [c for c in slice_.clusters if c.valid]
            if not valid:
                continue
            if region not in run.vectorizer.countries:
                raise ConfigError(f"region {region!r} has no country code in the classifier")
            X = np.array([run.vectorizer.transform_one(c.words, region) for c in valid])
            for c, label in zip(valid, run.result.model.predict(X)):
                out[(region, day, c.cluster_id)] = int(label)
        return out

    @cached_property
    def category_rates(self) -> dict[str, list[tuple[dt.date, list[float] | None, int]]]:
        return {r: category_rate(self.day_topics, self.categories, r, self.topic_days)
                for r in self.topic_regions}

    # -- word frequencies --------------------------------------------------

    def word_frequencies(self, region: str) -> dict[str, list[tuple[str, int]]]:
        periods = self.periods[region]
        windows = {"study": epi.DateInterval(self.window[0],
                                             self.window[1] + dt.timedelta(days=1))}
        if not isinstance(periods, str):
            windows.update(periods.intervals())
        out = {}
        for name, iv in windows.items():
            counts = Counter(w for t in self.tweets_by_region[region] if t.date in iv
                             for w in self.tokens[t.tweet_id])
            out[name] = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return out


def category_rate(day_topics, categories, region: str, days: Sequence[dt.date]):
    """Per-day category shares (percent) of tweets in valid, classified topics.

    ``categories`` maps (region, day, cluster_id) to a label. Returns
    ``[(day, shares or None, volume)]``; shares is None on days without
    classified volume.
    """
    out = []
    for d in days:
        slice_ = day_topics.get((region, d))
        counts = np.zeros(cls.features.N_CATEGORIES)
        if slice_ is not None:
            for c in slice_.clusters:
                label = categories.get((region, d, c.cluster_id))
                if c.valid and label is not None:
                    counts[label - 1] += len(c.member_ids)
        total = counts.sum()
        shares = (100.0 * counts / total).tolist() if total > 0 else None
        out.append((d, shares, int(total)))
    return out
