"""Run configuration: TOML file + defaults, resolved into typed settings."""

from __future__ import annotations

import copy
import datetime as dt
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SEED_ENV = "EPISIGNAL_SEED"


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "seed": None,
    "data": {
        "tweets": None,
        "cases": None,
        "gazetteer": None,
        "regions": None,
        "labeled_topics": None,
        "embeddings": None,
        "start": None,
        "end": None,
        "zero_fill_before": {},
    },
    "epi": {
        "smooth_window": 7,
        "smooth_sigma": 2.0,
        "sigma_rw": 0.15,
        "serial_interval": 7.0,
        "ci_mass": 0.9,
        "r_min": 0.0,
        "r_max": 6.0,
        "r_step": 0.01,
        "r0_min": 1.4,
        "r0_max": 2.5,
        "pre_peak_days": 30,
    },
    "corr": {
        "lag_min": -10,
        "lag_max": 5,
        "alpha": 0.05,
    },
    "textprep": {
        "languages": ["en", "fr", "de", "nl"],
        "query_keywords": ["coronavirus", "koronavirus", "corona", "covid-19", "covid"],
        "spell_correct": False,
        "dictionary": None,
        "pos_filter": False,
        "lexicon": None,
        "stemmer": "none",
    },
    "topics": {
        "regions": [],
        "start": None,
        "end": None,
        "embedder": "hashed",
        "embedding_dim": 64,
        "k_grid": list(range(1, 16)),
        "gamma_grid": [round(0.1 * i, 1) for i in range(1, 10)],
        "lda_iterations": 500,
        "quantization": 10,
        "alpha": None,
        "beta": 0.01,
        "latent_dim": 32,
        "hidden_dim": None,
        "epochs": 200,
        "lr": 1e-3,
        "batch_size": 32,
        "top_n": 10,
        "min_docs": 3,
    },
    "classify": {
        "country_encoding": "onehot",
        "folds": 10,
        "test_fraction": 0.2,
        "k_neighbors": 5,
        "C_grid": [0.1, 1.0, 10.0, 100.0],
        "kernels": ["linear", "rbf"],
        "rbf_gammas": [0.01, 0.1, 1.0],
    },
    "report": {
        "plot_region": None,
        "wordfreq_top": 50,
    },
}


def _merge(base: dict, override: Mapping, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key '{where}{key}'")
        if isinstance(base[key], dict) and key != "zero_fill_before":
            if not isinstance(value, Mapping):
                raise ConfigError(f"config key '{where}{key}' must be a table")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def as_date(value, key: str) -> dt.date | None:
    if value is None:
        return None
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError as exc:
        raise ConfigError(f"{key}: not an ISO date: {value!r}") from exc


@dataclass
class Config:
    values: dict
    base_dir: Path
    source: Path | None = None

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def path(self, key: str) -> Path | None:
        raw = self.values["data"][key]
        if raw in (None, ""):
            return None
        p = Path(raw)
        return p if p.is_absolute() else (self.base_dir / p)

    def require_path(self, key: str) -> Path:
        p = self.path(key)
        if p is None:
            raise ConfigError(f"data.{key} is not configured")
        if not p.exists():
            raise ConfigError(f"data.{key}: file not found: {p}")
        return p

    @property
    def start(self) -> dt.date | None:
        return as_date(self.values["data"]["start"], "data.start")

    @property
    def end(self) -> dt.date | None:
        return as_date(self.values["data"]["end"], "data.end")

    def snapshot(self) -> dict:
        """Plain JSON-ready copy with dates as strings and paths as written."""

        def plain(v):
            if isinstance(v, dict):
                return {k: plain(x) for k, x in sorted(v.items())}
            if isinstance(v, (list, tuple)):
                return [plain(x) for x in v]
            if isinstance(v, (dt.date, dt.datetime)):
                return v.isoformat()
            return v

        return plain(self.values)


def resolve_seed(cli_seed: int | None, config_seed: int | None,
                 env: Mapping[str, str] = os.environ) -> int:
    """Priority: command line, then config file, then EPISIGNAL_SEED, then 0."""
    if cli_seed is not None:
        return int(cli_seed)
    if config_seed is not None:
        return int(config_seed)
    raw = env.get(SEED_ENV)
    if raw not in (None, ""):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} is not an integer: {raw!r}") from exc
    return 0


def _validate(v: dict) -> None:
    e = v["epi"]
    if e["smooth_window"] < 1 or e["smooth_window"] % 2 == 0:
        raise ConfigError("epi.smooth_window must be a positive odd integer")
    if not e["r0_min"] < e["r0_max"]:
        raise ConfigError("epi.r0_min must be below epi.r0_max")
    c = v["corr"]
    if c["lag_min"] > c["lag_max"]:
        raise ConfigError("corr.lag_min exceeds corr.lag_max")
    t = v["topics"]
    if t["embedder"] not in ("hashed", "precomputed"):
        raise ConfigError(f"topics.embedder must be 'hashed' or 'precomputed', got {t['embedder']!r}")
    if t["embedder"] == "precomputed" and not v["data"]["embeddings"]:
        raise ConfigError("topics.embedder = 'precomputed' needs data.embeddings")
    if not t["k_grid"] or not t["gamma_grid"]:
        raise ConfigError("topics.k_grid and topics.gamma_grid must be non-empty")
    if any(not 0 < g < 1 for g in t["gamma_grid"]):
        raise ConfigError("topics.gamma_grid values must lie strictly between 0 and 1")
    k = v["classify"]
    if k["country_encoding"] not in ("onehot", "integer"):
        raise ConfigError("classify.country_encoding must be 'onehot' or 'integer'")
    for key in ("start", "end"):
        as_date(v["data"][key], f"data.{key}")
        as_date(t[key], f"topics.{key}")
    for region, when in v["data"]["zero_fill_before"].items():
        as_date(when, f"data.zero_fill_before.{region}")


def from_mapping(values: Mapping, base_dir: str | Path = ".", source: Path | None = None) -> Config:
    merged = _merge(DEFAULTS, values)
    _validate(merged)
    return Config(merged, Path(base_dir), source)


def load_config(path: str | Path) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            values = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_mapping(values, path.parent, path)
