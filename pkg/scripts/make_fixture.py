"""Regenerate the bundled fixture under src/episignal/data/fixture/.

The fixture is synthetic: case counts follow a renewal-style growth model
with a hand-shaped R trajectory per location cell, tweet volume leads cases
by five days, and tweet/topic texts are drawn from per-category word lists.

    python scripts/make_fixture.py
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "episignal" / "data" / "fixture"
START = dt.date(2020, 1, 22)
END = dt.date(2020, 6, 5)
DAYS = [START + dt.timedelta(days=i) for i in range((END - START).days + 1)]
SEED = 20200122
LEAD = 5

# cell -> (country, subregion or None, date R starts to fall, R high, decline days,
#          peak cases/day, baseline tweets/day, languages)
# The plateau length is solved so that growth from MU0 reaches the peak.
CELLS = {
    "LU": ("Luxembourg", None, "2020-03-14", 3.4, 10, 230, 1.5, ("fr", "de", "en")),
    "WAL": ("Belgium", "Wallonia", "2020-03-12", 3.2, 14, 450, 0.8, ("fr",)),
    "BE": ("Belgium", None, "2020-03-08", 3.0, 50, 1400, 1.5, ("nl", "fr", "en")),
    "SAAR": ("Germany", "Saarland", "2020-03-14", 3.4, 12, 160, 0.5, ("de",)),
    "RLP": ("Germany", "Rhineland-Palatinate", "2020-03-13", 3.4, 12, 260, 0.6, ("de",)),
    "DE": ("Germany", None, "2020-03-02", 2.9, 42, 5200, 2.0, ("de", "en")),
    "LOR": ("France", "Lorraine", "2020-03-10", 3.3, 13, 520, 0.8, ("fr",)),
    "FR": ("France", None, "2020-03-05", 2.9, 50, 4300, 2.5, ("fr", "en")),
}
# tweets/day at the national peak; every cell of a country tweets at the same rate per case
PEAK_TWEETS = {"Luxembourg": 16, "Belgium": 24, "Germany": 26, "France": 28}
MU0 = 3.0  # steady imported cases per day before growth starts
R_LOW = 0.55
SERIAL_INTERVAL = 7.0

PLACES = {
    "LU": ["Luxembourg", "Luxembourg City", "Esch-sur-Alzette", "Differdange", "Lëtzebuerg"],
    "WAL": ["Namur", "Liège", "Charleroi", "Mons, Belgique", "Arlon", "Wallonie"],
    "BE": ["Bruxelles", "Brussels, Belgium", "Antwerpen", "Gent", "Leuven", "Belgique"],
    "SAAR": ["Saarbrücken", "Saarlouis", "Homburg", "Saarland"],
    "RLP": ["Trier", "Mainz", "Koblenz", "Kaiserslautern, Rheinland-Pfalz"],
    "DE": ["Berlin", "München", "Hamburg", "Köln", "Frankfurt am Main", "Deutschland"],
    "LOR": ["Moselle", "Metz", "Nancy", "Thionville", "Épinal", "Lorraine"],
    "FR": ["Paris", "Lyon", "Marseille", "Toulouse", "Lille", "France"],
}
NOISE_PLACES = ["Atlantis-99", "somewhere over the rainbow", "earth", "🌍", ""]

GAZETTEER = [
    # pattern, canonical, priority
    ("luxembourg", "Luxembourg", 10),
    ("luxembourg", "Luxembourg (province), Wallonia, Belgium", 1),
    ("letzebuerg", "Luxembourg", 5),
    ("luxembourg city", "Luxembourg City, Luxembourg", 5),
    ("esch sur alzette", "Esch-sur-Alzette, Luxembourg", 5),
    ("differdange", "Differdange, Luxembourg", 5),
    ("belgium", "Belgium", 5), ("belgique", "Belgium", 5), ("belgie", "Belgium", 5),
    ("wallonia", "Wallonia, Belgium", 5), ("wallonie", "Wallonia, Belgium", 5),
    ("namur", "Namur, Wallonia, Belgium", 5), ("liege", "Liège, Wallonia, Belgium", 5),
    ("charleroi", "Charleroi, Wallonia, Belgium", 5), ("mons", "Mons, Wallonia, Belgium", 5),
    ("arlon", "Arlon, Wallonia, Belgium", 5),
    ("bruxelles", "Brussels, Belgium", 5), ("brussels", "Brussels, Belgium", 5),
    ("antwerpen", "Antwerp, Flanders, Belgium", 5), ("gent", "Ghent, Flanders, Belgium", 5),
    ("leuven", "Leuven, Flanders, Belgium", 5),
    ("germany", "Germany", 5), ("deutschland", "Germany", 5),
    ("saarland", "Saarland, Germany", 5), ("saarbrucken", "Saarbrücken, Saarland, Germany", 5),
    ("saarlouis", "Saarlouis, Saarland, Germany", 5), ("homburg", "Homburg, Saarland, Germany", 5),
    ("rheinland pfalz", "Rhineland-Palatinate, Germany", 5),
    ("rhineland palatinate", "Rhineland-Palatinate, Germany", 5),
    ("trier", "Trier, Rhineland-Palatinate, Germany", 5),
    ("mainz", "Mainz, Rhineland-Palatinate, Germany", 5),
    ("koblenz", "Koblenz, Rhineland-Palatinate, Germany", 5),
    ("kaiserslautern", "Kaiserslautern, Rhineland-Palatinate, Germany", 5),
    ("berlin", "Berlin, Germany", 5), ("munchen", "Munich, Bavaria, Germany", 5),
    ("hamburg", "Hamburg, Germany", 5), ("koln", "Cologne, North Rhine-Westphalia, Germany", 5),
    ("frankfurt am main", "Frankfurt, Hesse, Germany", 5),
    ("france", "France", 5), ("lorraine", "Lorraine, France", 5),
    ("moselle", "Moselle, Lorraine, France", 5), ("metz", "Metz, Moselle, Lorraine, France", 5),
    ("nancy", "Nancy, Lorraine, France", 5), ("thionville", "Thionville, Moselle, Lorraine, France", 5),
    ("epinal", "Épinal, Lorraine, France", 5),
    ("paris", "Paris, Île-de-France, France", 5), ("lyon", "Lyon, Auvergne-Rhône-Alpes, France", 5),
    ("marseille", "Marseille, Provence-Alpes-Côte d'Azur, France", 5),
    ("toulouse", "Toulouse, Occitanie, France", 5), ("lille", "Lille, Hauts-de-France, France", 5),
]

REGIONS = [
    {"name": "GR", "members": ["Luxembourg", "Wallonia, Belgium", "Saarland, Germany",
                               "Rhineland-Palatinate, Germany", "Lorraine, France"]},
    {"name": "Luxembourg", "members": ["Luxembourg"]},
    {"name": "Belgium", "members": ["Belgium"]},
    {"name": "France", "members": ["France"]},
    {"name": "Germany", "members": ["Germany"]},
]

# category -> language -> words
VOCAB = {
    1: {"en": "wuhan china chinese beijing hubei outbreak quarantine evacuated market origin "
              "diamond princess cruise ship",
        "fr": "wuhan chine chinois pékin hubei épidémie rapatriés marché origine croisière",
        "de": "wuhan china chinesen peking hubei ausbruch rückholung markt ursprung kreuzfahrt",
        "nl": "wuhan china chinezen peking hubei uitbraak evacuatie markt oorsprong cruiseschip"},
    2: {"en": "symptoms mask masks handwashing hygiene fever cough vaccine treatment test "
              "testing hospital ventilator",
        "fr": "symptômes masque masques lavage mains gel fièvre toux vaccin traitement dépistage "
              "hôpital respirateur",
        "de": "symptome maske masken händewaschen hygiene fieber husten impfstoff behandlung "
              "testen krankenhaus beatmung",
        "nl": "symptomen mondkapje handen wassen hygiëne koorts hoest vaccin behandeling testen "
              "ziekenhuis beademing"},
    3: {"en": "cases deaths confirmed today ministry health figures toll hospitalised region "
              "update local",
        "fr": "cas décès confirmés aujourd'hui ministère santé chiffres bilan hospitalisés "
              "région point local",
        "de": "fälle todesfälle bestätigt heute ministerium gesundheit zahlen bilanz stationär "
              "landkreis aktuell",
        "nl": "gevallen doden bevestigd vandaag ministerie gezondheid cijfers balans "
              "opgenomen provincie update"},
    4: {"en": "italy spain usa trump iran korea lombardy global pandemic who world "
              "international",
        "fr": "italie espagne usa trump iran corée lombardie mondial pandémie oms monde "
              "international",
        "de": "italien spanien usa trump iran korea lombardei weltweit pandemie who welt "
              "international",
        "nl": "italië spanje vs trump iran korea lombardije wereldwijd pandemie who wereld "
              "internationaal"},
    5: {"en": "lockdown border borders closed schools closure frontier workers telework "
              "gatherings shops restrictions stayhome",
        "fr": "confinement frontière frontières fermées écoles fermeture frontaliers "
              "télétravail rassemblements commerces restrictions restezchezvous",
        "de": "ausgangssperre grenze grenzen geschlossen schulen schließung grenzgänger "
              "homeoffice versammlungen geschäfte einschränkungen bleibtzuhause",
        "nl": "lockdown grens grenzen gesloten scholen sluiting grensarbeiders thuiswerk "
              "samenkomsten winkels beperkingen blijfthuis"},
    6: {"en": "racism racist asian asians discrimination hate xenophobia stigma insult "
              "kungflu",
        "fr": "racisme raciste asiatique asiatiques discrimination haine xénophobie "
              "stigmatisation insulte",
        "de": "rassismus rassistisch asiatisch asiaten diskriminierung hass "
              "fremdenfeindlichkeit stigma beleidigung",
        "nl": "racisme racistisch aziatisch aziaten discriminatie haat xenofobie stigma "
              "belediging"},
    7: {"en": "music netflix football game meme prayer god joke weather birthday",
        "fr": "musique netflix football jeu mème prière dieu blague météo anniversaire",
        "de": "musik netflix fußball spiel meme gebet gott witz wetter geburtstag",
        "nl": "muziek netflix voetbal spel meme gebed god grap weer verjaardag"},
}
GENERAL = ("people time day week news new now crisis situation life family friends "
           "gens jour semaine nouvelles crise leute tag woche nachrichten krise mensen dag").split()
FILLERS = {"en": "the is a of in and to we are this for".split(),
           "fr": "le la les de des et est nous pour dans".split(),
           "de": "der die das und ist wir für in mit zu".split(),
           "nl": "de het een en is we voor in met van".split()}
CONFUSABLE = {3: 4, 4: 3, 2: 5, 5: 2, 1: 4, 6: 1, 7: 5}


def words(cat, lang):
    return VOCAB[cat][lang].split()


def plateau_days(r_hi: float, decline: int, peak: float) -> int:
    """Days at ``r_hi`` needed so that growth from MU0 tops out near ``peak``."""
    # log growth while R falls linearly from r_hi through 1
    ramp = (r_hi - 1.0) ** 2 / (r_hi - R_LOW) * decline / 2.0
    need = SERIAL_INTERVAL * np.log(peak / MU0) - ramp
    return max(5, int(round(need / (r_hi - 1.0))))


def r_path(fall: str, r_hi: float, plateau: int, decline: int) -> np.ndarray:
    s = dt.date.fromisoformat(fall) - dt.timedelta(days=plateau)
    out = np.zeros(len(DAYS))
    for i, d in enumerate(DAYS):
        t = (d - s).days
        if t < 0:
            out[i] = 1.0
        elif t < plateau:
            out[i] = r_hi
        elif t < plateau + decline:
            out[i] = r_hi + (R_LOW - r_hi) * (t - plateau) / decline
        else:
            out[i] = R_LOW + 0.25 * min(1.0, (t - plateau - decline) / 40)
    return out


def expected_cases(r: np.ndarray, mu0: float = MU0, serial_interval: float = SERIAL_INTERVAL) -> np.ndarray:
    mu = np.zeros(len(r))
    for i in range(len(r)):
        if np.isnan(r[i]):
            continue
        prev = mu[i - 1] if i and mu[i - 1] > 0 else mu0
        mu[i] = prev * np.exp((r[i] - 1.0) / serial_interval)
    return mu


def category_mix(day: dt.date, cell: str) -> np.ndarray:
    # shares for categories 1..7 drift from China news towards local policy
    t = (day - START).days
    early = max(0.0, 1.0 - t / 45)
    mid = np.exp(-((t - 55) / 18) ** 2)
    late = min(1.0, max(0.0, (t - 45) / 40))
    policy_bias = 1.6 if cell in ("LU", "WAL", "SAAR", "RLP", "LOR") else 1.0
    w = np.array([
        0.2 + 3.0 * early,
        0.4 + 1.2 * mid,
        0.3 + (1.2 if cell in ("FR", "LOR") else 0.6) * mid + 0.3 * late,
        0.3 + 0.8 * mid,
        0.2 + policy_bias * (1.2 * mid + 1.0 * late),
        0.15 + 0.4 * early,
        0.3,
    ])
    return w / w.sum()


def tweet_text(rng, cat: int, lang: str, extra_lang: str) -> str:
    vocab = words(cat, lang) + words(cat, extra_lang)[:4]
    n = int(rng.integers(4, 9))
    body = list(rng.choice(vocab, size=n))
    body += list(rng.choice(FILLERS[lang], size=int(rng.integers(1, 4))))
    if rng.random() < 0.3:
        body.append(str(rng.choice(GENERAL)))
    rng.shuffle(body)
    text = " ".join(body)
    kw = rng.choice(["#coronavirus", "COVID-19", "#covid19", "corona", "Coronavirus"])
    text = f"{text} {kw}" if rng.random() < 0.5 else f"{kw} {text}"
    if rng.random() < 0.25:
        text = f"RT @user{int(rng.integers(1000))}: {text}"
    if rng.random() < 0.3:
        text += f" https://t.co/{int(rng.integers(10 ** 8)):08d}"
    if rng.random() < 0.2:
        text += f" {int(rng.integers(1, 500))}"
    return text[0].upper() + text[1:] if rng.random() < 0.5 else text


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)

    cell_cases = {}
    for cell, (country, sub, fall, r_hi, decline, peak, *_rest) in CELLS.items():
        plateau = plateau_days(r_hi, decline, peak)
        mu = expected_cases(r_path(fall, r_hi, plateau, decline))
        cell_cases[cell] = rng.poisson(mu).astype(int)

    # France revises its count downwards on 3 June
    fr_idx = DAYS.index(dt.date(2020, 6, 3))
    cell_cases["FR"][fr_idx] = -int(cell_cases["FR"][fr_idx - 1] * 3 + 40)

    rows = []
    for i, d in enumerate(DAYS):
        national = {"Luxembourg": 0, "Belgium": 0, "Germany": 0, "France": 0}
        for cell, (country, sub, *_rest) in CELLS.items():
            national[country] += int(cell_cases[cell][i])
            if sub:
                deaths = int(max(0, cell_cases[cell][i]) * 0.03)
                rows.append((d.isoformat(), f"{sub}, {country}", int(cell_cases[cell][i]), deaths))
        for country, n in national.items():
            rows.append((d.isoformat(), country, n, int(max(0, n) * 0.03)))
    rows.sort()
    with open(OUT / "cases.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "region", "new_cases", "deaths"])
        w.writerows(rows)

    tweets = []
    users = {cell: [f"u{cell.lower()}{j:04d}" for j in range(60 + cfg[5] // 20)]
             for cell, cfg in CELLS.items()}
    national_peak = {}
    for cell, cfg in CELLS.items():
        national_peak[cfg[0]] = national_peak.get(cfg[0], 0) + np.maximum(cell_cases[cell], 0)
    rate = {c: PEAK_TWEETS[c] / v.max() for c, v in national_peak.items()}
    for cell, (country, sub, _fall, _r, _d, _peak, base, langs) in CELLS.items():
        cases = np.maximum(cell_cases[cell], 0).astype(float)
        # a light 3-day average keeps the lead visible through Poisson noise
        sm = np.convolve(cases, np.ones(3) / 3, mode="same")
        lead = np.concatenate([sm[LEAD:], np.repeat(sm[-1], LEAD)])
        scale = rate[country]
        for i, d in enumerate(DAYS):
            n = int(rng.poisson(base + scale * lead[i]))
            mix = category_mix(d, cell)
            for _ in range(n):
                lang = str(rng.choice(langs))
                cat = int(rng.choice(7, p=mix)) + 1
                user = str(rng.choice(users[cell]))
                place = str(rng.choice(PLACES[cell]))
                geo_known = rng.random() < 0.2
                tweets.append({
                    "tweet_id": "",
                    "full_text": tweet_text(rng, cat, lang, str(rng.choice(langs))),
                    "user_id": user,
                    "user_geo_original": place,
                    "user_geo": None,
                    "date": d.isoformat(),
                    "_geo_known": geo_known,
                })
    # a sprinkle of unlocatable users
    for j in range(120):
        d = DAYS[int(rng.integers(len(DAYS)))]
        tweets.append({"tweet_id": "", "full_text": tweet_text(rng, 7, "en", "en"),
                       "user_id": f"unoise{j:03d}", "user_geo_original": str(rng.choice(NOISE_PLACES)),
                       "user_geo": None, "date": d.isoformat(), "_geo_known": False})
    order = rng.permutation(len(tweets))
    tweets = [tweets[i] for i in order]
    tweets.sort(key=lambda t: t["date"])
    gaz = {p: c for p, c, _ in sorted(GAZETTEER, key=lambda e: -e[2])[::-1]}
    from episignal.ingest import Gazetteer, GazetteerEntry, format_path, parse_path

    g = Gazetteer(GazetteerEntry(p, parse_path(c), pr) for p, c, pr in GAZETTEER)
    with open(OUT / "tweets.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for k, t in enumerate(tweets):
            t["tweet_id"] = f"12{k:08d}"
            if t.pop("_geo_known"):
                geo = g.lookup(t["user_geo_original"])
                t["user_geo"] = format_path(geo) if geo else None
            fh.write(json.dumps(t, ensure_ascii=False) + "\n")
        # one truncated line to exercise lenient ingestion
        fh.write('{"tweet_id": "broken", "full_text": "truncat\n')
    del gaz

    # gazetteer: explicit entries plus every canonical path as its own pattern
    from episignal.ingest import normalize_text

    entries = {(p, c): pr for p, c, pr in GAZETTEER}
    for _, c, _pr in GAZETTEER:
        path = parse_path(c)
        for depth in range(1, len(path) + 1):
            suffix = format_path(path[-depth:])
            entries.setdefault((normalize_text(suffix), suffix), 4)
        entries.setdefault((normalize_text(c), c), 4)
    with open(OUT / "gazetteer.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["pattern", "canonical", "priority"])
        for (p, c), pr in sorted(entries.items()):
            w.writerow([p, c, pr])

    with open(OUT / "regions.json", "w", encoding="utf-8") as fh:
        json.dump({"regions": REGIONS}, fh, indent=2, ensure_ascii=False)
        fh.write("\n")

    write_labeled(rng)


def write_labeled(rng):
    sizes = {1: 75, 2: 62, 3: 55, 4: 50, 5: 48, 6: 30, 7: 30}
    countries = ["GR", "Luxembourg", "Belgium", "France", "Germany"]
    langs_of = {"GR": ("fr", "de"), "Luxembourg": ("fr", "de", "en"), "Belgium": ("nl", "fr"),
                "France": ("fr",), "Germany": ("de",)}
    rows = []
    for cat, n in sizes.items():
        for _ in range(n):
            country = str(rng.choice(countries))
            lang = str(rng.choice(langs_of[country]))
            pool = words(cat, lang) + words(cat, "en")
            n_own = int(rng.integers(2, 6))
            ws = list(rng.choice(pool, size=n_own, replace=False))
            n_conf = int(rng.integers(1, 4))
            ws += list(rng.choice(words(CONFUSABLE[cat], lang), size=n_conf, replace=False))
            other = int(rng.choice([c for c in VOCAB if c != cat]))
            ws += list(rng.choice(words(other, lang), size=int(rng.integers(0, 3)), replace=False))
            ws = list(dict.fromkeys(ws))
            ws += list(rng.choice(GENERAL, size=10 - len(ws), replace=False))
            rng.shuffle(ws)
            rows.append((" ".join(dict.fromkeys(ws)), country, cat))
    order = rng.permutation(len(rows))
    with open(OUT / "labeled_topics.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["top_words", "country", "category"])
        w.writerows(rows[i] for i in order)


if __name__ == "__main__":
    main()
