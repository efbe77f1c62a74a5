"""Seeded synthetic spammer/benign link populations.

Each class has a simple generating profile (uniform, exponential and
geometric draws). With probability ``mix`` a link draws any one component
(domain, creation time, encoders, clicks) from the other class's profile,
which is the knob behind ``separation``: ``easy`` uses mix=0.05, ``hard``
uses mix=0.3. Every draw comes from one ``numpy`` generator in a fixed
order, so the output is a pure function of the parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from shortspam.enrich import (
    ALL_SOURCES,
    FixtureProvider,
    Source,
    VerdictStore,
    WhoisRecord,
    WhoisStore,
    whois_record_to_dict,
)
from shortspam.features import ALL_FEATURES, Mode, extract
from shortspam.model import (
    ClickEvent,
    Dataset,
    EncoderKind,
    EncoderProfile,
    Label,
    ShortLink,
    dumps_dataset,
)

DAY = 86400
HOUR = 3600
#: 2014-02-12T00:00:00Z, start of the link-creation window
WINDOW_START = 1392163200
WINDOW_DAYS = 32
#: WHOIS records are "fetched" two weeks after the window closes, so young
#: malicious domains measure well under 90 days old
RESOLVED_AT = WINDOW_START + (WINDOW_DAYS + 14) * DAY

MIX = {"easy": 0.05, "hard": 0.3}

PROFILES: dict[str, dict[str, Any]] = {
    "malicious": {
        "creation_gap_days": "uniform(0, 30)",
        "domain_updated": "never",
        "domain_alive_p": 0.17,
        "creation_hour": "uniform over {22, 23, 0, 1, 2, 3, 4, 5}",
        "encoder_count": "geometric(p=0.45)",
        "nonregular_encoder_p": 0.65,
        "clicks_per_clicked_link": "min(geometric(p=0.2), 60)",
        "first_click_lag": "3600 + exponential(mean=4 days)",
        "direct_click_p": 0.8,
        "warning_page_count": "geometric(p=0.05)",
    },
    "benign": {
        "creation_gap_days": "uniform(365, 5000)",
        "domain_updated": "p=0.5, uniformly between creation and 60 days before the link",
        "domain_alive_p": 0.97,
        "creation_hour": "uniform over 8..21",
        "encoder_count": "geometric(p=0.85)",
        "nonregular_encoder_p": 0.2,
        "clicks_per_clicked_link": "min(geometric(p=0.2), 60)",
        "first_click_lag": "exponential(mean=1.5 hours)",
        "direct_click_p": 0.15,
        "warning_page_count": "0",
    },
}

_MAL_HOURS = (22, 23, 0, 1, 2, 3, 4, 5)
_BEN_HOURS = tuple(range(8, 22))
_MAL_TLDS = ("in", "ru", "info", "biz", "xyz", "com")
_BEN_TLDS = ("com", "org", "net", "co.uk", "edu")
_SYLLABLES = ("ka", "lo", "mi", "ne", "su", "ta", "ri", "po", "ve", "zu", "fan", "cy", "times", "deal")
_REFERRERS = ("twitter.com", "facebook.com", "t.co", "reddit.com", "news.ycombinator.com")
_APPS = ("twitterfeed", "tweetdeck", "tweetbot", "hootsuite")
_DETAILS = ("phishing", "malware", "spam")


@dataclass(frozen=True)
class SynthParams:
    n_links: int = 2000
    malicious_fraction: float = 0.5
    zero_click_fraction_malicious: float = 0.4616
    zero_click_fraction_benign: float = 0.2
    seed: int = 7
    separation: str = "easy"

    def __post_init__(self) -> None:
        if self.n_links < 2:
            raise ValueError("n_links must be at least 2")
        if not 0 < self.malicious_fraction < 1:
            raise ValueError("malicious_fraction must be in (0, 1)")
        for f in (self.zero_click_fraction_malicious, self.zero_click_fraction_benign):
            if not 0 <= f <= 1:
                raise ValueError("zero-click fractions must be in [0, 1]")
        if self.separation not in MIX:
            raise ValueError(f"separation must be one of {sorted(MIX)}")

    @property
    def n_malicious(self) -> int:
        n = _round_half_up(self.n_links * self.malicious_fraction)
        return min(max(n, 1), self.n_links - 1)


@dataclass
class SynthOutput:
    dataset: Dataset
    whois: list[WhoisRecord]
    verdicts: dict[Source, list[dict[str, Any]]]
    truth: dict[str, Label]
    manifest: dict[str, Any] = field(default_factory=dict)

    def whois_store(self) -> WhoisStore:
        return WhoisStore.from_records(self.whois)

    def verdict_store(self) -> VerdictStore:
        store = VerdictStore()
        for src, entries in self.verdicts.items():
            store.add(FixtureProvider(src, entries))
        return store

    def labeled(self) -> Dataset:
        """The dataset with ground-truth labels filled in."""
        return self.dataset.with_links(
            replace(l, label=self.truth[h]) for h, l in self.dataset.links.items()
        )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _exact_subset(rng: np.random.Generator, n: int, fraction: float) -> set[int]:
    k = _round_half_up(n * fraction)
    return set(rng.choice(n, size=k, replace=False).tolist()) if k else set()


def generate(p: SynthParams | None = None) -> SynthOutput:
    p = p or SynthParams()
    rng = np.random.default_rng(p.seed)
    mix = MIX[p.separation]
    n_mal = p.n_malicious
    n_ben = p.n_links - n_mal

    is_mal = np.zeros(p.n_links, dtype=bool)
    is_mal[:n_mal] = True
    is_mal = rng.permutation(is_mal)
    mal_pos = np.flatnonzero(is_mal)
    ben_pos = np.flatnonzero(~is_mal)
    zero_click = {int(mal_pos[i]) for i in _exact_subset(rng, n_mal, p.zero_click_fraction_malicious)}
    zero_click |= {int(ben_pos[i]) for i in _exact_subset(rng, n_ben, p.zero_click_fraction_benign)}

    # encoder pools
    n_mal_users = max(2, n_mal // 8)
    n_ben_users = max(2, n_ben // 3)
    encoders: dict[str, dict[str, Any]] = {}

    def add_encoder(eid: str, kind: EncoderKind, spammer: bool) -> None:
        acct = None
        nets: list[tuple[str, str]] = []
        if kind is EncoderKind.REGULAR:
            acct = WINDOW_START - int(rng.integers(30, 2000)) * DAY
            n_tw = int(rng.integers(1, 4)) if spammer else int(rng.integers(0, 2))
            nets = [("twitter", f"tw_{eid}_{j}") for j in range(n_tw)]
        encoders[eid] = {"kind": kind, "acct": acct, "nets": nets, "history": []}

    mal_users = [f"u_m{i:05d}" for i in range(n_mal_users)]
    ben_users = [f"u_b{i:05d}" for i in range(n_ben_users)]
    for eid in mal_users:
        add_encoder(eid, EncoderKind.REGULAR, True)
    for eid in ben_users:
        add_encoder(eid, EncoderKind.REGULAR, False)
    add_encoder("anonymous", EncoderKind.ANONYMOUS, False)
    for app in _APPS:
        add_encoder(f"app_{app}", EncoderKind.THIRD_PARTY_APP, False)

    def profile(own_mal: bool) -> bool:
        return (not own_mal) if rng.random() < mix else own_mal

    links: list[ShortLink] = []
    clicks: list[ClickEvent] = []
    whois: list[WhoisRecord] = []
    truth: dict[str, Label] = {}

    for i in range(p.n_links):
        mal = bool(is_mal[i])
        gh = f"g{p.seed:x}{i:06d}"

        # creation time
        day = int(rng.integers(0, WINDOW_DAYS))
        hours = _MAL_HOURS if profile(mal) else _BEN_HOURS
        hour = int(hours[int(rng.integers(0, len(hours)))])
        created = WINDOW_START + day * DAY + hour * HOUR + int(rng.integers(0, HOUR))

        # domain and WHOIS
        dom_mal = profile(mal)
        name = "".join(_SYLLABLES[int(j)] for j in rng.integers(0, len(_SYLLABLES), size=2))
        tlds = _MAL_TLDS if dom_mal else _BEN_TLDS
        domain = f"{name}{i}.{tlds[int(rng.integers(0, len(tlds)))]}"
        if dom_mal:
            d_created = created - int(rng.uniform(0, 30) * DAY)
            d_updated = None
            alive = bool(rng.random() < 0.17)
        else:
            d_created = created - int(rng.uniform(365, 5000) * DAY)
            d_updated = None
            if rng.random() < 0.5:
                d_updated = d_created + int(rng.uniform(0, 1) * (created - 60 * DAY - d_created))
            alive = bool(rng.random() < 0.97)
        expires = d_created + int(rng.integers(1, 6)) * 365 * DAY
        whois.append(WhoisRecord(domain, d_created, d_updated, expires, RESOLVED_AT, alive))
        path = "".join(_SYLLABLES[int(j)] for j in rng.integers(0, len(_SYLLABLES), size=3))
        long_url = f"http://{'www.' if rng.random() < 0.5 else ''}{domain}/{path}?id={i}"

        # encoders
        enc_mal = profile(mal)
        count = int(rng.geometric(0.45 if enc_mal else 0.85))
        p_nonreg = 0.65 if enc_mal else 0.2
        pool = mal_users if enc_mal else ben_users
        ids: list[str] = []
        for _ in range(count):
            if rng.random() < p_nonreg:
                if rng.random() < 0.5:
                    eid = "anonymous"
                else:
                    eid = f"app_{_APPS[int(rng.integers(0, len(_APPS)))]}"
            else:
                eid = pool[int(rng.integers(0, len(pool)))]
            if eid not in ids:
                ids.append(eid)

        warn = int(rng.geometric(0.05)) if mal else 0
        links.append(ShortLink.create(gh, long_url, created, ids, warning_page_count=warn))
        truth[gh] = Label.MALICIOUS if mal else Label.BENIGN
        for eid in ids:
            encoders[eid]["history"].append((gh, mal))

        # clicks
        if i not in zero_click:
            click_mal = profile(mal)
            n_clicks = min(int(rng.geometric(0.2)), 60)
            if click_mal:
                first = created + HOUR + int(rng.exponential(4 * DAY))
            else:
                first = created + int(rng.exponential(1.5 * HOUR))
            p_direct = 0.8 if click_mal else 0.15
            t = first
            for j in range(n_clicks):
                if j:
                    t = t + int(rng.exponential(5 * DAY / n_clicks))
                ref = "" if rng.random() < p_direct else _REFERRERS[int(rng.integers(0, len(_REFERRERS)))]
                clicks.append(ClickEvent(gh, t, ref))

    enc_objs = [
        EncoderProfile(
            encoder_id=eid,
            kind=e["kind"],
            account_created_at=e["acct"],
            connected_networks=tuple(e["nets"]),
            link_history=tuple(e["history"]),
        )
        for eid, e in encoders.items()
    ]
    dataset = Dataset.build(links, enc_objs, clicks)
    verdicts = _verdicts(rng, links, truth)
    out = SynthOutput(dataset, whois, verdicts, truth)
    out.manifest = _manifest(p, out, len(zero_click & set(mal_pos.tolist())),
                             len(zero_click & set(ben_pos.tolist())))
    return out


def _verdicts(rng: np.random.Generator, links: list[ShortLink], truth: dict[str, Label]
              ) -> dict[Source, list[dict[str, Any]]]:
    out: dict[Source, list[dict[str, Any]]] = {s: [] for s in ALL_SOURCES}
    for link in links:
        if truth[link.global_hash] is Label.MALICIOUS:
            k = int(rng.integers(1, 4))
            for si in sorted(rng.choice(len(ALL_SOURCES), size=k, replace=False).tolist()):
                src = ALL_SOURCES[si]
                if src is Source.WARNING_PAGE:
                    subject = link.global_hash
                elif src is Source.SURBL or rng.random() < 0.5:
                    subject = link.domain
                else:
                    subject = link.long_url
                detail = _DETAILS[int(rng.integers(0, len(_DETAILS)))]
                out[src].append({"subject": subject, "flagged": True, "detail": detail})
        elif rng.random() < 0.1:
            src = ALL_SOURCES[int(rng.integers(0, len(ALL_SOURCES) - 1))]
            out[src].append({"subject": link.long_url, "flagged": False, "detail": "ok"})
    return out


def _overlap(a: np.ndarray, b: np.ndarray, bins: int = 20) -> float | None:
    a, b = a[~np.isnan(a)], b[~np.isnan(b)]
    if not a.size or not b.size:
        return None
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    if hi == lo:
        return 1.0
    ha, _ = np.histogram(a, bins=bins, range=(lo, hi))
    hb, _ = np.histogram(b, bins=bins, range=(lo, hi))
    return round(float(np.minimum(ha / a.size, hb / b.size).sum()), 6)


def _manifest(p: SynthParams, out: SynthOutput, zc_mal: int, zc_ben: int) -> dict[str, Any]:
    labeled = out.labeled()
    m = extract(labeled, out.whois_store(), Mode.FULL)
    X, y = m.to_numpy(), m.labels()
    overlap = {
        name: _overlap(X[y == 1, j], X[y == 0, j]) for j, name in enumerate(ALL_FEATURES)
    }
    return {
        "generator": "shortspam.synth",
        "params": asdict(p),
        "mix_probability": MIX[p.separation],
        "window_start": WINDOW_START,
        "window_days": WINDOW_DAYS,
        "whois_resolved_at": RESOLVED_AT,
        "profiles": PROFILES,
        "counts": {
            "links": len(out.dataset.links),
            "malicious": sum(1 for l in out.truth.values() if l is Label.MALICIOUS),
            "benign": sum(1 for l in out.truth.values() if l is Label.BENIGN),
            "zero_click_malicious": zc_mal,
            "zero_click_benign": zc_ben,
            "clicks": out.dataset.n_clicks,
            "encoders": len(out.dataset.encoders),
        },
        "overlap_coefficients": overlap,
    }


def write_output(out: SynthOutput, directory: str | Path) -> dict[str, Path]:
    """Write dataset, WHOIS fixture, per-provider verdicts and manifest."""
    d = Path(directory)
    (d / "verdicts").mkdir(parents=True, exist_ok=True)
    paths = {
        "dataset": d / "dataset.jsonl",
        "whois": d / "whois.jsonl",
        "verdicts": d / "verdicts",
        "manifest": d / "manifest.json",
    }
    paths["dataset"].write_text(dumps_dataset(out.dataset), encoding="utf-8")
    paths["whois"].write_text(
        "".join(json.dumps(whois_record_to_dict(r), separators=(",", ":")) + "\n" for r in out.whois),
        encoding="utf-8",
    )
    for src, entries in out.verdicts.items():
        (d / "verdicts" / f"{src.value}.jsonl").write_text(
            "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in entries), encoding="utf-8"
        )
    paths["manifest"].write_text(json.dumps(out.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths
