"""Account- and domain-level analyses over a loaded dataset.

* suspicion factor: share of an encoder's links that hit a warning page
* community detection: accounts linked by Jaccard similarity of their
  domain (or URL) sets, grouped as connected components
* domain liveness: dead-domain share and warning pages attributable to them
* warning-page persistence: do the most-warned links still get clicks
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any

from shortspam.enrich import WhoisStore, lookup_whois
from shortspam.errors import ShortSpamError
from shortspam.model import Dataset, EncoderProfile

DEFAULT_COMMUNITY_THRESHOLD = 0.5


# -- suspicion factor ---------------------------------------------------------------


@dataclass(frozen=True)
class SuspicionReport:
    encoder_id: str
    sus_fac: float
    link_total: int
    flagged_total: int
    highly_suspicious: bool

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.flagged_total, self.link_total)


def suspicion_factor(e: EncoderProfile) -> SuspicionReport:
    total = len(e.link_history)
    if total == 0:
        raise ShortSpamError(f"encoder {e.encoder_id!r} has no link history")
    flagged = sum(1 for _, f in e.link_history if f)
    return SuspicionReport(e.encoder_id, flagged / total, total, flagged, flagged == total)


def default_grid(step_hundredths: int = 1) -> list[Fraction]:
    return [Fraction(i, 100) for i in range(0, 101, step_hundredths)]


@dataclass
class SusfacDistribution:
    thresholds: list[Fraction]
    counts: list[int]
    n_encoders: int
    skipped_empty: int = 0

    def rows(self) -> list[tuple[float, int]]:
        return [(float(t), c) for t, c in zip(self.thresholds, self.counts)]

    def count_at(self, t: float | Fraction) -> int:
        t = Fraction(t).limit_denominator(10**6)
        for thr, c in zip(self.thresholds, self.counts):
            if thr == t:
                return c
        raise KeyError(f"threshold {t} is not on the grid")


def susfac_distribution(
    ds: Dataset | Iterable[EncoderProfile], grid: Sequence[Fraction | float] | None = None
) -> SusfacDistribution:
    """Cumulative count of encoders with suspicion factor ≤ t for each t.

    Comparison is exact (rational), so 99/100 falls at t=0.99 and not above.
    Encoders with an empty history have no ratio and are skipped.
    """
    encoders = ds.encoders.values() if isinstance(ds, Dataset) else ds
    ratios, skipped = [], 0
    for e in encoders:
        if e.link_history:
            r = suspicion_factor(e)
            ratios.append(r.ratio)
        else:
            skipped += 1
    if not ratios:
        return SusfacDistribution([], [], 0, skipped)
    thresholds = (
        default_grid()
        if grid is None
        else [Fraction(t).limit_denominator(10**6) for t in grid]
    )
    ratios.sort()
    counts = []
    for t in thresholds:
        counts.append(sum(1 for r in ratios if r <= t))
    return SusfacDistribution(list(thresholds), counts, len(ratios), skipped)


# -- communities -------------------------------------------------------------------------


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


@dataclass
class CommunityReport:
    groups: list[list[str]]
    pairwise_scores: dict[tuple[str, str], float]
    score_variance: float
    threshold: float
    min_size: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold,
            "min_size": self.min_size,
            "score_variance": self.score_variance,
            "groups": self.groups,
            "pairwise_scores": [
                {"a": a, "b": b, "jaccard": s} for (a, b), s in self.pairwise_scores.items()
            ],
        }


def _find(parent: dict[str, str], x: str) -> str:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def detect_communities(
    accounts: Mapping[str, Iterable[str]],
    threshold: float = DEFAULT_COMMUNITY_THRESHOLD,
    min_size: int = 2,
) -> CommunityReport:
    """Connected components of the graph with an edge where Jaccard ≥ threshold.

    Members of a group are connected through above-threshold pairs, which
    does not require every pair inside the group to clear the threshold.
    ``score_variance`` is the population variance over all account pairs.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    if min_size < 2:
        raise ValueError("min_size must be at least 2")
    ids = sorted(accounts)
    sets = {i: frozenset(accounts[i]) for i in ids}
    parent = {i: i for i in ids}
    scores: dict[tuple[str, str], float] = {}
    for x in range(len(ids)):
        for y in range(x + 1, len(ids)):
            a, b = ids[x], ids[y]
            s = jaccard(sets[a], sets[b])
            scores[(a, b)] = s
            if s >= threshold:
                ra, rb = _find(parent, a), _find(parent, b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    members: dict[str, list[str]] = {}
    for i in ids:
        members.setdefault(_find(parent, i), []).append(i)
    groups = sorted(
        (g for g in members.values() if len(g) >= min_size), key=lambda g: (-len(g), g[0])
    )
    vals = list(scores.values())
    if vals:
        mean = sum(vals) / len(vals)
        variance = sum((v - mean) ** 2 for v in vals) / len(vals)
    else:
        variance = 0.0
    return CommunityReport(groups, scores, variance, threshold, min_size)


def account_items(ds: Dataset, by: str = "domain") -> dict[str, set[str]]:
    """Per-encoder item sets: registrable domains (default) or long URLs.

    Draws on links naming the encoder plus resolvable hashes from its history.
    """
    if by not in ("domain", "url"):
        raise ValueError("by must be 'domain' or 'url'")
    items: dict[str, set[str]] = {e: set() for e in ds.encoders}
    pick = (lambda l: l.domain) if by == "domain" else (lambda l: l.long_url)
    for link in ds.links.values():
        for e in link.encoder_ids:
            items[e].add(pick(link))
    for e in ds.encoders.values():
        for h, _ in e.link_history:
            link = ds.links.get(h)
            if link is not None:
                items[e.encoder_id].add(pick(link))
    return items


# -- domain liveness ----------------------------------------------------------------------


@dataclass(frozen=True)
class DomainStatus:
    domain: str
    alive: bool
    known: bool
    link_count: int
    warning_total: int


@dataclass
class LivenessReport:
    domains: list[DomainStatus]

    @property
    def n_domains(self) -> int:
        return len(self.domains)

    @property
    def n_dead(self) -> int:
        return sum(1 for d in self.domains if not d.alive)

    @property
    def dead_fraction(self) -> float:
        return self.n_dead / self.n_domains if self.domains else 0.0

    @property
    def dead_warning_total(self) -> int:
        return sum(d.warning_total for d in self.domains if not d.alive)

    @property
    def n_unknown(self) -> int:
        return sum(1 for d in self.domains if not d.known)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_domains": self.n_domains,
            "n_dead": self.n_dead,
            "dead_fraction": self.dead_fraction,
            "dead_warning_total": self.dead_warning_total,
            "n_unknown_whois": self.n_unknown,
            "domains": [d.__dict__ for d in self.domains],
        }


def domain_liveness(ds: Dataset, whois_store: WhoisStore) -> LivenessReport:
    """Per-domain liveness; domains without a WHOIS record count as dead."""
    links: dict[str, int] = {}
    warnings: dict[str, int] = {}
    for link in ds.links.values():
        links[link.domain] = links.get(link.domain, 0) + 1
        warnings[link.domain] = warnings.get(link.domain, 0) + (link.warning_page_count or 0)
    out = []
    for domain in sorted(links):
        rec = lookup_whois(domain, whois_store)
        known = domain.lower() in whois_store.records
        out.append(DomainStatus(domain, rec.alive, known, links[domain], warnings[domain]))
    return LivenessReport(out)


# -- warning-page persistence ---------------------------------------------------------------


@dataclass
class PersistenceReport:
    top_n: int
    cutoff: int
    selected: list[str]
    clicked_after: list[str]
    shortfall: int = 0

    @property
    def fraction(self) -> float:
        return len(self.clicked_after) / len(self.selected) if self.selected else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "top_n": self.top_n,
            "cutoff": self.cutoff,
            "n_selected": len(self.selected),
            "n_clicked_after_cutoff": len(self.clicked_after),
            "fraction": self.fraction,
            "shortfall": self.shortfall,
            "clicked_after_cutoff": self.clicked_after,
        }


def persistence(ds: Dataset, top_n: int = 1000, cutoff: int = 0) -> PersistenceReport:
    """Among the ``top_n`` most-warned links, those clicked at or after ``cutoff``.

    Links with an unknown warning count are not ranked; ties break on hash.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    ranked = sorted(
        (l for l in ds.links.values() if l.warning_page_count is not None),
        key=lambda l: (-l.warning_page_count, l.global_hash),
    )
    selected = [l.global_hash for l in ranked[:top_n]]
    clicked = [
        h for h in selected if any(c.clicked_at >= cutoff for c in ds.clicks_for(h))
    ]
    return PersistenceReport(top_n, cutoff, selected, clicked, max(0, top_n - len(selected)))


# -- timelines ---------------------------------------------------------------------------------


def _month(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m")


def encoder_timeline(ds: Dataset, encoder_id: str) -> list[tuple[str, int, int]]:
    """(month, links created, clicks received) for one encoder, by month."""
    links: dict[str, int] = {}
    clicks: dict[str, int] = {}
    for link in ds.links.values():
        if encoder_id in link.encoder_ids:
            m = _month(link.created_at)
            links[m] = links.get(m, 0) + 1
            for c in ds.clicks_for(link.global_hash):
                cm = _month(c.clicked_at)
                clicks[cm] = clicks.get(cm, 0) + 1
    months = sorted(set(links) | set(clicks))
    return [(m, links.get(m, 0), clicks.get(m, 0)) for m in months]


# -- rendering -------------------------------------------------------------------------------


def render(obj: Any, fmt: str = "text") -> str:
    """Render any of the reports above as text, JSON or CSV."""
    if isinstance(obj, SusfacDistribution):
        if fmt == "json":
            return json.dumps(
                {"n_encoders": obj.n_encoders, "skipped_empty": obj.skipped_empty,
                 "cdf": [{"sus_fac_le": t, "encoders": c} for t, c in obj.rows()]},
                indent=2) + "\n"
        if fmt == "csv":
            return _csv(["sus_fac_le", "encoders"], obj.rows())
        lines = [f"{'Sus_Fac <=':>10}  {'encoders':>9}"]
        lines += [f"{t:>10.2f}  {c:>9}" for t, c in obj.rows()]
        return "\n".join(lines) + "\n"
    if isinstance(obj, CommunityReport):
        if fmt == "json":
            return json.dumps(obj.to_dict(), indent=2) + "\n"
        if fmt == "csv":
            return _csv(["group", "account"], [(i + 1, a) for i, g in enumerate(obj.groups) for a in g])
        lines = [f"{len(obj.groups)} communities (Jaccard >= {obj.threshold}, size >= {obj.min_size}); "
                 f"pairwise score variance {obj.score_variance:.6f}"]
        lines += [f"  [{i + 1}] {len(g)} accounts: {', '.join(g)}" for i, g in enumerate(obj.groups)]
        return "\n".join(lines) + "\n"
    if isinstance(obj, LivenessReport):
        if fmt == "json":
            return json.dumps(obj.to_dict(), indent=2) + "\n"
        if fmt == "csv":
            return _csv(["domain", "alive", "known", "link_count", "warning_total"],
                        [(d.domain, d.alive, d.known, d.link_count, d.warning_total) for d in obj.domains])
        return (f"domains: {obj.n_domains}\ndead: {obj.n_dead} ({100 * obj.dead_fraction:.2f}%)\n"
                f"warning pages on dead domains: {obj.dead_warning_total}\n"
                f"domains without WHOIS record: {obj.n_unknown}\n")
    if isinstance(obj, PersistenceReport):
        if fmt == "json":
            return json.dumps(obj.to_dict(), indent=2) + "\n"
        if fmt == "csv":
            return _csv(["global_hash", "clicked_after_cutoff"],
                        [(h, h in set(obj.clicked_after)) for h in obj.selected])
        note = f" (only {len(obj.selected)} ranked links available)" if obj.shortfall else ""
        return (f"top {obj.top_n} links by warning count{note}\n"
                f"clicked at/after {obj.cutoff}: {len(obj.clicked_after)} of {len(obj.selected)} "
                f"({100 * obj.fraction:.2f}%)\n")
    raise TypeError(f"cannot render {type(obj).__name__}")


def _csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
