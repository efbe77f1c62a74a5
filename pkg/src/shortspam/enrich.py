"""WHOIS fixtures, blacklist verdict lookup and link labeling.

Every provider is backed by a JSONL fixture mapping a subject (URL or domain)
to a verdict. A link counts as malicious when any provider flags either its
long URL or its registrable domain; the shortener's own warning page is one
more provider (``warning_page``) that is also matched on the global hash.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from shortspam.errors import DatasetError, ProviderMissingError
from shortspam.model import Dataset, Label, ShortLink


class Source(str, enum.Enum):
    SAFEBROWSING = "safebrowsing"
    SURBL = "surbl"
    PHISHTANK = "phishtank"
    VIRUSTOTAL = "virustotal"
    WARNING_PAGE = "warning_page"


ALL_SOURCES: tuple[Source, ...] = tuple(Source)
_SOURCE_ORDER = {s: i for i, s in enumerate(ALL_SOURCES)}


@dataclass(frozen=True)
class WhoisRecord:
    domain: str
    created_at: int | None = None
    updated_at: int | None = None
    expires_at: int | None = None
    resolved_at: int | None = None
    alive: bool = False


@dataclass(frozen=True)
class BlacklistVerdict:
    source: Source
    subject: str
    flagged: bool
    detail: str = "ok"


def _epoch_or_none(val: Any) -> int | None:
    # fixtures carry integer epochs only; anything else is treated as absent
    if isinstance(val, bool) or not isinstance(val, int):
        return None
    return val


@dataclass
class WhoisStore:
    records: dict[str, WhoisRecord] = field(default_factory=dict)
    dropped: list[tuple[int, str]] = field(default_factory=list)

    @classmethod
    def from_records(cls, records: Iterable[WhoisRecord]) -> WhoisStore:
        return cls({r.domain.lower(): r for r in records})

    def __len__(self) -> int:
        return len(self.records)


def whois_record_from_dict(rec: Mapping[str, Any]) -> WhoisRecord:
    domain = rec.get("domain")
    if not isinstance(domain, str) or not domain:
        raise ValueError("WHOIS record needs a 'domain'")
    created = _epoch_or_none(rec.get("created_at"))
    updated = _epoch_or_none(rec.get("updated_at"))
    resolved = _epoch_or_none(rec.get("resolved_at"))
    if created is not None and updated is not None and created > updated:
        raise ValueError("created_at after updated_at")
    if created is not None and resolved is not None and created > resolved:
        raise ValueError("created_at after resolved_at")
    return WhoisRecord(
        domain=domain.lower(),
        created_at=created,
        updated_at=updated,
        expires_at=_epoch_or_none(rec.get("expires_at")),
        resolved_at=resolved,
        alive=bool(rec.get("alive", False)),
    )


def whois_record_to_dict(r: WhoisRecord) -> dict[str, Any]:
    return {
        "domain": r.domain,
        "created_at": r.created_at,
        "updated_at": r.updated_at,
        "expires_at": r.expires_at,
        "resolved_at": r.resolved_at,
        "alive": r.alive,
    }


def _jsonl(path: str | Path) -> Iterable[tuple[int, Any]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read fixture {path}: {exc.strerror or exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None


def load_whois_store(path: str | Path) -> WhoisStore:
    store = WhoisStore()
    for lineno, rec in _jsonl(path):
        try:
            r = whois_record_from_dict(rec)
        except (ValueError, AttributeError) as exc:
            store.dropped.append((lineno, str(exc)))
            continue
        store.records[r.domain] = r
    return store


def lookup_whois(domain: str, store: WhoisStore) -> WhoisRecord:
    """Fixture lookup; an unknown domain yields an empty, not-alive record."""
    rec = store.records.get(domain.lower())
    if rec is None:
        return WhoisRecord(domain=domain.lower())
    return rec


# -- blacklists ----------------------------------------------------------------


def subject_key(subject: str) -> str:
    return subject.strip().lower().rstrip("/")


@dataclass(frozen=True)
class _Entry:
    subject: str
    flagged: bool
    detail: str


class FixtureProvider:
    """Subject → verdict table loaded from one provider's JSONL fixture."""

    def __init__(self, source: Source | str, entries: Iterable[Mapping[str, Any]] = ()):
        self.source = Source(source)
        self._table: dict[str, _Entry] = {}
        for e in entries:
            self.add(e["subject"], bool(e.get("flagged", True)), str(e.get("detail", "")))

    def add(self, subject: str, flagged: bool, detail: str = "") -> None:
        key = subject_key(subject)
        prev = self._table.get(key)
        # a flagged entry is never masked by a later clean one
        if prev is None or (flagged and not prev.flagged):
            self._table[key] = _Entry(subject, flagged, detail or ("listed" if flagged else "ok"))

    @classmethod
    def load(cls, source: Source | str, path: str | Path) -> FixtureProvider:
        prov = cls(source)
        for lineno, rec in _jsonl(path):
            if not isinstance(rec, dict) or not isinstance(rec.get("subject"), str):
                raise DatasetError(f"{path}:{lineno}: verdict needs a string 'subject'")
            prov.add(rec["subject"], bool(rec.get("flagged", True)), str(rec.get("detail", "")))
        return prov

    def lookup(self, subject: str) -> tuple[bool, str] | None:
        e = self._table.get(subject_key(subject))
        return None if e is None else (e.flagged, e.detail)

    def entries(self) -> list[dict[str, Any]]:
        return [
            {"subject": e.subject, "flagged": e.flagged, "detail": e.detail}
            for e in self._table.values()
        ]


class CallableProvider:
    """Adapter for live clients: wraps ``fn(subject) -> (flagged, detail) | None``.

    Matching semantics are identical to :class:`FixtureProvider`; the callable
    is responsible only for answering single-subject queries.
    """

    def __init__(self, source: Source | str, fn: Callable[[str], tuple[bool, str] | None]):
        self.source = Source(source)
        self._fn = fn

    def lookup(self, subject: str) -> tuple[bool, str] | None:
        return self._fn(subject_key(subject))


Provider = FixtureProvider | CallableProvider


@dataclass
class VerdictStore:
    providers: dict[Source, Provider] = field(default_factory=dict)

    def add(self, provider: Provider) -> None:
        self.providers[provider.source] = provider

    def __contains__(self, source: object) -> bool:
        try:
            return Source(source) in self.providers  # type: ignore[arg-type]
        except ValueError:
            return False


def load_verdict_store(directory: str | Path, sources: Iterable[Source | str] | None = None) -> VerdictStore:
    """Load ``<directory>/<source>.jsonl`` for each requested source that exists."""
    directory = Path(directory)
    store = VerdictStore()
    wanted = ALL_SOURCES if sources is None else tuple(Source(s) for s in sources)
    for src in wanted:
        path = directory / f"{src.value}.jsonl"
        if path.exists():
            store.add(FixtureProvider.load(src, path))
    return store


def _subjects(link: ShortLink, source: Source) -> list[str]:
    subjects = [link.long_url, link.domain]
    if source is Source.WARNING_PAGE:
        subjects.insert(0, link.global_hash)
    return subjects


def query_blacklists(
    link: ShortLink, providers: Iterable[Source | str], store: VerdictStore
) -> list[BlacklistVerdict]:
    """One verdict per provider, checking the long URL and its domain."""
    wanted = sorted({Source(p) for p in providers}, key=_SOURCE_ORDER.__getitem__)
    if not wanted:
        raise ValueError("at least one provider is required")
    verdicts = []
    for src in wanted:
        prov = store.providers.get(src)
        if prov is None:
            raise ProviderMissingError(src.value)
        hit: tuple[str, bool, str] | None = None
        for subject in _subjects(link, src):
            res = prov.lookup(subject)
            if res is None:
                continue
            if res[0]:
                hit = (subject, True, res[1])
                break
            if hit is None:
                hit = (subject, False, res[1])
        if hit is None:
            verdicts.append(BlacklistVerdict(src, link.long_url, False, "ok"))
        else:
            verdicts.append(BlacklistVerdict(src, *hit))
    return verdicts


def label_link(verdicts: Iterable[BlacklistVerdict]) -> Label:
    verdicts = list(verdicts)
    if not verdicts:
        raise ValueError("label_link needs at least one verdict")
    return Label.MALICIOUS if any(v.flagged for v in verdicts) else Label.BENIGN


@dataclass
class LabelReport:
    malicious: int = 0
    benign: int = 0
    overwritten: int = 0
    changed: int = 0
    by_source: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "malicious": self.malicious,
            "benign": self.benign,
            "overwritten": self.overwritten,
            "changed": self.changed,
            "flagged_by_source": dict(self.by_source),
        }


def label_dataset(
    ds: Dataset, providers: Iterable[Source | str], store: VerdictStore
) -> tuple[Dataset, LabelReport]:
    providers = list(providers)
    report = LabelReport()
    new_links = []
    for link in ds.links.values():
        verdicts = query_blacklists(link, providers, store)
        label = label_link(verdicts)
        for v in verdicts:
            if v.flagged:
                report.by_source[v.source.value] = report.by_source.get(v.source.value, 0) + 1
        if link.label is not None:
            report.overwritten += 1
            report.changed += link.label != label
        if label is Label.MALICIOUS:
            report.malicious += 1
        else:
            report.benign += 1
        new_links.append(replace(link, label=label))
    return ds.with_links(new_links), report
