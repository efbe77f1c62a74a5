"""Core records, the dataset container, JSONL ingestion, and domain extraction.

A dataset file is line-delimited JSON. Every line carries a ``"type"`` of
``link``, ``encoder`` or ``click``; timestamps are integer epoch seconds (UTC).
Records that violate an invariant are dropped (never repaired) and listed in
the :class:`LoadReport` attached to the loaded :class:`Dataset`.
"""

from __future__ import annotations

import enum
import io
import ipaddress
import json
import sys
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any
from urllib.parse import urlsplit

from publicsuffixlist import PublicSuffixList

from shortspam.errors import DatasetError, InvalidURLError

#: Share of malformed lines above which loading fails outright.
MALFORMED_TOLERANCE = 0.10

_PSL = PublicSuffixList(only_icann=True)


class Label(str, enum.Enum):
    MALICIOUS = "malicious"
    BENIGN = "benign"


class EncoderKind(str, enum.Enum):
    REGULAR = "regular"
    ANONYMOUS = "anonymous"
    THIRD_PARTY_APP = "third_party_app"


def registrable_domain(url: str) -> str:
    """Return the registrable domain (public suffix plus one label) of ``url``.

    IP-address hosts come back verbatim. Hosts that are themselves a public
    suffix, or single-label hosts, are returned as-is. Unknown suffixes are
    treated as one-label suffixes, i.e. the last two labels are kept.

    >>> registrable_domain("http://blog.bitly.com/post/x")
    'bitly.com'
    """
    if not isinstance(url, str) or not url.strip():
        raise InvalidURLError(f"not a URL: {url!r}")
    try:
        parts = urlsplit(url.strip())
        host = parts.hostname
    except ValueError as exc:
        raise InvalidURLError(f"unparsable URL {url!r}: {exc}") from None
    if not parts.scheme or not host:
        raise InvalidURLError(f"URL has no scheme or host: {url!r}")
    host = host.rstrip(".").lower()
    if not host:
        raise InvalidURLError(f"URL has an empty host: {url!r}")
    try:
        ipaddress.ip_address(host)
        return host
    except ValueError:
        pass
    return _PSL.privatesuffix(host) or host


@dataclass(frozen=True)
class ShortLink:
    global_hash: str
    long_url: str
    domain: str
    created_at: int
    encoder_ids: tuple[str, ...]
    warning_page_count: int | None = None
    label: Label | None = None

    @classmethod
    def create(
        cls,
        global_hash: str,
        long_url: str,
        created_at: int,
        encoder_ids: Iterable[str],
        warning_page_count: int | None = None,
        label: Label | str | None = None,
    ) -> ShortLink:
        """Build a link, deriving ``domain`` from ``long_url``."""
        return cls(
            global_hash=global_hash,
            long_url=long_url,
            domain=registrable_domain(long_url),
            created_at=created_at,
            encoder_ids=tuple(encoder_ids),
            warning_page_count=warning_page_count,
            label=Label(label) if label is not None else None,
        )


@dataclass(frozen=True)
class EncoderProfile:
    encoder_id: str
    kind: EncoderKind = EncoderKind.REGULAR
    account_created_at: int | None = None
    connected_networks: tuple[tuple[str, str], ...] = ()
    # (global_hash, warning_flagged); any length, the 100-link API cap is not enforced
    link_history: tuple[tuple[str, bool], ...] = ()


@dataclass(frozen=True)
class ClickEvent:
    global_hash: str
    clicked_at: int
    referrer_domain: str = ""  # empty means a direct click


@dataclass
class LoadReport:
    lines: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)
    dropped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return len(self.dropped)

    def summary(self) -> str:
        return (
            f"{self.lines} lines, {len(self.malformed)} malformed, "
            f"{len(self.dropped)} dropped for invariant violations"
        )


@dataclass(frozen=True, eq=True)
class Dataset:
    """Links, encoders and clicks; immutable after construction.

    ``clicks`` maps every link hash that has clicks to its click tuple, in
    file order. Links without clicks have no entry.
    """

    links: dict[str, ShortLink] = field(default_factory=dict)
    encoders: dict[str, EncoderProfile] = field(default_factory=dict)
    clicks: dict[str, tuple[ClickEvent, ...]] = field(default_factory=dict)
    load_report: LoadReport | None = field(default=None, compare=False, repr=False)

    def clicks_for(self, global_hash: str) -> tuple[ClickEvent, ...]:
        return self.clicks.get(global_hash, ())

    @property
    def n_clicks(self) -> int:
        return sum(len(c) for c in self.clicks.values())

    def __len__(self) -> int:
        return len(self.links)

    def with_links(self, links: Iterable[ShortLink]) -> Dataset:
        """Copy of this dataset with ``links`` replacing link records by hash."""
        new = dict(self.links)
        for link in links:
            new[link.global_hash] = link
        return Dataset(new, self.encoders, self.clicks, self.load_report)

    @classmethod
    def build(
        cls,
        links: Iterable[ShortLink] = (),
        encoders: Iterable[EncoderProfile] = (),
        clicks: Iterable[ClickEvent] = (),
    ) -> Dataset:
        """Validate in-memory records the same way the loader does."""
        records: list[tuple[int, dict[str, Any]]] = []
        for link in links:
            records.append((0, _link_to_record(link)))
        for enc in encoders:
            records.append((0, _encoder_to_record(enc)))
        for click in clicks:
            records.append((0, _click_to_record(click)))
        report = LoadReport(lines=len(records))
        return _assemble(records, report)


# -- serialization -----------------------------------------------------------


def _link_to_record(link: ShortLink) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "type": "link",
        "global_hash": link.global_hash,
        "long_url": link.long_url,
        "domain": link.domain,
        "created_at": link.created_at,
        "encoder_ids": list(link.encoder_ids),
    }
    if link.warning_page_count is not None:
        rec["warning_page_count"] = link.warning_page_count
    if link.label is not None:
        rec["label"] = link.label.value
    return rec


def _encoder_to_record(enc: EncoderProfile) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "type": "encoder",
        "encoder_id": enc.encoder_id,
        "kind": enc.kind.value,
    }
    if enc.account_created_at is not None:
        rec["account_created_at"] = enc.account_created_at
    rec["connected_networks"] = [list(pair) for pair in enc.connected_networks]
    rec["link_history"] = [[h, flagged] for h, flagged in enc.link_history]
    return rec


def _click_to_record(click: ClickEvent) -> dict[str, Any]:
    return {
        "type": "click",
        "global_hash": click.global_hash,
        "clicked_at": click.clicked_at,
        "referrer_domain": click.referrer_domain,
    }


def iter_records(ds: Dataset) -> Iterator[dict[str, Any]]:
    """Records in writer order: encoders, links, then clicks grouped by link."""
    for enc in ds.encoders.values():
        yield _encoder_to_record(enc)
    for link in ds.links.values():
        yield _link_to_record(link)
    for clicks in ds.clicks.values():
        for click in clicks:
            yield _click_to_record(click)


def dumps_dataset(ds: Dataset) -> str:
    return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in iter_records(ds))


def write_dataset(ds: Dataset, path: str | Path) -> None:
    """Write ``ds`` as JSONL; ``"-"`` writes to standard output."""
    text = dumps_dataset(ds)
    if str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text, encoding="utf-8")


# -- parsing -----------------------------------------------------------------


def _req_str(rec: dict[str, Any], key: str, allow_empty: bool = False) -> str:
    val = rec.get(key)
    if not isinstance(val, str) or (not allow_empty and not val):
        raise ValueError(f"field {key!r} must be a non-empty string")
    return val


def _epoch(val: Any, key: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ValueError(f"field {key!r} must be integer epoch seconds")
    return val


def _parse_link(rec: dict[str, Any]) -> ShortLink:
    enc = rec.get("encoder_ids", [])
    if not isinstance(enc, list) or not all(isinstance(e, str) and e for e in enc):
        raise ValueError("field 'encoder_ids' must be a list of strings")
    wpc = rec.get("warning_page_count")
    if wpc is not None and (isinstance(wpc, bool) or not isinstance(wpc, int)):
        raise ValueError("field 'warning_page_count' must be an integer")
    label = rec.get("label")
    if label is not None and label not in ("malicious", "benign"):
        raise ValueError(f"unknown label {label!r}")
    # 'domain' in the file is informational; it is always re-derived
    return ShortLink.create(
        global_hash=_req_str(rec, "global_hash"),
        long_url=_req_str(rec, "long_url"),
        created_at=_epoch(rec.get("created_at"), "created_at"),
        encoder_ids=enc,
        warning_page_count=wpc,
        label=label,
    )


def _parse_encoder(rec: dict[str, Any]) -> EncoderProfile:
    acct = rec.get("account_created_at")
    networks = rec.get("connected_networks", [])
    history = rec.get("link_history", [])
    if not isinstance(networks, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(s, str) for s in p)
        for p in networks
    ):
        raise ValueError("field 'connected_networks' must be a list of [network, id]")
    if not isinstance(history, list) or not all(
        isinstance(p, list) and len(p) == 2 and isinstance(p[0], str) and isinstance(p[1], bool)
        for p in history
    ):
        raise ValueError("field 'link_history' must be a list of [global_hash, flagged]")
    return EncoderProfile(
        encoder_id=_req_str(rec, "encoder_id"),
        kind=EncoderKind(rec.get("kind", "regular")),
        account_created_at=None if acct is None else _epoch(acct, "account_created_at"),
        connected_networks=tuple((a, b) for a, b in networks),
        link_history=tuple((h, f) for h, f in history),
    )


def _parse_click(rec: dict[str, Any]) -> ClickEvent:
    ref = rec.get("referrer_domain", "")
    if ref is None:
        ref = ""
    if not isinstance(ref, str) or "/" in ref or ":" in ref:
        raise ValueError("field 'referrer_domain' must be a bare domain")
    return ClickEvent(
        global_hash=_req_str(rec, "global_hash"),
        clicked_at=_epoch(rec.get("clicked_at"), "clicked_at"),
        referrer_domain=ref.lower(),
    )


_PARSERS = {"link": _parse_link, "encoder": _parse_encoder, "click": _parse_click}


def _assemble(records: list[tuple[int, dict[str, Any]]], report: LoadReport) -> Dataset:
    links: dict[str, ShortLink] = {}
    encoders: dict[str, EncoderProfile] = {}
    raw_clicks: list[tuple[int, ClickEvent]] = []
    raw_links: list[tuple[int, ShortLink]] = []

    for lineno, rec in records:
        kind = rec.get("type")
        parser = _PARSERS.get(kind)  # type: ignore[arg-type]
        if parser is None:
            report.malformed.append((lineno, f"unknown record type {kind!r}"))
            continue
        try:
            obj = parser(rec)
        except (ValueError, InvalidURLError) as exc:
            report.malformed.append((lineno, str(exc)))
            continue
        if isinstance(obj, EncoderProfile):
            if obj.encoder_id in encoders:
                report.dropped.append((lineno, f"duplicate encoder_id {obj.encoder_id!r}"))
            else:
                encoders[obj.encoder_id] = obj
        elif isinstance(obj, ShortLink):
            raw_links.append((lineno, obj))
        else:
            raw_clicks.append((lineno, obj))

    for lineno, link in raw_links:
        if link.global_hash in links:
            report.dropped.append((lineno, f"duplicate global_hash {link.global_hash!r}"))
        elif link.warning_page_count is not None and link.warning_page_count < 0:
            report.dropped.append((lineno, "negative warning_page_count"))
        elif missing := [e for e in link.encoder_ids if e not in encoders]:
            report.dropped.append((lineno, f"unknown encoder(s) {missing}"))
        else:
            links[link.global_hash] = link

    clicks: dict[str, list[ClickEvent]] = {}
    for lineno, click in raw_clicks:
        link = links.get(click.global_hash)
        if link is None:
            report.dropped.append((lineno, f"click for unknown link {click.global_hash!r}"))
        elif click.clicked_at < 0 or click.clicked_at < link.created_at:
            report.dropped.append((lineno, "click precedes link creation"))
        else:
            clicks.setdefault(click.global_hash, []).append(click)

    return Dataset(
        links=links,
        encoders=encoders,
        clicks={h: tuple(c) for h, c in clicks.items()},
        load_report=report,
    )


def _read_text(path: str | Path) -> str:
    if str(path) == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc.strerror or exc}") from None


def loads_dataset(text: str) -> Dataset:
    report = LoadReport()
    records: list[tuple[int, dict[str, Any]]] = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        if not line.strip():
            continue
        report.lines += 1
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            report.malformed.append((lineno, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(rec, dict):
            report.malformed.append((lineno, "record is not an object"))
            continue
        records.append((lineno, rec))
    ds = _assemble(records, report)
    if report.lines and len(report.malformed) / report.lines > MALFORMED_TOLERANCE:
        first = report.malformed[0]
        raise DatasetError(
            f"{len(report.malformed)} of {report.lines} lines malformed "
            f"(first at line {first[0]}: {first[1]})"
        )
    return ds


def load_dataset(path: str | Path | IO[str]) -> Dataset:
    """Load a JSONL dataset file (``"-"`` reads standard input)."""
    if hasattr(path, "read"):
        return loads_dataset(path.read())  # type: ignore[union-attr]
    return loads_dataset(_read_text(path))  # type: ignore[arg-type]
