"""The seven per-link features and the feature matrix.

Column order is fixed::

    domain_age_days, creation_gap_days, creation_hour, encoder_count,
    nonregular_encoder_fraction, creation_click_lag_secs, direct_click_fraction

``non_click`` mode keeps the first five. Missing values are ``None`` on
vectors and ``NaN`` in the numeric arrays; nothing is imputed.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import sys
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from shortspam.enrich import WhoisRecord, WhoisStore, lookup_whois
from shortspam.errors import DatasetError, InvalidRecordError
from shortspam.model import ClickEvent, Dataset, EncoderKind, Label, ShortLink

SECONDS_PER_DAY = 86400

WHOIS_FEATURES = ("domain_age_days", "creation_gap_days")
NON_CLICK_FEATURES = (
    "domain_age_days",
    "creation_gap_days",
    "creation_hour",
    "encoder_count",
    "nonregular_encoder_fraction",
)
CLICK_FEATURES = ("creation_click_lag_secs", "direct_click_fraction")
ALL_FEATURES = NON_CLICK_FEATURES + CLICK_FEATURES

_INT_FEATURES = {"creation_hour", "encoder_count"}


class Mode(str, enum.Enum):
    FULL = "full"
    NON_CLICK = "non_click"

    @property
    def feature_names(self) -> tuple[str, ...]:
        return ALL_FEATURES if self is Mode.FULL else NON_CLICK_FEATURES


# -- single features -------------------------------------------------------------


def f_domain_age(link: ShortLink, whois: WhoisRecord) -> float | None:
    if whois.created_at is None or whois.resolved_at is None:
        return None
    return (whois.resolved_at - whois.created_at) / SECONDS_PER_DAY


def f_creation_gap(link: ShortLink, whois: WhoisRecord) -> float | None:
    # may be negative when the domain was updated after the link was made
    dates = [d for d in (whois.created_at, whois.updated_at) if d is not None]
    if not dates:
        return None
    return (link.created_at - max(dates)) / SECONDS_PER_DAY


def f_creation_hour(link: ShortLink) -> int:
    return (link.created_at // 3600) % 24


def f_encoder_count(link: ShortLink) -> int:
    n = len(set(link.encoder_ids))
    if n == 0:
        raise InvalidRecordError(f"link {link.global_hash!r} has no encoders")
    return n


def f_nonregular_fraction(link: ShortLink, ds: Dataset) -> float:
    ids = sorted(set(link.encoder_ids))
    if not ids:
        raise InvalidRecordError(f"link {link.global_hash!r} has no encoders")
    nonregular = sum(ds.encoders[e].kind is not EncoderKind.REGULAR for e in ids)
    return nonregular / len(ids)


def f_click_lag(link: ShortLink, clicks: Sequence[ClickEvent]) -> float | None:
    if not clicks:
        return None
    return float(min(c.clicked_at for c in clicks) - link.created_at)


def f_direct_fraction(clicks: Sequence[ClickEvent]) -> float | None:
    if not clicks:
        return None
    return sum(1 for c in clicks if not c.referrer_domain) / len(clicks)


# -- vectors and matrices ----------------------------------------------------------


@dataclass(frozen=True)
class FeatureVector:
    global_hash: str
    domain_age_days: float | None
    creation_gap_days: float | None
    creation_hour: int
    encoder_count: int
    nonregular_encoder_fraction: float
    creation_click_lag_secs: float | None = None
    direct_click_fraction: float | None = None
    mode: Mode = Mode.FULL
    label: Label | None = None

    def value(self, name: str) -> float | None:
        if name not in ALL_FEATURES:
            raise KeyError(name)
        v = getattr(self, name)
        return None if v is None else float(v)

    def values(self, names: Sequence[str] | None = None) -> list[float | None]:
        return [self.value(n) for n in (names or self.mode.feature_names)]

    @property
    def missing_mask(self) -> tuple[bool, ...]:
        return tuple(v is None for v in self.values())


@dataclass
class FeatureMatrix:
    rows: list[FeatureVector] = field(default_factory=list)
    mode: Mode = Mode.FULL

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.mode.feature_names

    def __len__(self) -> int:
        return len(self.rows)

    def to_numpy(self) -> np.ndarray:
        """Float array (rows × active features) with NaN for missing values."""
        names = self.feature_names
        X = np.full((len(self.rows), len(names)), np.nan)
        for i, row in enumerate(self.rows):
            for j, name in enumerate(names):
                v = getattr(row, name)
                if v is not None:
                    X[i, j] = v
        return X

    def labels(self) -> np.ndarray:
        """1 for malicious, 0 for benign; raises if any row is unlabeled."""
        y = np.empty(len(self.rows), dtype=np.uint8)
        for i, row in enumerate(self.rows):
            if row.label is None:
                raise InvalidRecordError(f"row {row.global_hash!r} is unlabeled")
            y[i] = row.label is Label.MALICIOUS
        return y

    def subset(self, indices: Iterable[int]) -> FeatureMatrix:
        return FeatureMatrix([self.rows[i] for i in indices], self.mode)

    def project(self, mode: Mode | str) -> FeatureMatrix:
        """Drop to ``non_click`` mode (the reverse is impossible)."""
        mode = Mode(mode)
        if mode is self.mode:
            return self
        if mode is Mode.FULL:
            raise ValueError("cannot widen a non_click matrix to full mode")
        rows = [
            FeatureVector(
                **{**_vector_fields(r), "creation_click_lag_secs": None,
                   "direct_click_fraction": None, "mode": Mode.NON_CLICK}
            )
            for r in self.rows
        ]
        return FeatureMatrix(rows, Mode.NON_CLICK)


def _vector_fields(v: FeatureVector) -> dict:
    return {f: getattr(v, f) for f in FeatureVector.__dataclass_fields__}


def extract_link(
    link: ShortLink, ds: Dataset, whois_store: WhoisStore, mode: Mode | str = Mode.FULL
) -> FeatureVector:
    mode = Mode(mode)
    whois = lookup_whois(link.domain, whois_store)
    clicks = ds.clicks_for(link.global_hash)
    full = mode is Mode.FULL
    return FeatureVector(
        global_hash=link.global_hash,
        domain_age_days=f_domain_age(link, whois),
        creation_gap_days=f_creation_gap(link, whois),
        creation_hour=f_creation_hour(link),
        encoder_count=f_encoder_count(link),
        nonregular_encoder_fraction=f_nonregular_fraction(link, ds),
        creation_click_lag_secs=f_click_lag(link, clicks) if full else None,
        direct_click_fraction=f_direct_fraction(clicks) if full else None,
        mode=mode,
        label=link.label,
    )


def extract(ds: Dataset, whois_store: WhoisStore, mode: Mode | str = Mode.FULL) -> FeatureMatrix:
    """One row per link, in dataset order."""
    mode = Mode(mode)
    return FeatureMatrix([extract_link(l, ds, whois_store, mode) for l in ds.links.values()], mode)


# -- CSV -------------------------------------------------------------------------------


def _fmt(name: str, v: float | int | None) -> str:
    if v is None:
        return ""
    if name in _INT_FEATURES:
        return str(int(v))
    return repr(float(v))


def dumps_matrix(m: FeatureMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = m.feature_names
    w.writerow([*names, "label", "global_hash"])
    for r in m.rows:
        w.writerow([*(_fmt(n, getattr(r, n)) for n in names), r.label.value if r.label else "", r.global_hash])
    return buf.getvalue()


def write_matrix(m: FeatureMatrix, path: str | Path) -> None:
    text = dumps_matrix(m)
    if str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text, encoding="utf-8")


def loads_matrix(text: str, source: str = "<string>") -> FeatureMatrix:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError(f"{source}: empty feature file") from None
    names = tuple(header[:-2])
    if header[-2:] != ["label", "global_hash"]:
        raise DatasetError(f"{source}: header must end with label,global_hash")
    if names == ALL_FEATURES:
        mode = Mode.FULL
    elif names == NON_CLICK_FEATURES:
        mode = Mode.NON_CLICK
    else:
        raise DatasetError(f"{source}: unrecognised feature columns {list(names)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise DatasetError(f"{source}:{lineno}: expected {len(header)} cells, got {len(rec)}")
        try:
            vals: dict = {}
            for n, cell in zip(names, rec):
                if cell == "":
                    vals[n] = None
                elif n in _INT_FEATURES:
                    vals[n] = int(cell)
                else:
                    x = float(cell)
                    if math.isnan(x):
                        raise ValueError("NaN is not allowed; leave the cell empty")
                    vals[n] = x
            if vals["creation_hour"] is None or vals["encoder_count"] is None:
                raise ValueError("creation_hour and encoder_count are never missing")
            if vals["nonregular_encoder_fraction"] is None:
                raise ValueError("nonregular_encoder_fraction is never missing")
            label = Label(rec[-2]) if rec[-2] else None
        except ValueError as exc:
            raise DatasetError(f"{source}:{lineno}: {exc}") from None
        rows.append(FeatureVector(global_hash=rec[-1], mode=mode, label=label, **vals))
    return FeatureMatrix(rows, mode)


def read_matrix(path: str | Path) -> FeatureMatrix:
    if str(path) == "-":
        return loads_matrix(sys.stdin.read(), "<stdin>")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read feature file {path}: {exc.strerror or exc}") from None
    return loads_matrix(text, str(path))
