"""Convert raw WHOIS text dumps into the epoch-second WHOIS fixture format.

Input is either a directory of ``<domain>.txt`` files (one raw WHOIS
response each) or a JSONL file of ``{"domain", "raw", "resolved_at"?,
"alive"?}`` objects. Dates are parsed with ``dateutil`` and stored as UTC
epoch seconds; anything unparsable is written as null, which the loader
treats as absent.

    python3 scripts/normalize_whois.py raw_dumps/ -o whois.jsonl --resolved-at 2014-07-01
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from datetime import timezone
from pathlib import Path

from dateutil import parser as dateparser

FIELDS = {
    "created_at": ("creation date", "created on", "created", "registered on", "registration time",
                   "domain registration date"),
    "updated_at": ("updated date", "last updated on", "last-update", "changed", "last modified"),
    "expires_at": ("registry expiry date", "registrar registration expiration date", "expiration date",
                   "expiry date", "expires on", "paid-till"),
}
_LINE = re.compile(r"^\s*([A-Za-z][A-Za-z /_-]*?)\s*:\s*(.+?)\s*$")
_NOT_FOUND = re.compile(r"no match|not found|no entries found|no data found|status:\s*free", re.I)


def to_epoch(text: str | int | None) -> int | None:
    if text is None or text == "":
        return None
    if isinstance(text, int):
        return text
    try:
        dt = dateparser.parse(str(text))
    except (ValueError, OverflowError):
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_raw(raw: str) -> dict[str, int | None]:
    """First parsable value per field; registry sections tend to come first."""
    out: dict[str, int | None] = {k: None for k in FIELDS}
    for line in raw.splitlines():
        m = _LINE.match(line)
        if not m:
            continue
        key = m.group(1).strip().lower()
        for field, names in FIELDS.items():
            if out[field] is None and key in names:
                out[field] = to_epoch(m.group(2))
    return out


def normalize(domain: str, raw: str, resolved_at: int | None, alive: bool | None) -> dict:
    dates = parse_raw(raw)
    if alive is None:
        alive = bool(raw.strip()) and not _NOT_FOUND.search(raw)
    return {"domain": domain.strip().lower(), **dates, "resolved_at": resolved_at, "alive": alive}


def iter_inputs(src: Path):
    if src.is_dir():
        for p in sorted(src.glob("*.txt")):
            yield p.stem, p.read_text(encoding="utf-8", errors="replace"), None, None
        return
    for lineno, line in enumerate(src.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        if "domain" not in rec:
            raise SystemExit(f"{src}:{lineno}: record has no 'domain'")
        yield rec["domain"], rec.get("raw", ""), to_epoch(rec.get("resolved_at")), rec.get("alive")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source", type=Path, help="directory of <domain>.txt files or a JSONL file")
    ap.add_argument("-o", "--out", default="-")
    ap.add_argument("--resolved-at", default=None,
                    help="lookup time for records that do not carry one (date or epoch)")
    args = ap.parse_args(argv)
    default_resolved = to_epoch(int(args.resolved_at) if args.resolved_at and args.resolved_at.isdigit()
                                else args.resolved_at)
    lines = []
    for domain, raw, resolved, alive in iter_inputs(args.source):
        rec = normalize(domain, raw, resolved if resolved is not None else default_resolved, alive)
        lines.append(json.dumps(rec, separators=(",", ":")))
    text = "".join(l + "\n" for l in lines)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    print(f"normalized {len(lines)} records", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
