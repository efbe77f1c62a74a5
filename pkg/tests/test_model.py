import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shortspam.errors import DatasetError, InvalidURLError
from shortspam.model import (
    ClickEvent,
    Dataset,
    EncoderKind,
    EncoderProfile,
    Label,
    ShortLink,
    dumps_dataset,
    load_dataset,
    loads_dataset,
    registrable_domain,
    write_dataset,
)


def jl(*records):
    return "".join(json.dumps(r) + "\n" for r in records)


ENC = {"type": "encoder", "encoder_id": "alice", "kind": "regular"}


def link(h, t=1000, enc=("alice",), **kw):
    return {"type": "link", "global_hash": h, "long_url": f"http://example.com/{h}",
            "created_at": t, "encoder_ids": list(enc), **kw}


def click(h, t, ref=""):
    return {"type": "click", "global_hash": h, "clicked_at": t, "referrer_domain": ref}


@pytest.mark.parametrize(
    "url, domain",
    [
        ("http://blog.bitly.com/post/x", "bitly.com"),
        ("http://timesfancy.in/a?b=c", "timesfancy.in"),
        ("http://192.0.2.7/p", "192.0.2.7"),
        ("https://www.bbc.co.uk/news", "bbc.co.uk"),
        ("HTTP://WWW.Example.COM:8080/", "example.com"),
        ("http://a.b.unknowntld/x", "b.unknowntld"),
    ],
)
def test_registrable_domain(url, domain):
    assert registrable_domain(url) == domain


@pytest.mark.parametrize("url", ["", "not a url", "example.com/x", "http:///path"])
def test_registrable_domain_rejects(url):
    with pytest.raises(InvalidURLError):
        registrable_domain(url)


def test_load_counts():
    text = jl(ENC, link("a"), link("b"), link("c"), click("a", 1100), click("b", 1200, "t.co"))
    ds = loads_dataset(text)
    assert (len(ds.links), len(ds.encoders), ds.n_clicks) == (3, 1, 2)
    assert ds.clicks_for("c") == ()


def test_click_before_creation_dropped():
    ds = loads_dataset(jl(ENC, link("a", t=1000), click("a", 999), click("a", 1000)))
    assert ds.n_clicks == 1
    assert ds.load_report.violations == 1


def test_empty_file():
    ds = loads_dataset("")
    assert len(ds) == 0 and ds.n_clicks == 0 and not ds.encoders


def test_drops_are_reported():
    text = jl(
        ENC,
        ENC,  # duplicate encoder
        link("a"),
        link("a"),  # duplicate link
        link("b", warning_page_count=-1),
        link("c", enc=("ghost",)),
        click("zzz", 2000),
    )
    ds = loads_dataset(text)
    assert list(ds.links) == ["a"]
    assert ds.load_report.violations == 5


def test_malformed_tolerance():
    good = [link(f"h{i}") for i in range(19)]
    # 2 malformed out of 22 lines is under 10%
    ds = loads_dataset(jl(ENC, *good) + "{not json\n" + jl({"type": "bogus"}))
    assert len(ds.links) == 19 and len(ds.load_report.malformed) == 2
    with pytest.raises(DatasetError):
        loads_dataset(jl(ENC, link("a")) + "oops\n")


def test_domain_rederived():
    rec = link("a")
    rec["domain"] = "wrong.org"
    ds = loads_dataset(jl(ENC, rec))
    assert ds.links["a"].domain == "example.com"


def test_build_matches_loader():
    enc = EncoderProfile("alice")
    l1 = ShortLink.create("a", "http://x.example.org/p", 10, ["alice"], 2, Label.MALICIOUS)
    ds = Dataset.build([l1], [enc], [ClickEvent("a", 5), ClickEvent("a", 20, "t.co")])
    assert ds.n_clicks == 1 and ds.load_report.violations == 1
    assert loads_dataset(dumps_dataset(ds)) == ds


def test_load_from_path_and_stream(tmp_path, capsys):
    ds = loads_dataset(jl(ENC, link("a"), click("a", 1001)))
    p = tmp_path / "d.jsonl"
    write_dataset(ds, p)
    assert load_dataset(p) == ds
    assert load_dataset(io.StringIO(p.read_text())) == ds
    write_dataset(ds, "-")
    assert capsys.readouterr().out == p.read_text()
    with pytest.raises(DatasetError, match="nope.jsonl"):
        load_dataset(tmp_path / "nope.jsonl")


names = st.text("abcdefgh", min_size=1, max_size=6)


@st.composite
def datasets(draw):
    encs = draw(st.lists(names, min_size=1, max_size=4, unique=True))
    kinds = [draw(st.sampled_from(list(EncoderKind))) for _ in encs]
    hashes = draw(st.lists(names, max_size=6, unique=True))
    links = []
    for h in hashes:
        links.append(ShortLink.create(
            h, f"http://{h}.example.net/{h}", draw(st.integers(0, 10**6)),
            draw(st.lists(st.sampled_from(encs), min_size=1, max_size=3)),
            draw(st.none() | st.integers(0, 50)),
            draw(st.none() | st.sampled_from(list(Label))),
        ))
    clicks = []
    for l in links:
        for _ in range(draw(st.integers(0, 3))):
            clicks.append(ClickEvent(l.global_hash, l.created_at + draw(st.integers(0, 10**5)),
                                     draw(st.sampled_from(["", "t.co", "facebook.com"]))))
    history = [(l.global_hash, draw(st.booleans())) for l in links]
    profiles = [EncoderProfile(e, k, None, (("twitter", e),), tuple(history)) for e, k in zip(encs, kinds)]
    return Dataset.build(links, profiles, clicks)


@settings(max_examples=60, deadline=None)
@given(datasets())
def test_roundtrip(ds):
    assert ds.load_report.violations == 0
    text = dumps_dataset(ds)
    again = loads_dataset(text)
    assert again == ds
    assert dumps_dataset(again) == text
