import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from shortspam import forensics as fx
from shortspam.enrich import WhoisRecord, WhoisStore
from shortspam.errors import ShortSpamError
from shortspam.model import ClickEvent, Dataset, EncoderProfile, ShortLink


def encoder(n_links, n_flagged, eid="e"):
    hist = tuple((f"{eid}{i}", i < n_flagged) for i in range(n_links))
    return EncoderProfile(eid, link_history=hist)


@pytest.mark.parametrize(
    "n, k, value, high", [(100, 100, 1.0, True), (100, 80, 0.8, False), (50, 0, 0.0, False)]
)
def test_suspicion_factor(n, k, value, high):
    r = fx.suspicion_factor(encoder(n, k))
    assert r.sus_fac == value and r.highly_suspicious is high
    assert r.ratio == Fraction(k, n)


def test_suspicion_factor_empty():
    with pytest.raises(ShortSpamError):
        fx.suspicion_factor(encoder(0, 0))


@given(st.lists(st.booleans(), min_size=1, max_size=120))
def test_suspicion_ratio_identity(flags):
    e = EncoderProfile("e", link_history=tuple((str(i), f) for i, f in enumerate(flags)))
    r = fx.suspicion_factor(e)
    assert r.ratio == Fraction(sum(flags), len(flags))
    assert r.sus_fac == sum(flags) / len(flags)
    assert r.highly_suspicious == all(flags)
    # flagging one more link never lowers the factor
    if not all(flags):
        i = flags.index(False)
        more = EncoderProfile("e", link_history=tuple(
            (str(j), True if j == i else f) for j, f in enumerate(flags)))
        assert fx.suspicion_factor(more).ratio > r.ratio


def test_susfac_distribution():
    all_one = [encoder(10, 10, f"a{i}") for i in range(4)]
    d = fx.susfac_distribution(all_one)
    assert d.count_at(0.99) == 0 and d.count_at(1.0) == 4
    assert fx.susfac_distribution([]).rows() == []
    d = fx.susfac_distribution([encoder(2, 1, "x"), encoder(3, 3, "y"), encoder(0, 0, "z")])
    assert d.count_at(0.5) == 1 and d.count_at(1.0) == 2 and d.skipped_empty == 1
    edge = fx.susfac_distribution([encoder(100, 99, "p")])
    assert edge.count_at(Fraction(99, 100)) == 1 and edge.count_at(0.98) == 0


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(1, 30), st.integers(0, 30)), max_size=15))
def test_susfac_cdf_monotone(pairs):
    encs = [encoder(n, min(k, n), f"e{i}") for i, (n, k) in enumerate(pairs)]
    d = fx.susfac_distribution(encs)
    if encs:
        assert d.counts == sorted(d.counts) and d.counts[-1] == len(encs)


def test_jaccard_examples():
    assert fx.jaccard({"a", "b"}, {"a", "b"}) == 1.0
    assert fx.jaccard({"a"}, {"b"}) == 0.0
    assert fx.jaccard({"a", "b", "c"}, {"b", "c", "d"}) == 0.5
    assert fx.jaccard(set(), set()) == 0.0


small_sets = st.frozensets(st.sampled_from("abcdefghij"), max_size=6)


@settings(max_examples=300)
@given(small_sets, small_sets, small_sets)
def test_jaccard_properties(a, b, c):
    assert fx.jaccard(a, b) == fx.jaccard(b, a)
    assert fx.jaccard(a, b) == float(oracles.jaccard(a, b))
    if a:
        assert fx.jaccard(a, a) == 1.0
    d = lambda x, y: 1 - oracles.jaccard(x, y)  # noqa: E731
    if (a or b) and (b or c) and (a or c):
        assert d(a, c) <= d(a, b) + d(b, c)


def test_communities_27_same_domain():
    accounts = {f"u{i:02d}": {"timesfancy.in"} for i in range(27)}
    r = fx.detect_communities(accounts)
    assert len(r.groups) == 1 and len(r.groups[0]) == 27
    assert r.score_variance == 0.0


def test_communities_disjoint():
    r = fx.detect_communities({"a": {"x"}, "b": {"y"}, "c": {"z"}})
    assert r.groups == [] and r.score_variance == 0.0


def test_two_cliques_variance():
    r = fx.detect_communities({"A": {"p"}, "B": {"p"}, "C": {"q"}, "D": {"q"}})
    assert r.groups == [["A", "B"], ["C", "D"]]
    assert len(r.pairwise_scores) == 6
    assert r.score_variance == pytest.approx(oracles.population_variance([1, 0, 0, 0, 0, 1]))
    assert r.score_variance == pytest.approx(2 / 9)


def test_communities_are_components():
    # A~B and B~C clear the threshold, A~C does not; the group is still {A,B,C}
    r = fx.detect_communities({"A": {1, 2}, "B": {2, 3}, "C": {3, 4}}, threshold=1 / 3)
    assert r.groups == [["A", "B", "C"]]
    with pytest.raises(ValueError):
        fx.detect_communities({}, threshold=0)


def liveness_ds(n_domains):
    links = [ShortLink.create(f"h{i}", f"http://d{i}.com/x", 10, ["e"], i) for i in range(n_domains)]
    return Dataset.build(links, [EncoderProfile("e")])


def test_liveness_fixture():
    ds = liveness_ds(6)
    store = WhoisStore.from_records([WhoisRecord(f"d{i}.com", alive=(i == 0)) for i in range(6)])
    r = fx.domain_liveness(ds, store)
    assert round(r.dead_fraction, 4) == 0.8333 and r.n_unknown == 0


def test_liveness_warning_total_and_unknown():
    links = [ShortLink.create("a", "http://dead.com/1", 1, ["e"], 3),
             ShortLink.create("b", "http://dead.com/2", 1, ["e"], 7),
             ShortLink.create("c", "http://live.com/", 1, ["e"], 100),
             ShortLink.create("d", "http://nowhois.com/", 1, ["e"])]
    ds = Dataset.build(links, [EncoderProfile("e")])
    store = WhoisStore.from_records([WhoisRecord("dead.com", alive=False), WhoisRecord("live.com", alive=True)])
    r = fx.domain_liveness(ds, store)
    assert r.n_domains == 3 and r.n_unknown == 1
    assert r.dead_warning_total == 10
    all_alive = WhoisStore.from_records([WhoisRecord(d, alive=True) for d in ("dead.com", "live.com", "nowhois.com")])
    assert fx.domain_liveness(ds, all_alive).dead_fraction == 0.0


def persistence_ds(n, clicked_after, cutoff=1000):
    links = [ShortLink.create(f"h{i:04d}", f"http://s{i}.com/", 0, ["e"], 1 + i % 7) for i in range(n)]
    clicks = [ClickEvent(f"h{i:04d}", cutoff - 1) for i in range(n)]
    clicks += [ClickEvent(f"h{i:04d}", cutoff + i) for i in range(clicked_after)]
    return Dataset.build(links, [EncoderProfile("e")], clicks)


def test_persistence():
    assert fx.persistence(persistence_ds(1000, 352), 1000, 1000).fraction == 0.352
    assert fx.persistence(persistence_ds(50, 0), 1000, 1000).fraction == 0.0
    r = fx.persistence(persistence_ds(50, 50), 1000, 1000)
    assert r.fraction == 1.0 and r.shortfall == 950


def test_persistence_ranks_by_warnings():
    links = [ShortLink.create("lo", "http://a.com/", 0, ["e"], 1),
             ShortLink.create("hi", "http://b.com/", 0, ["e"], 9),
             ShortLink.create("unk", "http://c.com/", 0, ["e"])]
    ds = Dataset.build(links, [EncoderProfile("e")], [ClickEvent("hi", 50)])
    r = fx.persistence(ds, top_n=1, cutoff=10)
    assert r.selected == ["hi"] and r.fraction == 1.0


def test_timeline():
    links = [ShortLink.create("a", "http://a.com/", 0, ["e"]), ShortLink.create("b", "http://b.com/", 40 * 86400, ["e", "f"])]
    ds = Dataset.build(links, [EncoderProfile("e"), EncoderProfile("f")],
                       [ClickEvent("a", 10), ClickEvent("a", 40 * 86400), ClickEvent("b", 41 * 86400)])
    assert fx.encoder_timeline(ds, "e") == [("1970-01", 1, 1), ("1970-02", 1, 2)]
    assert fx.encoder_timeline(ds, "f") == [("1970-02", 1, 1)]


def test_account_items(synth_easy):
    items = fx.account_items(synth_easy.dataset, "domain")
    assert set(items) == set(synth_easy.dataset.encoders)
    assert all(isinstance(v, set) for v in items.values())


@pytest.mark.parametrize("fmt", ["text", "json", "csv"])
def test_render_all(fmt):
    objs = [
        fx.susfac_distribution([encoder(4, 2)]),
        fx.detect_communities({"A": {"p"}, "B": {"p"}}),
        fx.domain_liveness(liveness_ds(2), WhoisStore()),
        fx.persistence(persistence_ds(5, 2), 5, 1000),
    ]
    for o in objs:
        out = fx.render(o, fmt)
        assert out.endswith("\n")
        if fmt == "json":
            json.loads(out)
