import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modrewrite.model import (
    AVPair,
    Catalog,
    ParseError,
    Product,
    Token,
    ValidationError,
    dump_record,
    filter_attributes,
    load_products,
    match_products,
    parse_catalog_record,
    parse_trail_record,
)


def trail_line(**over):
    rec = {
        "query_id": "q1",
        "category": "tv",
        "tokens": [{"kind": "free", "text": "portable"}, {"kind": "av", "attr": "category", "value": "tv"}],
        "domains": ["www.target.com"],
    }
    rec.update(over)
    return json.dumps(rec)


def test_trail_roundtrip():
    t = parse_trail_record(trail_line())
    assert len(t.query.tokens) == 2 and t.domains == ("www.target.com",)
    assert t.query.tokens[0] == Token.free("portable")
    assert t.query.tokens[1] == Token.typed(AVPair("category", "tv"))
    assert parse_trail_record(dump_record(t.to_record())) == t


def test_domain_lowercased():
    assert parse_trail_record(trail_line(domains=["WWW.Target.COM"])).domains == ("www.target.com",)


def test_missing_domains_names_field():
    rec = json.loads(trail_line())
    del rec["domains"]
    with pytest.raises(ParseError) as ei:
        parse_trail_record(json.dumps(rec))
    assert ei.value.field == "domains"


def test_empty_domains_rejected():
    with pytest.raises(ValidationError):
        parse_trail_record(trail_line(domains=[]))


def test_no_tokens_rejected():
    with pytest.raises(ValidationError):
        parse_trail_record(trail_line(tokens=[]))


def test_multiword_free_text_split():
    t = parse_trail_record(trail_line(tokens=[{"kind": "free", "text": "  Extra   Large "}]))
    assert [tok.text for tok in t.query.tokens] == ["extra", "large"]


def test_catalog_nulls_preserved():
    p = parse_catalog_record('{"product_id":"p1","category":"tv","attrs":{"brand":"sony","size":null}}')
    assert p.value("brand") == "sony" and p.value("size") is None
    assert p.av_pairs() == {AVPair("brand", "sony")}


def test_catalog_empty_attrs():
    p = parse_catalog_record('{"product_id":"p1","category":"tv","attrs":{}}')
    assert p.av_pairs() == frozenset()


def test_catalog_duplicate_key():
    with pytest.raises(ParseError):
        parse_catalog_record('{"product_id":"p1","category":"tv","attrs":{"brand":"a","brand":"b"}}')


def test_catalog_missing_id():
    with pytest.raises(ParseError) as ei:
        parse_catalog_record('{"category":"tv","attrs":{}}')
    assert ei.value.field == "product_id"


def test_duplicate_product_ids_at_load(tmp_path):
    path = tmp_path / "cat.jsonl"
    line = '{"product_id":"p1","category":"tv","attrs":{}}\n'
    path.write_text(line + line)
    with pytest.raises(ValidationError):
        load_products(path)


def _catalog(rows):
    return Catalog.from_products("c", [Product(f"p{i}", "c", r) for i, r in enumerate(rows)])


def test_filter_strict_boundary():
    cat = _catalog([{"x": "1" if i == 0 else None, "y": "a"} for i in range(10)])
    assert cat.attribute_registry["x"] == 0.1
    out = filter_attributes(cat, 0.10)
    assert "x" not in out.attribute_registry
    assert all("x" not in p.attrs for p in out.products)


def test_filter_zero_threshold_keeps_nonempty():
    cat = _catalog([{"x": "1", "y": None}, {"x": None, "y": None}])
    assert set(filter_attributes(cat, 0.0).attribute_registry) == {"x"}


def test_filter_keeps_three_quarters():
    cat = _catalog([{"y": "a"}, {"y": "b"}, {"y": "c"}, {"y": None}])
    assert filter_attributes(cat, 0.10).attribute_registry == {"y": 0.75}


def test_match_products(hand_catalog):
    assert match_products(hand_catalog, set()) == {"p1", "p2", "p3"}
    assert match_products(hand_catalog, {AVPair("a", "x"), AVPair("b", "y")}) == {"p1"}


def test_match_null_excluded():
    cat = _catalog([{"a": None, "b": "q"}, {"a": "x", "b": "q"}])
    assert match_products(cat, {AVPair("a", "x")}) == {"p1"}
    assert match_products(cat, {AVPair("a", "x")}, null_matches=True) == {"p0", "p1"}


def test_match_unregistered(hand_catalog):
    with pytest.raises(ValidationError):
        match_products(hand_catalog, {AVPair("nope", "x")})


values = st.sampled_from(["x", "y", None])
rows = st.lists(st.fixed_dictionaries({"a": values, "b": values, "c": values}), min_size=1, max_size=8)


@given(rows, st.sets(st.sampled_from([AVPair(a, v) for a in "abc" for v in "xy"])), st.sampled_from([AVPair(a, v) for a in "abc" for v in "xy"]))
def test_match_antitone(rs, s, extra):
    cat = _catalog(rs)
    assert match_products(cat, s | {extra}) <= match_products(cat, s)


@given(rows, st.floats(0, 1))
def test_filter_idempotent(rs, t):
    once = filter_attributes(_catalog(rs), t)
    assert filter_attributes(once, t) == once


@given(rows)
def test_catalog_record_roundtrip(rs):
    for p in _catalog(rs).products:
        rec = p.to_record()
        shuffled = json.dumps(dict(reversed(list(rec.items()))))
        assert parse_catalog_record(shuffled) == p
