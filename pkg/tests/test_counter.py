import io
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modrewrite.counter import (
    STATIC,
    STREAMING,
    CounterTable,
    KeywordStats,
    SnapshotError,
    StreamParams,
    build_lists,
    dump_snapshot,
    hh_prune,
    hh_update,
    load_snapshot,
    stream_capacity,
)


def params(**kw):
    base = dict(alpha=0.9, beta=0.8, gamma=1.2, delta=1.5, theta=0.5, s_slack=0.1, n=1000, m=100)
    base.update(kw)
    return StreamParams(**base)


def test_empty_stream():
    t = CounterTable(3)
    assert t.entries == {} and t.items_seen == 0


def test_decrement_case_hand_trace():
    t = CounterTable(2).extend("aabca")
    assert t.entries == {"a": 2}
    assert t.items_seen == 5


def test_exact_when_room():
    t = CounterTable(5)
    for k in "aba":
        hh_update(t, k)
    assert t.entries == {"a": 2, "b": 1}


def test_prune_direct():
    p = params()
    t = CounterTable(5, {"a": 5, "b": 2}, 7)
    # threshold (1-S)*abt*n/m = 0.9*0.36*10 = 3.24
    assert hh_prune(t, p) == {"a": 5}
    assert hh_prune(CounterTable(5, {"a": 1}, 1), p) == {}


def test_prune_boundary_is_inclusive():
    p = params(n=1000, m=100, alpha=1.0, beta=1.0, theta=0.4, s_slack=0.5)
    assert p.prune_threshold() == pytest.approx(2.0)
    assert hh_prune(CounterTable(3, {"a": 2, "b": 1}, 3), p) == {"a": 2}


def test_params_reject_bad_combo():
    with pytest.raises(ValueError):
        params(gamma=0.5, delta=0.5)
    with pytest.raises(ValueError):
        params(s_slack=1.0)


def test_capacity_rounding_and_cap(caplog):
    p = params(m=200)
    assert stream_capacity(p) == math.ceil(200 / (0.1 * 0.36))
    assert stream_capacity(p, cap=10) == 10
    assert "cap" in caplog.text


def test_lists_formula():
    p = params(n=1000, m=100)
    counts = {("q", "p"): 50, ("r", "p"): 0}
    lists = build_lists(counts, KeywordStats({"q": 50, "r": 1}, {"q": 1, "r": 1}), p)
    # g = 50 * 100 / 1000 = 5.0 >= 0.36
    assert lists.L_p["p"] == {"q"}


def test_lists_ratio_hand():
    # choose counts so h = {q1: 0.4, q2: 0.1} with m/n = 1 and n_q = 1
    p = params(n=1, m=1, alpha=0.5, beta=0.8, theta=0.5, gamma=1.0, delta=1.0)
    assert p.ratio_threshold(STATIC) == pytest.approx(0.2)
    lists = build_lists({("q1", "p"): 0.4, ("q2", "p"): 0.1}, KeywordStats({"q1": 1, "q2": 1}, {"q1": 1, "q2": 1}), p)
    assert lists.L_prime_p["p"] == {"q1", "q2"}


def test_all_zero_page_gives_empty_lists():
    lists = build_lists({("q", "p"): 0}, KeywordStats({"q": 0}, {"q": 1}), params())
    assert lists.L_p["p"] == set() and lists.L_prime_p["p"] == set() and lists.final_p["p"] == set()


@given(st.dictionaries(st.tuples(st.sampled_from("abcd"), st.sampled_from("PQR")), st.integers(0, 50), min_size=1))
def test_list_invariants(counts):
    stats = KeywordStats.from_counts(counts)
    if not stats.n:
        return
    p = params(n=stats.n, m=stats.m)
    for mode in (STATIC, STREAMING):
        lists = build_lists(counts, stats, p, mode)
        for page, final in lists.final_p.items():
            assert final <= lists.L_p[page] and final <= lists.L_prime_p[page]
            row = {q: f / stats.n_q[q] for (q, pg), f in counts.items() if pg == page and f > 0}
            if row:
                top = max(row.values())
                assert {q for q, h in row.items() if h == top} <= lists.L_prime_p[page]


keys = st.lists(st.integers(0, 15), max_size=300)


@given(keys, st.integers(1, 20))
def test_undercount_bound(stream, cap):
    t = CounterTable(cap).extend(stream)
    exact = Counter(stream)
    assert len(t.entries) <= cap
    assert all(c >= 1 for c in t.entries.values())
    for k, n in exact.items():
        assert t[k] <= n
        assert n - t[k] <= len(stream) / (cap + 1)
    if cap >= len(exact):
        assert t.entries == dict(exact)


@given(keys, st.integers(1, 20))
def test_deterministic(stream, cap):
    assert CounterTable(cap).extend(stream) == CounterTable(cap).extend(stream)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.sampled_from("xyz"), st.integers(0, 5)), max_size=100), st.integers(1, 8))
def test_snapshot_roundtrip(stream, cap):
    t = CounterTable(cap).extend(stream)
    buf = io.BytesIO()
    dump_snapshot(t, buf)
    raw = buf.getvalue()
    back = load_snapshot(io.BytesIO(raw))
    assert back == t and back.items_seen == t.items_seen
    buf2 = io.BytesIO()
    dump_snapshot(back, buf2)
    assert buf2.getvalue() == raw


def test_snapshot_rejects_garbage():
    buf = io.BytesIO()
    dump_snapshot(CounterTable(2).extend("ab"), buf)
    raw = buf.getvalue()
    for bad in (b"XXXX" + raw[4:], raw[:-3], raw + b"\0", raw[:4] + b"\0\x09" + raw[6:]):
        with pytest.raises(SnapshotError):
            load_snapshot(io.BytesIO(bad))
