import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modrewrite.labeler import DistributionBundle
from modrewrite.modifiers import (
    document_frequency,
    importance,
    read_ranking,
    top_modifiers,
    write_ranking,
)


def bundle(free, n_domains):
    domains = [f"d{i}" for i in range(n_domains)]
    return DistributionBundle("c", {d: 1 / n_domains for d in domains}, free, {}, {})


def test_document_frequency():
    b = bundle({("f", "d0"): 0.5, ("f", "d1"): 0.2}, 10)
    assert document_frequency(b, "f") == 2
    assert document_frequency(b, "missing") == 0
    full = bundle({("g", f"d{i}"): 0.1 for i in range(4)}, 4)
    assert document_frequency(full, "g") == 4


def test_importance_hand_value():
    b = bundle({("f", "d0"): 0.5, ("f", "d1"): 0.2}, 10)
    assert importance(b, "f") == pytest.approx(0.7 * math.log(10 / 3), abs=1e-12)
    assert importance(b, "f") == pytest.approx(0.8428, abs=5e-5)
    assert importance(b, "zero") == 0.0


def test_ubiquitous_token_negative():
    b = bundle({("f", "d0"): 0.5, ("f", "d1"): 0.5}, 2)
    assert importance(b, "f") == pytest.approx(math.log(2 / 3))
    assert importance(b, "f") < 0


def test_top_modifiers_edges():
    assert top_modifiers(bundle({}, 3)).ranked == ()
    b = bundle({("a", "d0"): 1.0, ("b", "d1"): 0.5, ("c", "d1"): 0.5}, 3)
    r = top_modifiers(b, k=10)
    assert sorted(r.tokens) == ["a", "b", "c"]
    # b and c tie exactly: lexicographic order
    assert r.tokens == ["a", "b", "c"]
    with pytest.raises(ValueError):
        top_modifiers(b, k=0)


def test_allow_and_deny():
    b = bundle({("a", "d0"): 1.0, ("b", "d1"): 0.5, ("c", "d1"): 0.5}, 3)
    assert top_modifiers(b, allow={"b", "c"}).tokens == ["b", "c"]
    assert top_modifiers(b, deny={"a"}).tokens == ["b", "c"]


def test_concentrated_beats_spread():
    free = {("conc", "d0"): 1.0}
    free.update({("spread", f"d{i}"): 1 / 3 for i in range(1, 4)})
    assert top_modifiers(bundle(free, 4)).tokens[0] == "conc"


profiles = st.dictionaries(
    st.tuples(st.sampled_from("abcdef"), st.sampled_from([f"d{i}" for i in range(5)])),
    st.floats(0.01, 1.0),
    min_size=1,
)


@given(profiles, st.floats(0.1, 10))
def test_ranking_scale_invariant(free, k):
    b = bundle(free, 5)
    scaled = bundle({key: p * k for key, p in free.items()}, 5)
    r1, r2 = top_modifiers(b, k=6), top_modifiers(scaled, k=6)
    s1, s2 = dict(r1.ranked), dict(r2.ranked)
    for x in s1:
        for y in s1:
            if s1[x] - s1[y] > 1e-9 * max(1, abs(s1[x])):
                assert s2[x] > s2[y]


@given(profiles)
def test_scores_sorted(free):
    scores = [s for _, s in top_modifiers(bundle(free, 5), k=6).ranked]
    assert scores == sorted(scores, reverse=True)


def test_ranking_roundtrip(tmp_path):
    r = top_modifiers(bundle({("a", "d0"): 0.3, ("b", "d1"): 0.1}, 2))
    write_ranking([r], tmp_path / "r.tsv")
    assert read_ranking(tmp_path / "r.tsv") == [r]
