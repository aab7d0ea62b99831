import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modrewrite.associate import AssociationSet
from modrewrite.model import AttributeImportance, AVPair, Catalog, Product
from modrewrite.rewrite import (
    ItemsetCandidate,
    build_weighted_db,
    combine_disjoint,
    coverage,
    emit_rewrite,
    find_itemsets,
    grid_search,
    product_weight,
    read_rewrites,
    rewrite_for,
    theta_grid,
    write_rewrites,
)
from modrewrite.synth import brute_force_maximal_itemsets, random_small_instance

X, Y, Z_, W = AVPair("a", "x"), AVPair("b", "y"), AVPair("b", "z"), AVPair("a", "w")
UNIFORM = AttributeImportance.uniform(["a", "b"])


def test_hand_weights(hand_assoc, hand_catalog):
    assert product_weight(hand_assoc, hand_catalog, "p1") == pytest.approx(0.7)
    assert product_weight(hand_assoc, hand_catalog, "p2") == pytest.approx(0.3)
    assert product_weight(hand_assoc, hand_catalog, "p3") == pytest.approx(0.4)
    db = build_weighted_db(hand_assoc, hand_catalog)
    assert db.products == ("p1", "p2", "p3")
    assert db.total_weight == pytest.approx(1.4)


def test_weight_edge_cases(hand_catalog):
    none = AssociationSet("c", "m", ((AVPair("a", "q"), 1.0),))
    assert product_weight(none, hand_catalog, "p1") == 0.0
    assert len(build_weighted_db(none, hand_catalog)) == 0
    one = AssociationSet("c", "m", ((AVPair("b", "z"), 1.0),))
    assert product_weight(one, hand_catalog, "p2") == 1.0
    assert len(build_weighted_db(AssociationSet("c", "m", ()), hand_catalog)) == 0


def test_unmatched_entry_excluded_from_total(hand_catalog):
    assoc = AssociationSet("c", "m", ((X, 0.5), (AVPair("a", "nowhere"), 0.5)))
    db = build_weighted_db(assoc, hand_catalog)
    assert db.total_weight == pytest.approx(0.5)
    assert math.fsum(db.weight.values()) == pytest.approx(db.total_weight)


def test_find_itemsets_hand(hand_assoc, hand_catalog):
    db = build_weighted_db(hand_assoc, hand_catalog)
    assert db.support({X}) == pytest.approx(1.0)
    assert db.support({Y}) == pytest.approx(1.1)
    assert db.support({X, Y}) == pytest.approx(0.7)
    assert find_itemsets(db, 0.7) == {frozenset({X, Y})}
    assert find_itemsets(db, 1.5) == set()
    assert find_itemsets(db, 0.0) == {db.basket(p) for p in db.products}


def test_coverage_hand(hand_assoc, hand_catalog):
    db = build_weighted_db(hand_assoc, hand_catalog)
    one = coverage({X}, db, UNIFORM)
    assert (one.support_weight, one.attr_weight) == (pytest.approx(1.0), 1.0)
    two = coverage({X, Y}, db, UNIFORM)
    assert two.coverage == pytest.approx(1.4)
    assert coverage(set(), db, UNIFORM).coverage == 0.0
    zero = AttributeImportance({"a": 0.0, "b": 0.0, "c": 1.0})
    assert coverage({X, Y}, db, zero).coverage == 0.0


def test_grid_search_hand(hand_assoc, hand_catalog):
    db = build_weighted_db(hand_assoc, hand_catalog)
    top = grid_search(db, UNIFORM, 0.1)[0]
    assert top.avset == {X, Y} and top.coverage == pytest.approx(1.4)
    assert grid_search(build_weighted_db(AssociationSet("c", "m", ()), hand_catalog), UNIFORM, 0.1) == []


def test_theta_grid():
    assert theta_grid(0.25) == [0.25, 0.5, 0.75]
    assert len(theta_grid(0.1)) == 9
    with pytest.raises(ValueError):
        theta_grid(1.0)


def cand(avs, c):
    return ItemsetCandidate(frozenset(avs), c, len(avs), c)


def test_combine_disjoint():
    cs = [cand({X}, 0.4), cand({Y}, 0.3), cand({W}, 0.2)]
    assert combine_disjoint(cs) == {X, Y}
    assert combine_disjoint(cs[:1]) == {X}
    assert combine_disjoint([cand({X}, 0.4), cand({W}, 0.3)]) == {X}
    assert combine_disjoint(cs, max_attributes=1) == {X}


def test_emit_rewrite_surface_forms():
    sanyo = {AVPair("brand", "sanyo"), AVPair("type", "mini split")}
    assert emit_rewrite("air conditioners", sanyo) == "sanyo mini split air conditioners"
    assert emit_rewrite("handbags", {AVPair("material", "leather")}) == "leather handbags"
    assert emit_rewrite("tvs ", {AVPair("brand", " Sony  X ")}) == "sony x tvs"
    with pytest.raises(ValueError):
        emit_rewrite("c", set())


def test_rewrite_for_and_report(tmp_path, hand_assoc, hand_catalog):
    rw, cands, _db = rewrite_for(hand_assoc, hand_catalog, UNIFORM, 0.05)
    assert rw.avset == {X, Y} and rw.text == "x y c"
    write_rewrites([rw], tmp_path / "r.tsv")
    assert read_rewrites(tmp_path / "r.tsv") == [rw]


def _db(seed):
    cat, assoc, z = random_small_instance(np.random.default_rng(seed))
    return build_weighted_db(assoc, cat), z


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.1))
def test_find_itemsets_oracle(seed, ratio):
    db, _ = _db(seed)
    t = ratio * db.total_weight
    got = find_itemsets(db, t)
    assert got == brute_force_maximal_itemsets(db, t)
    for s in got:
        assert not any(s < other for other in got)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_support_antitone(seed):
    db, _ = _db(seed)
    for p in db.products:
        basket = sorted(db.basket(p))
        for i in range(len(basket)):
            assert db.support(basket[: i + 1]) <= db.support(basket[:i]) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10))
def test_score_scaling_keeps_ranking(seed, k):
    cat, assoc, z = random_small_instance(np.random.default_rng(seed))
    scaled = AssociationSet(assoc.category, assoc.modifier, tuple((av, s * k / (k + 1)) for av, s in assoc.scores))
    a = [c.avset for c in grid_search(build_weighted_db(assoc, cat), z, 0.05)]
    b = [c.avset for c in grid_search(build_weighted_db(scaled, cat), z, 0.05)]
    assert a == b
