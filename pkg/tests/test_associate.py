import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modrewrite.associate import (
    EQUAL_DEPTH,
    EQUAL_WIDTH,
    OVER_AV_PAIRS,
    OVER_MODIFIERS,
    AssociationSet,
    BucketSpec,
    association_scores,
    bucket_numeric,
    joint_probability,
    read_associations,
    write_associations,
)
from modrewrite.labeler import DistributionBundle
from modrewrite.model import AVPair, DataError
from modrewrite.synth import random_planted_model


@pytest.fixture
def two_domain():
    return DistributionBundle(
        "tv",
        {"d1": 0.5, "d2": 0.5},
        {("portable", "d1"): 0.8, ("portable", "d2"): 0.2},
        {("brand", "d1"): 1.0, ("brand", "d2"): 1.0},
        {("sony", "brand", "d1"): 1.0, ("lg", "brand", "d2"): 1.0},
        {("portable", "d1"): 0.8, ("portable", "d2"): 0.2},
    )


def test_joint_hand_values(two_domain):
    assert joint_probability(two_domain, AVPair("brand", "sony"), "portable") == pytest.approx(0.4)
    assert joint_probability(two_domain, AVPair("brand", "lg"), "portable") == pytest.approx(0.1)
    assert joint_probability(two_domain, AVPair("brand", "sony"), "absent") == 0.0
    assert joint_probability(two_domain, AVPair("size", "big"), "portable") == 0.0


def test_scores_over_av_pairs(two_domain):
    s = association_scores(two_domain, "portable")
    assert [av for av, _ in s.scores] == [AVPair("brand", "sony"), AVPair("brand", "lg")]
    assert s.as_dict()[AVPair("brand", "sony")] == pytest.approx(0.8)
    assert s.as_dict()[AVPair("brand", "lg")] == pytest.approx(0.2)


def test_zero_mass_modifier_empty(two_domain):
    assert not association_scores(two_domain, "nothing")


def test_over_modifiers_single_modifier_is_one(two_domain):
    s = association_scores(two_domain, "portable", OVER_MODIFIERS)
    assert all(v == pytest.approx(1.0) for _, v in s.scores)


@given(st.integers(0, 200))
def test_planted_normalization(seed):
    m = random_planted_model(seed, min_top_margin=0.0)
    b = m.bundle()
    for mod in b.modifiers:
        s = association_scores(b, mod)
        assert abs(math.fsum(v for _, v in s.scores) - 1.0) <= 1e-9
    for av in b.av_pairs:
        total = math.fsum(association_scores(b, mod, OVER_MODIFIERS).as_dict().get(av, 0.0) for mod in b.modifiers)
        assert abs(total - 1.0) <= 1e-9


@given(st.integers(0, 200), st.floats(0.1, 10))
def test_domain_scaling_invariance(seed, k):
    b = random_planted_model(seed, min_top_margin=0.0).bundle()
    scaled = DistributionBundle(b.category, {d: p * k for d, p in b.p_domain.items()}, b.p_free_given_domain,
                                b.p_attr_given_domain, b.p_value_given_attr_domain, b.p_modifier_given_domain)
    for mod in b.modifiers:
        x, y = association_scores(b, mod).as_dict(), association_scores(scaled, mod).as_dict()
        assert all(abs(x[a] - y[a]) <= 1e-12 for a in x)


def test_association_roundtrip(tmp_path, two_domain):
    s = association_scores(two_domain, "portable")
    write_associations([s], tmp_path / "a.tsv")
    assert read_associations(tmp_path / "a.tsv") == [s]


def test_score_range_checked():
    with pytest.raises(ValueError):
        AssociationSet("c", "m", ((AVPair("a", "x"), 1.5),))


def test_equal_width_buckets():
    vals = [(f"p{x}", float(x)) for x in (10, 30, 50, 70, 90, 110)]
    out = bucket_numeric(vals, BucketSpec("size", EQUAL_WIDTH, 40, 0))
    assert out == {
        "p10": "0 to 40", "p30": "0 to 40",
        "p50": "40 to 80", "p70": "40 to 80",
        "p90": "80 to 120", "p110": "80 to 120",
    }


def test_single_value_bucket():
    assert bucket_numeric([("p", 7.0)], BucketSpec("s", EQUAL_DEPTH, 3)) == {"p": "7 to 7"}
    assert bucket_numeric([("p", 7.0)], BucketSpec("s", EQUAL_WIDTH, 5)) == {"p": "5 to 10"}


def test_non_finite_names_product():
    with pytest.raises(DataError, match="p9"):
        bucket_numeric([("p9", math.inf)], BucketSpec("s"))


def test_equal_depth_ties_go_low():
    vals = [("a", 1.0), ("b", 2.0), ("c", 2.0), ("d", 3.0)]
    out = bucket_numeric(vals, BucketSpec("s", EQUAL_DEPTH, 2))
    assert out["b"] == out["c"] == out["a"] == "1 to 2"
    assert out["d"] == "2 to 3"


def _parse(label):
    lo, hi = label.split(" to ")
    return float(lo), float(hi)


@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=40), st.sampled_from([0.5, 3.0, 40.0]), st.floats(-50, 50))
def test_width_partition(xs, width, origin):
    out = bucket_numeric([(str(i), x) for i, x in enumerate(xs)], BucketSpec("s", EQUAL_WIDTH, width, origin))
    for i, x in enumerate(xs):
        lo, hi = _parse(out[str(i)])
        assert lo <= x < hi
        assert hi - lo == pytest.approx(width)


@given(st.lists(st.integers(-100, 100), min_size=1, max_size=40), st.integers(1, 6))
def test_depth_partition(xs, k):
    vals = [(str(i), float(x)) for i, x in enumerate(xs)]
    out = bucket_numeric(vals, BucketSpec("s", EQUAL_DEPTH, k))
    labels = sorted(set(out.values()), key=_parse)
    bounds = [_parse(lab) for lab in labels]
    assert bounds[0][0] == min(xs) and bounds[-1][1] == max(xs)
    for (_, h1), (l2, _) in zip(bounds, bounds[1:]):
        assert h1 == l2
    for i, x in enumerate(xs):
        lo, hi = _parse(out[str(i)])
        assert lo <= x <= hi
