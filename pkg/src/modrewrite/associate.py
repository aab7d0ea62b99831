"""Association scores between modifiers and AV pairs, plus numeric bucketing.

Domains are marginalized out of the factorization
``P((a, v), m, d) = P(d) P(a|d) P(v|a,d) P(m|d)``.  Scores are then
normalized either over AV pairs for a fixed modifier (the default, a
proper ``P((a, v) | m)``) or over modifiers for a fixed AV pair.
"""

from __future__ import annotations

import bisect
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .labeler import DistributionBundle
from .model import AVPair, DataError, format_number

OVER_AV_PAIRS = "over_av_pairs"
OVER_MODIFIERS = "over_modifiers"
NORMALIZATIONS = (OVER_AV_PAIRS, OVER_MODIFIERS)

EQUAL_WIDTH = "equal_width"
EQUAL_DEPTH = "equal_depth"

ASSOC_HEADER = "# modrewrite associations v1"


@dataclass(frozen=True)
class AssociationSet:
    category: str
    modifier: str
    scores: tuple[tuple[AVPair, float], ...]
    normalization: str = OVER_AV_PAIRS

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.scores, key=lambda e: (-e[1], e[0])))
        object.__setattr__(self, "scores", ordered)
        for av, s in ordered:
            if not 0.0 <= s <= 1.0 + 1e-12:
                raise ValueError(f"score for {av} out of [0, 1]: {s}")

    def __len__(self) -> int:
        return len(self.scores)

    def __bool__(self) -> bool:
        return bool(self.scores)

    def as_dict(self) -> dict[AVPair, float]:
        return dict(self.scores)


class _JointIndex:
    """Per-domain lookups over a bundle, shared across many joint queries."""

    def __init__(self, bundle: DistributionBundle) -> None:
        self.domains = sorted(bundle.p_domain)
        self.p_d = bundle.p_domain
        self.p_a = bundle.p_attr_given_domain
        self.p_v = bundle.p_value_given_attr_domain
        self.p_m = bundle.p_modifier_given_domain

    def joint(self, av: AVPair, m: str) -> float:
        terms = []
        for d in self.domains:
            pm = self.p_m.get((m, d), 0.0)
            if not pm:
                continue
            pa = self.p_a.get((av.attribute, d), 0.0)
            pv = self.p_v.get((av.value, av.attribute, d), 0.0)
            terms.append(self.p_d[d] * pa * pv * pm)
        return math.fsum(terms)


def joint_probability(bundle: DistributionBundle, av: AVPair, m: str) -> float:
    """``sum_d P(d) P(a|d) P(v|a,d) P(m|d)``; absent entries contribute 0."""
    return _JointIndex(bundle).joint(av, m)


def association_scores(
    bundle: DistributionBundle,
    m: str,
    mode: str = OVER_AV_PAIRS,
) -> AssociationSet:
    if mode not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {mode!r}")
    index = _JointIndex(bundle)
    joints = {av: index.joint(av, m) for av in bundle.av_pairs}
    joints = {av: j for av, j in joints.items() if j > 0}
    if mode == OVER_AV_PAIRS:
        total = math.fsum(joints.values())
        scores = [(av, j / total) for av, j in joints.items()] if total > 0 else []
    else:
        scores = []
        modifiers = bundle.modifiers
        for av, j in joints.items():
            denom = math.fsum(index.joint(av, m2) for m2 in modifiers)
            if denom > 0:
                scores.append((av, min(1.0, j / denom)))
    return AssociationSet(bundle.category, m, tuple(scores), mode)


def all_associations(bundle: DistributionBundle, mode: str = OVER_AV_PAIRS) -> list[AssociationSet]:
    return [association_scores(bundle, m, mode) for m in bundle.modifiers]


def write_associations(sets: Iterable[AssociationSet], path: str | Path) -> None:
    rows = []
    for s in sets:
        for av, score in s.scores:
            rows.append((s.category, s.modifier, av.attribute, av.value, score, s.normalization))
    rows.sort(key=lambda r: (r[0], r[1], -r[4], r[2], r[3]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(ASSOC_HEADER + "\n")
        for cat, mod, a, v, score, norm in rows:
            fh.write(f"{cat}\t{mod}\t{a}\t{v}\t{score!r}\t{norm}\n")


def read_associations(path: str | Path) -> list[AssociationSet]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != ASSOC_HEADER:
        raise DataError(f"{path}: not a v1 association report")
    grouped: dict[tuple[str, str, str], list[tuple[AVPair, float]]] = {}
    for ln in lines[1:]:
        cat, mod, a, v, score, norm = ln.split("\t")
        grouped.setdefault((cat, mod, norm), []).append((AVPair(a, v), float(score)))
    return [AssociationSet(c, m, tuple(s), n) for (c, m, n), s in grouped.items()]


# --- numeric bucketing -----------------------------------------------------


@dataclass(frozen=True)
class BucketSpec:
    attribute: str
    strategy: str = EQUAL_WIDTH
    param: float = 1.0
    origin: float = 0.0

    def __post_init__(self) -> None:
        if self.strategy not in (EQUAL_WIDTH, EQUAL_DEPTH):
            raise ValueError(f"unknown bucket strategy {self.strategy!r}")
        if not self.param > 0:
            raise ValueError("bucket param must be positive")
        if self.strategy == EQUAL_DEPTH and int(self.param) != self.param:
            raise ValueError("equal_depth param is a bucket count")


def bucket_label(lo: float, hi: float) -> str:
    return f"{format_number(lo)} to {format_number(hi)}"


def width_bucket(x: float, width: float, origin: float = 0.0) -> tuple[float, float]:
    """The ``[lo, hi)`` equal-width interval containing ``x``."""
    i = math.floor((x - origin) / width)
    lo = origin + i * width
    # guard float division landing one bucket off
    if x < lo:
        i -= 1
    elif x >= origin + (i + 1) * width:
        i += 1
    return origin + i * width, origin + (i + 1) * width


def depth_cuts(values: Sequence[float], k: int) -> list[float]:
    """Quantile cut points for ``k`` equal-depth buckets (sorted, distinct)."""
    xs = sorted(values)
    n = len(xs)
    cuts = []
    for i in range(1, k):
        c = xs[math.ceil(i * n / k) - 1]
        if c < xs[-1] and (not cuts or c > cuts[-1]):
            cuts.append(c)
    return cuts


def bucket_numeric(values: Sequence[tuple[str, float]], spec: BucketSpec) -> dict[str, str]:
    """Map each product to a bucket label.

    Equal-width buckets are ``[origin + i*w, origin + (i+1)*w)``.  Equal-depth
    buckets cut at quantiles; a value equal to a cut point falls in the lower
    bucket, so those intervals are closed on the right.
    """
    for pid, x in values:
        if not isinstance(x, (int, float)) or not math.isfinite(x):
            raise DataError(f"product {pid!r}: non-finite value {x!r} for {spec.attribute!r}")
    if spec.strategy == EQUAL_WIDTH:
        return {pid: bucket_label(*width_bucket(x, spec.param, spec.origin)) for pid, x in values}
    if not values:
        raise DataError(f"equal_depth bucketing of {spec.attribute!r} needs values")
    xs = [x for _, x in values]
    cuts = depth_cuts(xs, int(spec.param))
    edges = [min(xs), *cuts, max(xs)]
    out = {}
    for pid, x in values:
        i = bisect.bisect_left(cuts, x)
        out[pid] = bucket_label(edges[i], edges[i + 1])
    return out


def bucket_value(x: float, spec: BucketSpec, cuts: Sequence[float] | None = None, edges: Sequence[float] | None = None) -> str:
    """Bucket a single value (e.g. a query's typed numeric token)."""
    if not math.isfinite(x):
        raise DataError(f"non-finite value {x!r} for {spec.attribute!r}")
    if spec.strategy == EQUAL_WIDTH:
        return bucket_label(*width_bucket(x, spec.param, spec.origin))
    if cuts is None or edges is None:
        raise ValueError("equal_depth needs the catalog's cut points")
    i = bisect.bisect_left(cuts, x)
    lo, hi = edges[i], edges[i + 1]
    return bucket_label(min(lo, x), max(hi, x))


def parse_numeric(text: str) -> float | None:
    try:
        x = float(text)
    except ValueError:
        return None
    return x


def bucket_specs_by_attr(specs: Iterable[BucketSpec]) -> Mapping[str, BucketSpec]:
    return {s.attribute: s for s in specs}
