"""Coverage-driven selection of AV sets and query rewrite emission.

Products matching the associated AV pairs form a weighted transaction
database: each association score ``s`` is spread evenly over the products
carrying that AV pair.  Maximal weighted itemsets over that database, mined
at a grid of support ratios, are the candidate AV sets; each is scored by

    coverage(S) = (weight mass of products matching S) * (sum of z over S's attributes)

The normalizing denominators (total weight, total importance) are constant
within one run and left out.
"""

from __future__ import annotations

import fnmatch
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .associate import AssociationSet
from .model import AttributeImportance, AVPair, Catalog, normalize_text

REWRITE_HEADER = "# modrewrite rewrites v1"
CANDIDATE_HEADER = "# modrewrite candidates v1"

# absolute slack when comparing a support mass against a threshold
SUPPORT_EPS = 1e-12


def meets_support(support: float, threshold: float) -> bool:
    """An itemset is frequent when some product carries it and its mass clears the threshold."""
    return support > 0 and support >= threshold - SUPPORT_EPS * max(1.0, abs(threshold))


@dataclass(frozen=True)
class WeightedDB:
    """Products touched by an association set, with their weights.

    ``attrs`` holds each product's attribute values (``None`` for nulls) so
    the database is self-contained for itemset mining and coverage.
    """

    products: tuple[str, ...] = ()
    weight: Mapping[str, float] = field(default_factory=dict)
    total_weight: float = 0.0
    attrs: Mapping[str, Mapping[str, str | None]] = field(default_factory=dict)
    null_matches: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight", MappingProxyType(dict(self.weight)))
        object.__setattr__(self, "attrs", MappingProxyType(dict(self.attrs)))

    def __len__(self) -> int:
        return len(self.products)

    def basket(self, pid: str) -> frozenset[AVPair]:
        return frozenset(AVPair(a, v) for a, v in self.attrs[pid].items() if v is not None)

    def matches(self, pid: str, avset: Iterable[AVPair]) -> bool:
        row = self.attrs[pid]
        for av in avset:
            v = row.get(av.attribute)
            if v is None:
                if not self.null_matches:
                    return False
            elif v != av.value:
                return False
        return True

    def support(self, avset: Iterable[AVPair]) -> float:
        avset = tuple(avset)
        return math.fsum(self.weight[p] for p in self.products if self.matches(p, avset))


@dataclass(frozen=True)
class ItemsetCandidate:
    avset: frozenset[AVPair]
    support_weight: float
    attr_weight: float
    coverage: float

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(av.attribute for av in self.avset)

    def sort_key(self) -> tuple:
        return (-self.coverage, len(self.avset), tuple(sorted(self.avset)))

    def normalized(self, total_weight: float, total_importance: float) -> float:
        """Coverage with both denominators restored, in [0, 1]."""
        if total_weight <= 0 or total_importance <= 0:
            return 0.0
        return self.coverage / (total_weight * total_importance)


def _index(catalog: Catalog, null_matches: bool) -> dict[AVPair, list[str]]:
    """AV pair -> ids of catalog products matching it, in catalog order."""
    index: dict[AVPair, list[str]] = {}
    for p in catalog.products:
        for a, v in p.attrs.items():
            if v is not None:
                index.setdefault(AVPair(a, v), []).append(p.product_id)
    return index


def _matching(catalog: Catalog, av: AVPair, index: dict, null_matches: bool) -> list[str]:
    if av.attribute not in catalog.attribute_registry:
        return []
    if not null_matches:
        return index.get(av, [])
    return [p.product_id for p in catalog.products if p.attrs.get(av.attribute) in (None, av.value)]


def product_weight(assoc: AssociationSet, catalog: Catalog, pid: str, null_matches: bool = False) -> float:
    index = _index(catalog, null_matches)
    terms = []
    for av, s in assoc.scores:
        matched = _matching(catalog, av, index, null_matches)
        if pid in matched:
            terms.append(s / len(matched))
    return math.fsum(terms)


def build_weighted_db(assoc: AssociationSet, catalog: Catalog, null_matches: bool = False) -> WeightedDB:
    index = _index(catalog, null_matches)
    contrib: dict[str, list[float]] = {}
    matched_scores = []
    for av, s in assoc.scores:
        if s <= 0:
            continue
        matched = _matching(catalog, av, index, null_matches)
        if not matched:
            continue
        matched_scores.append(s)
        share = s / len(matched)
        for pid in matched:
            contrib.setdefault(pid, []).append(share)
    order = [p.product_id for p in catalog.products if p.product_id in contrib]
    weight = {pid: math.fsum(contrib[pid]) for pid in order}
    attrs = {p.product_id: dict(p.attrs) for p in catalog.products if p.product_id in contrib}
    return WeightedDB(tuple(order), weight, math.fsum(matched_scores), attrs, null_matches)


def find_itemsets(db: WeightedDB, min_support_weight: float) -> set[frozenset[AVPair]]:
    """All maximal AV sets whose matching-product weight mass reaches the threshold.

    Weighted apriori over products-as-baskets (non-null AV pairs only),
    counting support through product-id sets.
    """
    if min_support_weight < 0:
        raise ValueError("min_support_weight must be >= 0")
    tids: dict[AVPair, frozenset[str]] = {}
    for pid in db.products:
        for av in db.basket(pid):
            tids[av] = tids.get(av, frozenset()) | {pid}

    def mass(ids: frozenset[str]) -> float:
        return math.fsum(db.weight[p] for p in ids)

    level: dict[tuple[AVPair, ...], frozenset[str]] = {
        (av,): ids for av, ids in sorted(tids.items()) if meets_support(mass(ids), min_support_weight)
    }
    frequent: list[dict[tuple[AVPair, ...], frozenset[str]]] = []
    while level:
        frequent.append(level)
        keys = sorted(level)
        nxt: dict[tuple[AVPair, ...], frozenset[str]] = {}
        for i, a in enumerate(keys):
            for b in keys[i + 1:]:
                if a[:-1] != b[:-1]:
                    break
                if a[-1].attribute == b[-1].attribute:
                    continue
                cand = a + (b[-1],)
                if any(cand[:j] + cand[j + 1:] not in level for j in range(len(cand) - 2)):
                    continue
                ids = level[a] & level[b]
                if ids and meets_support(mass(ids), min_support_weight):
                    nxt[cand] = ids
        level = nxt

    maximal: set[frozenset[AVPair]] = set()
    for k, lvl in enumerate(frequent):
        covered = set()
        if k + 1 < len(frequent):
            for sup in frequent[k + 1]:
                for j in range(len(sup)):
                    covered.add(sup[:j] + sup[j + 1:])
        maximal.update(frozenset(s) for s in lvl if s not in covered)
    return maximal


def coverage(avset: Iterable[AVPair], db: WeightedDB, z: AttributeImportance) -> ItemsetCandidate:
    avset = frozenset(avset)
    attrs = {av.attribute for av in avset}
    if len(attrs) != len(avset):
        raise ValueError("an AV set holds at most one value per attribute")
    support = db.support(avset)
    attr_weight = math.fsum(z(a) for a in sorted(attrs))
    return ItemsetCandidate(avset, support, attr_weight, support * attr_weight)


def theta_grid(epsilon: float) -> list[float]:
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    grid = []
    i = 1
    while i * epsilon < 1 - 1e-12:
        grid.append(i * epsilon)
        i += 1
    return grid


def grid_search(db: WeightedDB, z: AttributeImportance, epsilon: float = 0.05) -> list[ItemsetCandidate]:
    """Mine maximal itemsets at support ratios ``eps, 2*eps, ... < 1`` and rank by coverage."""
    grid = theta_grid(epsilon)
    if not db.products:
        return []
    best: dict[frozenset[AVPair], ItemsetCandidate] = {}
    for theta in grid:
        for avset in find_itemsets(db, theta * db.total_weight):
            if avset not in best:
                best[avset] = coverage(avset, db, z)
    return sorted(best.values(), key=ItemsetCandidate.sort_key)


def combine_disjoint(candidates: Sequence[ItemsetCandidate], max_attributes: int | None = None) -> frozenset[AVPair]:
    """Greedily union attribute-disjoint candidates, best coverage first."""
    if not candidates:
        return frozenset()
    chosen = set(candidates[0].avset)
    taken = set(candidates[0].attributes)
    for cand in candidates[1:]:
        if max_attributes is not None and len(taken) >= max_attributes:
            break
        attrs = cand.attributes
        if attrs & taken:
            continue
        if max_attributes is not None and len(taken | attrs) > max_attributes:
            continue
        chosen |= cand.avset
        taken |= attrs
    return frozenset(chosen)


# --- rewrite text ----------------------------------------------------------

DEFAULT_TEMPLATE: tuple[tuple[str, ...], ...] = (
    ("brand", "manufacturer"),
    ("product line", "product_line", "line", "series"),
    ("*material*", "*type*"),
)


def attribute_rank(attribute: str, template: Sequence[Sequence[str]] = DEFAULT_TEMPLATE) -> tuple:
    """Sort key: template tier, position inside the tier, then name."""
    for tier, patterns in enumerate(template):
        for pos, pattern in enumerate(patterns):
            if fnmatch.fnmatchcase(attribute, pattern):
                return (tier, pos, attribute)
    return (len(template), 0, attribute)


def emit_rewrite(
    category: str,
    avset: Iterable[AVPair],
    template: Sequence[Sequence[str]] = DEFAULT_TEMPLATE,
) -> str:
    avset = list(avset)
    if not avset:
        raise ValueError("cannot emit a rewrite for an empty AV set")
    ordered = sorted(avset, key=lambda av: (attribute_rank(av.attribute, template), av.value))
    words = [normalize_text(av.value) for av in ordered] + [normalize_text(category)]
    return " ".join(w for w in words if w)


@dataclass(frozen=True)
class Rewrite:
    category: str
    modifier: str
    text: str
    avset: frozenset[AVPair]
    coverage: float


def avset_json(avset: Iterable[AVPair]) -> str:
    return json.dumps([[av.attribute, av.value] for av in sorted(avset)], ensure_ascii=False, separators=(",", ":"))


def rewrite_for(
    assoc: AssociationSet,
    catalog: Catalog,
    z: AttributeImportance,
    epsilon: float = 0.05,
    max_attributes: int | None = None,
    template: Sequence[Sequence[str]] = DEFAULT_TEMPLATE,
    null_matches: bool = False,
) -> tuple[Rewrite | None, list[ItemsetCandidate], WeightedDB]:
    """Full rewrite step for one modifier: candidates plus the combined rewrite."""
    db = build_weighted_db(assoc, catalog, null_matches)
    candidates = grid_search(db, z, epsilon)
    if not candidates:
        return None, candidates, db
    combined = combine_disjoint(candidates, max_attributes)
    scored = coverage(combined, db, z)
    text = emit_rewrite(assoc.category, combined, template)
    return Rewrite(assoc.category, assoc.modifier, text, combined, scored.coverage), candidates, db


def write_rewrites(rewrites: Iterable[Rewrite], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REWRITE_HEADER + "\n")
        for r in sorted(rewrites, key=lambda r: (r.category, r.modifier)):
            fh.write(f"{r.category}\t{r.modifier}\t{r.text}\t{r.coverage!r}\t{avset_json(r.avset)}\n")


def read_rewrites(path: str | Path) -> list[Rewrite]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != REWRITE_HEADER:
        raise ValueError(f"{path}: not a v1 rewrite report")
    out = []
    for ln in lines[1:]:
        cat, mod, text, cov, avs = ln.split("\t")
        avset = frozenset(AVPair(a, v) for a, v in json.loads(avs))
        out.append(Rewrite(cat, mod, text, avset, float(cov)))
    return out


def write_candidates(
    rows: Iterable[tuple[str, str, list[ItemsetCandidate], float, float]],
    path: str | Path,
) -> None:
    """Dump every scored itemset: raw and normalized coverage per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CANDIDATE_HEADER + "\n")
        for category, modifier, cands, total_w, total_z in rows:
            for rank, c in enumerate(cands, 1):
                fh.write(
                    f"{category}\t{modifier}\t{rank}\t{c.coverage!r}\t"
                    f"{c.normalized(total_w, total_z)!r}\t{c.support_weight!r}\t"
                    f"{c.attr_weight!r}\t{avset_json(c.avset)}\n"
                )
