"""Ground-truth generators and brute-force oracles.

Everything here is a pure function of its arguments and a seed, so test
fixtures can be regenerated byte for byte.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .associate import OVER_AV_PAIRS, AssociationSet, association_scores
from .counter import KeywordStats, StreamParams
from .labeler import DistributionBundle
from .model import (
    AnnotatedQuery,
    AttributeImportance,
    AVPair,
    BrowseTrail,
    Catalog,
    Product,
    Token,
    dump_record,
)
from .rewrite import WeightedDB, coverage, meets_support


# --- planted generative model ----------------------------------------------


@dataclass(frozen=True)
class PlantedModel:
    category: str
    p_domain: Mapping[str, float]
    p_attr_given_domain: Mapping[tuple[str, str], float]
    p_value_given_attr_domain: Mapping[tuple[str, str, str], float]
    p_modifier_given_domain: Mapping[tuple[str, str], float]
    seed: int = 0

    def __post_init__(self) -> None:
        for name, rows in self.rows().items():
            for ctx, row in rows.items():
                total = math.fsum(row.values())
                if abs(total - 1.0) > 1e-9:
                    raise ValueError(f"{name} row {ctx} sums to {total}")

    def rows(self) -> dict[str, dict[tuple, dict]]:
        out: dict[str, dict[tuple, dict]] = {"p_domain": {(): dict(self.p_domain)}}
        for name in ("p_attr_given_domain", "p_value_given_attr_domain", "p_modifier_given_domain"):
            grouped: dict[tuple, dict] = {}
            for key, p in getattr(self, name).items():
                grouped.setdefault(key[1:], {})[key[0]] = p
            out[name] = grouped
        return out

    def bundle(self) -> DistributionBundle:
        """The planted tables viewed as a distribution bundle."""
        return DistributionBundle(
            category=self.category,
            p_domain=self.p_domain,
            p_free_given_domain=self.p_modifier_given_domain,
            p_attr_given_domain=self.p_attr_given_domain,
            p_value_given_attr_domain=self.p_value_given_attr_domain,
            p_modifier_given_domain=self.p_modifier_given_domain,
        )

    def associations(self, mode: str = OVER_AV_PAIRS) -> dict[str, AssociationSet]:
        b = self.bundle()
        return {m: association_scores(b, m, mode) for m in b.modifiers}

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "seed": self.seed,
            "p_domain": self.p_domain,
            "p_attr_given_domain": [[*k, p] for k, p in sorted(self.p_attr_given_domain.items())],
            "p_value_given_attr_domain": [[*k, p] for k, p in sorted(self.p_value_given_attr_domain.items())],
            "p_modifier_given_domain": [[*k, p] for k, p in sorted(self.p_modifier_given_domain.items())],
        }


def _simplex(rng: np.random.Generator, k: int, floor: float) -> np.ndarray:
    """A random probability vector with every entry at least ``floor``."""
    w = rng.dirichlet(np.full(k, 1.5))
    return floor + (1.0 - k * floor) * w


def _top_margin(assoc: AssociationSet) -> float:
    scores = [s for _, s in assoc.scores]
    if len(scores) < 2:
        return math.inf
    return scores[0] / scores[1] - 1.0 if scores[1] > 0 else math.inf


def random_planted_model(
    seed: int,
    n_domains: int = 3,
    n_attrs: int = 2,
    n_values: int = 3,
    n_modifiers: int = 3,
    category: str = "synthetic",
    min_top_margin: float = 0.05,
    max_tries: int = 1000,
    floor: float = 0.1,
) -> PlantedModel:
    """Draw a planted model whose per-modifier top AV pair is unambiguous.

    Every probability is bounded away from zero, and draws are repeated
    (from the same seeded stream) until each modifier's best AV pair beats
    the runner-up by ``min_top_margin`` relative.  Each entry of a
    k-way distribution is at least ``floor / k``; raising ``floor`` keeps
    every conditioning context well sampled.
    """
    if min(n_domains, n_attrs, n_values, n_modifiers) < 1:
        raise ValueError("model sizes must be positive")
    if not 0.0 <= floor < 1.0:
        raise ValueError("floor must be in [0, 1)")
    rng = np.random.default_rng(seed)
    domains = [f"www.d{i}.example" for i in range(n_domains)]
    attrs = [f"attr{i}" for i in range(n_attrs)]
    values = {a: [f"{a}-v{j}" for j in range(n_values)] for a in attrs}
    mods = [f"mod{i}" for i in range(n_modifiers)]
    for _ in range(max_tries):
        pd_ = _simplex(rng, n_domains, floor / n_domains)
        pa, pv, pm = {}, {}, {}
        for di, d in enumerate(domains):
            for a, p in zip(attrs, _simplex(rng, n_attrs, floor / n_attrs)):
                pa[(a, d)] = float(p)
            for a in attrs:
                for v, p in zip(values[a], _simplex(rng, n_values, floor / n_values)):
                    pv[(v, a, d)] = float(p)
            for m, p in zip(mods, _simplex(rng, n_modifiers, floor / n_modifiers)):
                pm[(m, d)] = float(p)
        model = PlantedModel(category, {d: float(p) for d, p in zip(domains, pd_)}, pa, pv, pm, seed)
        if all(_top_margin(s) >= min_top_margin for s in model.associations().values()):
            return model
    raise RuntimeError(f"no model with top margin {min_top_margin} after {max_tries} draws")


def _sample_grouped(rng: np.random.Generator, groups: np.ndarray, table: Mapping, labels: Sequence, ctx_of) -> np.ndarray:
    """For each row, sample an index into ``labels`` from the row-specific distribution."""
    out = np.zeros(len(groups), dtype=np.int64)
    for g in np.unique(groups):
        idx = np.flatnonzero(groups == g)
        probs = np.array([table.get((lab, *ctx_of(g)), 0.0) for lab in labels])
        probs = probs / probs.sum()
        out[idx] = rng.choice(len(labels), size=len(idx), p=probs)
    return out


def gen_trails(
    model: PlantedModel,
    modifier_rate: float,
    n_trails: int,
    extra_domains: int = 0,
) -> list[BrowseTrail]:
    """Sample trails from the planted chain: domain, attribute, value, modifier.

    Each query carries the typed token and, with probability
    ``modifier_rate``, the modifier.  The trail visits the sampled domain,
    followed by ``extra_domains`` uniformly drawn others (0 by default).
    """
    if not 0.0 <= modifier_rate <= 1.0:
        raise ValueError("modifier_rate must be in [0, 1]")
    if n_trails <= 0:
        return []
    rng = np.random.default_rng(model.seed)
    domains = sorted(model.p_domain)
    attrs = sorted({a for a, _ in model.p_attr_given_domain})
    values = sorted({v for v, _, _ in model.p_value_given_attr_domain})
    mods = sorted({m for m, _ in model.p_modifier_given_domain})

    pd_ = np.array([model.p_domain[d] for d in domains])
    d_idx = rng.choice(len(domains), size=n_trails, p=pd_ / pd_.sum())
    a_idx = _sample_grouped(rng, d_idx, model.p_attr_given_domain, attrs, lambda g: (domains[g],))
    av_group = a_idx * len(domains) + d_idx
    v_idx = _sample_grouped(
        rng, av_group, model.p_value_given_attr_domain, values,
        lambda g: (attrs[g // len(domains)], domains[g % len(domains)]),
    )
    m_idx = _sample_grouped(rng, d_idx, model.p_modifier_given_domain, mods, lambda g: (domains[g],))
    has_mod = rng.random(n_trails) < modifier_rate
    extra = rng.integers(0, len(domains), size=(n_trails, extra_domains)) if extra_domains else None

    typed_cache: dict[tuple[int, int], Token] = {}
    free_cache = [Token.free(m) for m in mods]
    trails = []
    category = model.category
    for i in range(n_trails):
        key = (int(a_idx[i]), int(v_idx[i]))
        tok = typed_cache.get(key)
        if tok is None:
            tok = typed_cache[key] = Token.typed(AVPair(attrs[key[0]], values[key[1]]))
        tokens = (tok, free_cache[m_idx[i]]) if has_mod[i] else (tok,)
        trail_domains = (domains[d_idx[i]],)
        if extra is not None:
            trail_domains += tuple(domains[j] for j in extra[i])
        trails.append(BrowseTrail(AnnotatedQuery(f"q{i:07d}", category, tokens), trail_domains))
    return trails


def total_variation(p: Mapping[Hashable, float], q: Mapping[Hashable, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def max_table_tv(model: PlantedModel, bundle: DistributionBundle) -> dict[str, float]:
    """Worst per-row total-variation distance for each conditional table."""
    rows_b = {
        "p_domain": bundle.rows("p_domain"),
        "p_attr_given_domain": bundle.rows("p_attr_given_domain"),
        "p_value_given_attr_domain": bundle.rows("p_value_given_attr_domain"),
        "p_modifier_given_domain": bundle.rows("p_modifier_given_domain"),
    }
    out = {}
    for name, rows in model.rows().items():
        out[name] = max(total_variation(row, rows_b[name].get(ctx, {})) for ctx, row in rows.items())
    return out


# --- heavy-hitter theorem instances -----------------------------------------


@dataclass
class TheoremInstance:
    keywords: list[str]
    pages: list[str]
    intent: dict[str, str]
    similarity: dict[tuple[str, str], float]
    f: dict[tuple[str, str], int]
    params: StreamParams
    stats: KeywordStats
    seed: int = 0
    notes: list[str] = field(default_factory=list)

    def s(self, q: str, q2: str) -> float:
        return self.similarity.get((q, q2), 0.0)

    def pages_of(self, q: str) -> list[str]:
        return [p for p in self.pages if self.intent[p] == q]

    def stream(self) -> list[tuple[str, str]]:
        """The counts expanded into a (keyword, page) stream, shuffled by seed."""
        items = [key for key, c in sorted(self.f.items()) for _ in range(c)]
        order = np.random.default_rng([self.seed, 1]).permutation(len(items))
        return [items[i] for i in order]

    def to_json(self) -> dict:
        p = self.params
        return {
            "seed": self.seed,
            "keywords": self.keywords,
            "pages": [[pg, self.intent[pg]] for pg in self.pages],
            "similarity": [[q, q2, s] for (q, q2), s in sorted(self.similarity.items()) if s],
            "f": [[q, pg, c] for (q, pg), c in sorted(self.f.items()) if c],
            "params": {k: getattr(p, k) for k in ("alpha", "beta", "gamma", "delta", "theta", "s_slack", "n", "m")},
            "n_q": sorted([q, v] for q, v in self.stats.n_q.items()),
            "m_q": sorted([q, v] for q, v in self.stats.m_q.items()),
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, obj: dict) -> TheoremInstance:
        pages = [pg for pg, _ in obj["pages"]]
        return cls(
            keywords=list(obj["keywords"]),
            pages=pages,
            intent={pg: q for pg, q in obj["pages"]},
            similarity={(q, q2): s for q, q2, s in obj["similarity"]},
            f={(q, pg): c for q, pg, c in obj["f"]},
            params=StreamParams(**obj["params"]),
            stats=KeywordStats({q: v for q, v in obj["n_q"]}, {q: v for q, v in obj["m_q"]}),
            seed=obj.get("seed", 0),
            notes=list(obj.get("notes", [])),
        )


class InfeasibleInstance(RuntimeError):
    pass


def _similarity(rng: np.random.Generator, n_q: int, profile: str) -> np.ndarray:
    """Symmetric similarity with unit row sums.

    ``mixed`` blends the identity with a few symmetrized permutations, so
    self-similarity varies across keywords (some fall below theta).
    """
    if profile == "identity":
        return np.eye(n_q)
    if profile != "mixed":
        raise ValueError(f"unknown similarity profile {profile!r}")
    lam0 = rng.uniform(0.35, 0.85)
    k = 3
    while True:
        w = rng.dirichlet(np.ones(k)) * (1 - lam0)
        if w.min() >= 0.02:
            break
    s = lam0 * np.eye(n_q)
    for wi in w:
        perm = np.eye(n_q)[rng.permutation(n_q)]
        s += wi * (perm + perm.T) / 2
    return s


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def default_band(params: StreamParams) -> float:
    """Half-width of the multiplicative jitter that keeps every bound satisfiable."""
    ab, gd, g = params.alpha * params.beta, params.gamma * params.delta, params.gamma
    return 0.9 * max(0.0, min((g - 1) / (g + 1), (1 - ab) / (1 + ab), (gd - 1) / (gd + 1)))


def gen_theorem_instance(
    params: StreamParams,
    sizes: tuple[int, int] = (20, 200),
    similarity_profile: str = "mixed",
    seed: int = 0,
    target_n: float | None = None,
    band: float | None = None,
    max_regen: int = 8,
) -> TheoremInstance:
    """Build a (keyword, page) count table satisfying the frequency assumptions.

    Each page's intent keyword owns ``|P| / |Q|`` pages.  Counts are drawn
    uniformly inside a band around ``s * n / m`` that provably fits inside
    ``[alpha*beta*s*n/m, gamma*delta*s*n/m]`` once ``n`` is recomputed, then
    rounded half up and clamped into the integer bound interval.  If
    rounding empties an interval the scale is doubled (noted in ``notes``).
    """
    n_q, n_p = sizes
    if n_q < 1 or n_p < n_q:
        raise ValueError("need at least one page per keyword")
    rng = np.random.default_rng(seed)
    keywords = [f"q{i:03d}" for i in range(n_q)]
    pages = [f"p{j:04d}" for j in range(n_p)]
    owner = rng.permutation(np.arange(n_p) % n_q)
    intent = {pages[j]: keywords[owner[j]] for j in range(n_p)}
    s = _similarity(rng, n_q, similarity_profile)
    m = float(n_p)
    w = default_band(params) if band is None else band
    u = rng.uniform(1 - w, 1 + w, size=(n_q, n_p))
    s_qp = s[:, owner]  # s[q, I(p)]
    ab, gd = params.alpha * params.beta, params.gamma * params.delta
    scale = (target_n if target_n is not None else params.n) / m
    notes: list[str] = []

    for _attempt in range(max_regen):
        f = _round_half_up(s_qp * scale * u)
        feasible = True
        for _ in range(50):
            ratio = f.sum() / m
            lo = np.ceil(ab * s_qp * ratio - 1e-9)
            hi = np.floor(gd * s_qp * ratio + 1e-9)
            if np.any(lo > hi):
                feasible = False
                break
            clamped = np.clip(f, lo, hi)
            if np.array_equal(clamped, f):
                break
            f = clamped
        else:
            feasible = False
        if feasible:
            inst = _make_instance(keywords, pages, intent, s, f, params, m, seed, notes)
            if not verify_assumptions(inst):
                return inst
            notes.append(f"assumption check failed at scale {scale:g}; doubling")
        else:
            notes.append(f"rounding left an empty bound interval at scale {scale:g}; doubling")
        scale *= 2
    raise InfeasibleInstance("; ".join(notes))


def _make_instance(keywords, pages, intent, s, f, params, m, seed, notes) -> TheoremInstance:
    n = float(f.sum())
    sim = {
        (keywords[a], keywords[b]): float(s[a, b])
        for a in range(len(keywords)) for b in range(len(keywords)) if s[a, b] > 0
    }
    counts = {
        (keywords[a], pages[j]): int(f[a, j])
        for a in range(len(keywords)) for j in range(len(pages)) if f[a, j] > 0
    }
    n_q = {q: float(f[a].sum()) for a, q in enumerate(keywords)}
    m_q = {q: float(sum(1 for p in pages if intent[p] == q)) for q in keywords}
    return TheoremInstance(
        keywords, pages, intent, sim, counts,
        replace(params, n=n, m=m), KeywordStats(n_q, m_q), seed, list(notes),
    )


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def verify_assumptions(inst: TheoremInstance, tol: float = 1e-9) -> list[Violation]:
    """Check every instance invariant; an empty list means the instance is valid."""
    p = inst.params
    out: list[Violation] = []
    if p.m <= 0 or p.n <= 0:
        return [Violation("totals", f"n={p.n}, m={p.m} must be positive")]
    ratio = p.n / p.m
    ab, gd = p.alpha * p.beta, p.gamma * p.delta
    for q in inst.keywords:
        for q2 in inst.keywords:
            a, b = inst.s(q, q2), inst.s(q2, q)
            if abs(a - b) > tol:
                out.append(Violation("symmetry", f"s({q},{q2})={a} != s({q2},{q})={b}"))
            if not -tol <= a <= 1 + tol:
                out.append(Violation("similarity-range", f"s({q},{q2})={a}"))
    for pg in inst.pages:
        owner = inst.intent[pg]
        for q in inst.keywords:
            sv = inst.s(q, owner)
            fv = inst.f.get((q, pg), 0)
            lo, hi = ab * sv * ratio, gd * sv * ratio
            if fv < lo - tol * max(1.0, lo):
                out.append(Violation("lower-bound", f"f({q},{pg})={fv} < {lo:.6g}"))
            if fv > hi + tol * max(1.0, hi):
                out.append(Violation("upper-bound", f"f({q},{pg})={fv} > {hi:.6g}"))
    n_q = {q: 0 for q in inst.keywords}
    for (q, _pg), c in inst.f.items():
        n_q[q] = n_q.get(q, 0) + c
    for q in inst.keywords:
        m_q = sum(1 for pg in inst.pages if inst.intent[pg] == q)
        if m_q == 0:
            out.append(Violation("page-mass", f"keyword {q} owns no pages"))
        if inst.stats.m_q.get(q) != m_q:
            out.append(Violation("stats", f"m_q({q})={inst.stats.m_q.get(q)} != {m_q}"))
        if abs(inst.stats.n_q.get(q, 0) - n_q[q]) > tol:
            out.append(Violation("stats", f"n_q({q})={inst.stats.n_q.get(q)} != {n_q[q]}"))
        if n_q[q] / ratio > p.gamma * m_q * (1 + tol):
            out.append(Violation("gamma", f"(m/n)*n_q({q})={n_q[q] / ratio:.6g} > gamma*m_q={p.gamma * m_q:.6g}"))
    if abs(sum(n_q.values()) - p.n) > tol * max(1.0, p.n):
        out.append(Violation("totals", f"sum n_q={sum(n_q.values())} != n={p.n}"))
    if abs(inst.stats.m - p.m) > tol:
        out.append(Violation("totals", f"sum m_q={inst.stats.m} != m={p.m}"))
    return out


def exact_counts(stream: Iterable[Hashable]) -> dict[Hashable, int]:
    return dict(Counter(stream))


# --- itemset oracles -------------------------------------------------------

MAX_ATTRS, MAX_VALUES, MAX_PRODUCTS = 4, 4, 12


def _domain(db: WeightedDB) -> dict[str, list[str]]:
    values: dict[str, set[str]] = {}
    for pid in db.products:
        for a, v in db.attrs[pid].items():
            if v is not None:
                values.setdefault(a, set()).add(v)
    return {a: sorted(vs) for a, vs in sorted(values.items())}


def _check_size(db: WeightedDB, domain: Mapping[str, list[str]]) -> None:
    big = len(db.products) > MAX_PRODUCTS or len(domain) > MAX_ATTRS or any(
        len(v) > MAX_VALUES for v in domain.values()
    )
    if big:
        sizes = {a: len(v) for a, v in domain.items()}
        raise ValueError(
            f"instance too large for exhaustive search: {len(db.products)} products, "
            f"attribute value counts {sizes} (limits {MAX_PRODUCTS}/{MAX_ATTRS}/{MAX_VALUES})"
        )


def all_avsets(db: WeightedDB) -> list[frozenset[AVPair]]:
    """Every AV set with at most one value per attribute, including the empty set."""
    domain = _domain(db)
    _check_size(db, domain)
    choices = [[None, *(AVPair(a, v) for v in vs)] for a, vs in domain.items()]
    return [frozenset(x for x in combo if x is not None) for combo in itertools.product(*choices)]


def _scan_support(db: WeightedDB, avset: frozenset[AVPair]) -> float:
    hits = []
    for pid in db.products:
        row = db.attrs[pid]
        if all(row.get(av.attribute) == av.value for av in avset):
            hits.append(db.weight[pid])
    return math.fsum(hits)


def brute_force_maximal_itemsets(db: WeightedDB, min_support_weight: float) -> set[frozenset[AVPair]]:
    frequent = [
        s for s in all_avsets(db) if s and meets_support(_scan_support(db, s), min_support_weight)
    ]
    return {s for s in frequent if not any(s < t for t in frequent)}


def brute_force_best_avset(db: WeightedDB, z: AttributeImportance) -> tuple[frozenset[AVPair], float]:
    if not db.products:
        return frozenset(), 0.0
    best = min((coverage(s, db, z) for s in all_avsets(db)), key=lambda c: c.sort_key())
    return best.avset, best.coverage


def random_small_instance(
    rng: np.random.Generator,
    category: str = "small",
) -> tuple[Catalog, AssociationSet, AttributeImportance]:
    """A random catalog within the exhaustive-search limits plus an association set over it."""
    n_attrs = int(rng.integers(1, MAX_ATTRS + 1))
    n_products = int(rng.integers(1, MAX_PRODUCTS + 1))
    attrs = [f"a{i}" for i in range(n_attrs)]
    n_vals = {a: int(rng.integers(1, MAX_VALUES + 1)) for a in attrs}
    null_rate = float(rng.choice([0.0, 0.1, 0.3]))
    products = []
    for j in range(n_products):
        row = {}
        for a in attrs:
            row[a] = None if rng.random() < null_rate else f"v{int(rng.integers(n_vals[a]))}"
        products.append(Product(f"p{j:02d}", category, row))
    catalog = Catalog.from_products(category, products)
    pairs = sorted({av for p in products for av in p.av_pairs()})
    if pairs:
        k = int(rng.integers(1, len(pairs) + 1))
        chosen = [pairs[i] for i in sorted(rng.choice(len(pairs), size=k, replace=False))]
    else:
        chosen = []
    raw = rng.random(len(chosen)) + 0.05
    scores = raw / raw.sum() if len(raw) else raw
    assoc = AssociationSet(category, "mod", tuple(zip(chosen, (float(x) for x in scores))))
    if rng.random() < 0.5:
        z = AttributeImportance.uniform(attrs)
    else:
        z = AttributeImportance({a: float(rng.uniform(0.2, 2.0)) for a in attrs}, default=1.0)
    return catalog, assoc, z


# --- files -----------------------------------------------------------------


def write_trails(trails: Iterable[BrowseTrail], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in trails:
            fh.write(dump_record(t.to_record()) + "\n")
            n += 1
    return n


def write_json(obj: object, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1, ensure_ascii=False)
        fh.write("\n")


def write_stream(stream: Iterable[tuple[str, str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q, pg in stream:
            fh.write(f"{q}\t{pg}\n")


def read_stream(path: str | Path) -> list[tuple[str, str]]:
    with open(path, encoding="utf-8") as fh:
        return [tuple(ln.rstrip("\n").split("\t")) for ln in fh if ln.strip()]


def planted_ground_truth(model: PlantedModel) -> dict:
    assoc = model.associations()
    return {
        "model": model.to_json(),
        "top_av": {m: [a.scores[0][0].attribute, a.scores[0][0].value] for m, a in sorted(assoc.items()) if a},
    }


# --- end-to-end fixture ----------------------------------------------------

FIXTURE_CATEGORY = "widgets"


def fixture_catalog() -> Catalog:
    """The three-product worked catalog: p1={a:x,b:y}, p2={a:x,b:z}, p3={a:w,b:y}."""
    rows = {"p1": {"a": "x", "b": "y"}, "p2": {"a": "x", "b": "z"}, "p3": {"a": "w", "b": "y"}}
    return Catalog.from_products(FIXTURE_CATEGORY, [Product(pid, FIXTURE_CATEGORY, r) for pid, r in rows.items()])


def fixture_model(seed: int = 7) -> PlantedModel:
    """Two domains over the fixture catalog's attributes, with two modifiers."""
    al, be = "www.alpha.com", "www.beta.com"
    return PlantedModel(
        category=FIXTURE_CATEGORY,
        p_domain={al: 0.5, be: 0.5},
        p_attr_given_domain={("a", al): 0.5, ("b", al): 0.5, ("a", be): 0.5, ("b", be): 0.5},
        p_value_given_attr_domain={
            ("x", "a", al): 0.9, ("w", "a", al): 0.1, ("y", "b", al): 0.8, ("z", "b", al): 0.2,
            ("x", "a", be): 0.2, ("w", "a", be): 0.8, ("y", "b", be): 0.3, ("z", "b", be): 0.7,
        },
        p_modifier_given_domain={
            ("portable", al): 0.8, ("designer", al): 0.2,
            ("portable", be): 0.1, ("designer", be): 0.9,
        },
        seed=seed,
    )


def planted_best_avsets(model: PlantedModel, catalog: Catalog, z: AttributeImportance | None = None) -> dict[str, tuple[frozenset[AVPair], float]]:
    """Best-coverage AV set per modifier under the planted (noise-free) associations."""
    from .rewrite import build_weighted_db

    z = z or AttributeImportance.uniform(catalog.attributes)
    return {m: brute_force_best_avset(build_weighted_db(a, catalog), z) for m, a in sorted(model.associations().items())}


FIXTURE_CONFIG = """\
[paths]
trails = trails.jsonl
catalog = catalog.jsonl
stage_dir = out

[pipeline]
seed = {seed}
epsilon = 0.05
top_k = 10
min_nonnull_fraction = 0.10
"""


def write_fixture(out_dir: str | Path, seed: int = 7, n_trails: int = 20000) -> dict[str, Path]:
    """Write trails, catalog, config and ground-truth sidecar for the end-to-end fixture."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = fixture_model(seed)
    catalog = fixture_catalog()
    paths = {
        "trails": out / "trails.jsonl",
        "catalog": out / "catalog.jsonl",
        "config": out / "config.ini",
        "ground_truth": out / "ground_truth.json",
    }
    write_trails(gen_trails(model, 0.5, n_trails), paths["trails"])
    with open(paths["catalog"], "w", encoding="utf-8", newline="\n") as fh:
        for p in catalog.products:
            fh.write(dump_record(p.to_record()) + "\n")
    paths["config"].write_text(FIXTURE_CONFIG.format(seed=seed), encoding="utf-8")
    truth = planted_ground_truth(model)
    truth["best_avsets"] = {
        m: {"avset": [[av.attribute, av.value] for av in sorted(s)], "coverage": c}
        for m, (s, c) in planted_best_avsets(model, catalog).items()
    }
    write_json(truth, paths["ground_truth"])
    return paths
