"""Stage execution: ingest -> label -> modifiers -> associate -> rewrite.

Each stage reads the previous stage's artifacts from the stage directory
and writes its own; identical inputs and config give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .associate import (
    EQUAL_DEPTH,
    BucketSpec,
    all_associations,
    bucket_numeric,
    bucket_value,
    depth_cuts,
    parse_numeric,
    read_associations,
    write_associations,
)
from .config import CategoryParams, PipelineConfig
from .counter import (
    STATIC,
    STREAMING,
    CounterTable,
    KeywordStats,
    StreamParams,
    build_lists,
    hh_prune,
    read_snapshot,
    save_snapshot,
)
from .labeler import accumulate_counts, build_distributions, read_bundle, write_bundle
from .model import (
    AVPair,
    AnnotatedQuery,
    BrowseTrail,
    Catalog,
    DataError,
    Product,
    Token,
    filter_attributes,
    load_products,
    load_trails,
    parse_catalog_record,
    write_records,
)
from .modifiers import top_modifiers, write_ranking
from .rewrite import rewrite_for, write_candidates, write_rewrites

log = logging.getLogger(__name__)

STAGES = ("ingest", "label", "modifiers", "associate", "rewrite")
MANIFEST_VERSION = 1


class MissingArtifactError(RuntimeError):
    def __init__(self, path: Path, stage: str) -> None:
        super().__init__(f"missing artifact {path}; run the {stage!r} stage first")
        self.path = path
        self.stage = stage


def slug(category: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", category.lower()).strip("-") or "_"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class Layout:
    root: Path

    def stage(self, name: str) -> Path:
        return self.root / name

    def categories_file(self) -> Path:
        return self.root / "ingest" / "categories.json"

    def counts(self, cat: str) -> Path:
        return self.root / "ingest" / f"{slug(cat)}.counts.snap"

    def catalog(self, cat: str) -> Path:
        return self.root / "ingest" / f"{slug(cat)}.catalog.jsonl"

    def bundle(self, cat: str) -> Path:
        return self.root / "label" / f"{slug(cat)}.bundle.jsonl"

    def modifier_bundle(self, cat: str) -> Path:
        return self.root / "modifiers" / f"{slug(cat)}.bundle.jsonl"

    def rankings(self) -> Path:
        return self.root / "modifiers" / "rankings.tsv"

    def associations(self) -> Path:
        return self.root / "associate" / "associations.tsv"

    def rewrites(self) -> Path:
        return self.root / "rewrite" / "rewrites.tsv"

    def candidates(self) -> Path:
        return self.root / "rewrite" / "candidates.tsv"

    def manifest(self) -> Path:
        return self.root / "manifest.json"

    def timings(self) -> Path:
        return self.root / "timings.json"


def _need(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(path, stage)
    return path


def _encode_key(key: tuple[Token, str]) -> list:
    token, domain = key
    return [list(token.key()), domain]


def _decode_key(raw: tuple) -> tuple[Token, str]:
    token, domain = raw
    return Token.from_key(token), domain


def _map(cfg: PipelineConfig, fn: Callable, items: Sequence) -> list:
    """Per-category work, run concurrently when configured; results keep input order."""
    if cfg.workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, items))


# --- bucketing -------------------------------------------------------------


@dataclass(frozen=True)
class _Bucketer:
    spec: BucketSpec
    cuts: tuple[float, ...] = ()
    edges: tuple[float, ...] = ()

    def label(self, text: str) -> str | None:
        x = parse_numeric(text)
        if x is None:
            return None
        return bucket_value(x, self.spec, self.cuts, self.edges)


def _bucket_catalog(catalog: Catalog, specs: Iterable[BucketSpec]) -> tuple[Catalog, dict[str, _Bucketer]]:
    products = list(catalog.products)
    bucketers = {}
    for spec in specs:
        values = []
        for p in products:
            v = p.attrs.get(spec.attribute)
            if v is None:
                continue
            x = parse_numeric(v)
            if x is None:
                raise DataError(f"product {p.product_id!r}: non-numeric {spec.attribute!r} value {v!r}")
            values.append((p.product_id, x))
        if not values:
            bucketers[spec.attribute] = _Bucketer(spec) if spec.strategy != EQUAL_DEPTH else None
            continue
        labels = bucket_numeric(values, spec)
        if spec.strategy == EQUAL_DEPTH:
            xs = [x for _, x in values]
            cuts = depth_cuts(xs, int(spec.param))
            bucketers[spec.attribute] = _Bucketer(spec, tuple(cuts), (min(xs), *cuts, max(xs)))
        else:
            bucketers[spec.attribute] = _Bucketer(spec)
        products = [
            Product(p.product_id, p.category, {**p.attrs, spec.attribute: labels[p.product_id]})
            if p.product_id in labels else p
            for p in products
        ]
    bucketers = {a: b for a, b in bucketers.items() if b is not None}
    return Catalog.from_products(catalog.category, products), bucketers


def _bucket_trail(trail: BrowseTrail, bucketers: dict[str, _Bucketer]) -> BrowseTrail:
    if not bucketers:
        return trail
    tokens = []
    changed = False
    for t in trail.query.tokens:
        if not t.is_free and t.av.attribute in bucketers:
            label = bucketers[t.av.attribute].label(t.av.value)
            if label is not None and label != t.av.value:
                t = Token.typed(AVPair(t.av.attribute, label))
                changed = True
        tokens.append(t)
    if not changed:
        return trail
    q = trail.query
    return BrowseTrail(AnnotatedQuery(q.query_id, q.category, tuple(tokens)), trail.domains)


# --- stages ----------------------------------------------------------------


def _categories(cfg: PipelineConfig, layout: Layout) -> list[str]:
    path = _need(layout.categories_file(), "ingest")
    cats = json.loads(path.read_text(encoding="utf-8"))["categories"]
    if cfg.categories is not None:
        cats = [c for c in cats if c in cfg.categories]
    return cats


def stage_ingest(cfg: PipelineConfig, layout: Layout) -> list[Path]:
    cfg.require_inputs()
    trails = load_trails(cfg.trails)
    products = load_products(cfg.catalog)
    by_cat: dict[str, list[BrowseTrail]] = {}
    for t in trails:
        by_cat.setdefault(t.category, []).append(t)
    prod_by_cat: dict[str, list[Product]] = {}
    for p in products:
        prod_by_cat.setdefault(p.category, []).append(p)
    cats = sorted(by_cat)
    if cfg.categories is not None:
        cats = [c for c in cats if c in cfg.categories]
    out_dir = layout.stage("ingest")
    out_dir.mkdir(parents=True, exist_ok=True)

    def run(cat: str) -> list[Path]:
        params = cfg.params_for(cat)
        catalog = Catalog.from_products(cat, prod_by_cat.get(cat, []))
        catalog, bucketers = _bucket_catalog(catalog, params.buckets)
        catalog = filter_attributes(catalog, params.min_nonnull_fraction)
        cat_trails = [_bucket_trail(t, bucketers) for t in by_cat[cat]]
        capacity = params.capacity
        if capacity is not None and params.capacity_cap is not None and capacity > params.capacity_cap:
            log.warning("%s: capacity %d capped at %d", cat, capacity, params.capacity_cap)
            capacity = params.capacity_cap
        table = accumulate_counts(cat_trails, capacity, params.count_revisits)
        save_snapshot(table, layout.counts(cat), _encode_key)
        write_records(layout.catalog(cat), (p.to_record() for p in catalog.products))
        return [layout.counts(cat), layout.catalog(cat)]

    written = [p for group in _map(cfg, run, cats) for p in group]
    layout.categories_file().write_text(json.dumps({"categories": cats}, indent=1) + "\n", encoding="utf-8")
    return [layout.categories_file(), *written]


def _load_counts(layout: Layout, cat: str) -> CounterTable:
    return read_snapshot(_need(layout.counts(cat), "ingest"), _decode_key)


def _effective_counts(table: CounterTable, params: CategoryParams, exact: bool) -> dict:
    """Counts as fed to the distributions; list mode keeps only each domain's final keyword list."""
    counts = dict(table.entries)
    if not params.list_mode or not counts:
        return counts
    stats = KeywordStats.from_counts(counts)
    sp = StreamParams(params.alpha, params.beta, params.gamma, params.delta, params.theta,
                      params.s_slack, stats.n, stats.m)
    mode = STATIC if exact else STREAMING
    if not exact:
        counts = hh_prune(table, sp)
    lists = build_lists(counts, stats, sp, mode)
    return {(t, d): c for (t, d), c in counts.items() if t in lists.final_p.get(d, ())}


def stage_label(cfg: PipelineConfig, layout: Layout) -> list[Path]:
    layout.stage("label").mkdir(parents=True, exist_ok=True)

    def run(cat: str) -> Path:
        params = cfg.params_for(cat)
        table = _load_counts(layout, cat)
        counts = _effective_counts(table, params, exact=params.capacity is None)
        if not counts:
            raise DataError(f"category {cat!r} has no counts to label")
        write_bundle(build_distributions(counts, category=cat), layout.bundle(cat))
        return layout.bundle(cat)

    return _map(cfg, run, _categories(cfg, layout))


def stage_modifiers(cfg: PipelineConfig, layout: Layout) -> list[Path]:
    layout.stage("modifiers").mkdir(parents=True, exist_ok=True)

    def run(cat: str):
        params = cfg.params_for(cat)
        bundle = read_bundle(_need(layout.bundle(cat), "label"))
        ranking = top_modifiers(bundle, params.top_k, params.allow_modifiers, params.deny_modifiers)
        table = _load_counts(layout, cat)
        counts = _effective_counts(table, params, exact=params.capacity is None)
        full = build_distributions(counts, modifiers=ranking.tokens, category=cat)
        write_bundle(full, layout.modifier_bundle(cat))
        return ranking, layout.modifier_bundle(cat)

    results = _map(cfg, run, _categories(cfg, layout))
    write_ranking([r for r, _ in results], layout.rankings())
    return [layout.rankings(), *(p for _, p in results)]


def stage_associate(cfg: PipelineConfig, layout: Layout) -> list[Path]:
    layout.stage("associate").mkdir(parents=True, exist_ok=True)

    def run(cat: str):
        params = cfg.params_for(cat)
        bundle = read_bundle(_need(layout.modifier_bundle(cat), "modifiers"))
        return all_associations(bundle, params.normalization)

    sets = [s for group in _map(cfg, run, _categories(cfg, layout)) for s in group]
    write_associations(sets, layout.associations())
    return [layout.associations()]


def _load_catalog(layout: Layout, cat: str) -> Catalog:
    path = _need(layout.catalog(cat), "ingest")
    with open(path, encoding="utf-8") as fh:
        products = [parse_catalog_record(ln) for ln in fh if ln.strip()]
    return Catalog.from_products(cat, products)


def stage_rewrite(cfg: PipelineConfig, layout: Layout) -> list[Path]:
    layout.stage("rewrite").mkdir(parents=True, exist_ok=True)
    sets = read_associations(_need(layout.associations(), "associate"))
    cats = _categories(cfg, layout)
    by_cat: dict[str, list] = {c: [] for c in cats}
    for s in sets:
        if s.category in by_cat:
            by_cat[s.category].append(s)

    def run(cat: str):
        params = cfg.params_for(cat)
        catalog = _load_catalog(layout, cat)
        z = params.importance()
        total_z = sum(z(a) for a in catalog.attribute_registry)
        rewrites, dumps = [], []
        for assoc in sorted(by_cat[cat], key=lambda s: s.modifier):
            rw, cands, db = rewrite_for(
                assoc, catalog, z, params.epsilon, params.max_attributes, params.template, params.null_matches
            )
            if rw is not None:
                rewrites.append(rw)
            dumps.append((cat, assoc.modifier, cands, db.total_weight, total_z))
        return rewrites, dumps

    results = _map(cfg, run, cats)
    write_rewrites([r for rws, _ in results for r in rws], layout.rewrites())
    written = [layout.rewrites()]
    if cfg.emit_candidates:
        write_candidates([d for _, ds in results for d in ds], layout.candidates())
        written.append(layout.candidates())
    return written


_RUNNERS = {
    "ingest": stage_ingest,
    "label": stage_label,
    "modifiers": stage_modifiers,
    "associate": stage_associate,
    "rewrite": stage_rewrite,
}


def _update_manifest(cfg: PipelineConfig, layout: Layout, stage: str, paths: list[Path]) -> None:
    path = layout.manifest()
    manifest = {}
    if path.exists():
        manifest = json.loads(path.read_text(encoding="utf-8"))
        if manifest.get("version") != MANIFEST_VERSION or manifest.get("config_sha256") != cfg.digest():
            manifest = {}
    manifest.update({
        "version": MANIFEST_VERSION,
        "tool_version": __version__,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
    })
    stages = manifest.setdefault("stages", {})
    stages[stage] = {
        str(p.relative_to(layout.root)): _sha256(p) for p in sorted(paths)
    }
    # later stages are stale once an earlier one reruns
    for later in STAGES[STAGES.index(stage) + 1:]:
        stages.pop(later, None)
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def run_stage(cfg: PipelineConfig, stage: str) -> dict[str, list[Path]]:
    """Run one stage, or every stage in order for ``"all"``."""
    if stage != "all" and stage not in _RUNNERS:
        raise ValueError(f"unknown stage {stage!r}")
    names = STAGES if stage == "all" else (stage,)
    layout = Layout(Path(cfg.stage_dir))
    layout.root.mkdir(parents=True, exist_ok=True)
    done: dict[str, list[Path]] = {}
    timings = {}
    for name in names:
        t0 = time.perf_counter()
        paths = _RUNNERS[name](cfg, layout)
        timings[name] = round(time.perf_counter() - t0, 6)
        _update_manifest(cfg, layout, name, paths)
        done[name] = paths
        log.info("stage %s wrote %d artifacts in %.3fs", name, len(paths), timings[name])
    # wall-clock timings live outside the manifest so artifacts stay byte-stable
    layout.timings().write_text(json.dumps(timings, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return done
