"""Token-domain counting and the conditional distribution bundle."""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .counter import CounterTable
from .model import AVPair, BrowseTrail, DataError, Token, ValidationError

BUNDLE_FORMAT = "modrewrite.bundle"
BUNDLE_VERSION = 1

Counts = Mapping[tuple[Token, str], int]


def expand_trail(trail: BrowseTrail, count_revisits: bool = False) -> list[tuple[Token, str]]:
    """Cross product of query tokens and trail domains.

    Domains are deduplicated within the trail (first visit order) unless
    ``count_revisits`` is set.
    """
    domains = trail.domains if count_revisits else tuple(dict.fromkeys(trail.domains))
    return [(t, d) for t in trail.query.tokens for d in domains]


def accumulate_counts(
    trails: Iterable[BrowseTrail],
    capacity: int | None = None,
    count_revisits: bool = False,
    table: CounterTable | None = None,
) -> CounterTable:
    """Feed expanded (token, domain) pairs through a heavy-hitter table.

    ``capacity=None`` counts exactly.  Passing ``table`` resumes from a
    checkpoint.  All trails must share one category.
    """
    category = None
    exact: Counter | None = None
    if table is None:
        if capacity is None:
            exact = Counter()
        else:
            table = CounterTable(capacity)
    items = 0
    for trail in trails:
        if category is None:
            category = trail.category
        elif trail.category != category:
            raise ValidationError(f"mixed categories: {category!r} and {trail.category!r}")
        pairs = expand_trail(trail, count_revisits)
        if exact is not None:
            exact.update(pairs)
            items += len(pairs)
        else:
            table.extend(pairs)
    if exact is not None:
        return CounterTable(max(1, len(exact)), dict(exact), items)
    return table


@dataclass(frozen=True)
class DistributionBundle:
    category: str
    p_domain: Mapping[str, float]
    p_free_given_domain: Mapping[tuple[str, str], float]
    p_attr_given_domain: Mapping[tuple[str, str], float]
    p_value_given_attr_domain: Mapping[tuple[str, str, str], float]
    p_modifier_given_domain: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("p_domain", "p_free_given_domain", "p_attr_given_domain",
                     "p_value_given_attr_domain", "p_modifier_given_domain"):
            object.__setattr__(self, name, MappingProxyType(dict(getattr(self, name))))

    @property
    def domains(self) -> list[str]:
        return sorted(self.p_domain)

    @property
    def free_tokens(self) -> list[str]:
        return sorted({f for f, _ in self.p_free_given_domain})

    @property
    def modifiers(self) -> list[str]:
        return sorted({m for m, _ in self.p_modifier_given_domain})

    @property
    def av_pairs(self) -> list[AVPair]:
        return sorted({AVPair(a, v) for v, a, _ in self.p_value_given_attr_domain})

    def rows(self, table: str) -> dict[tuple, dict]:
        """Group a conditional table by its conditioning context."""
        data = getattr(self, table)
        if table == "p_domain":
            return {(): dict(data)}
        out: dict[tuple, dict] = {}
        for key, p in data.items():
            out.setdefault(key[1:], {})[key[0]] = p
        return out


def _normalize(counter: Mapping) -> dict:
    total = sum(counter.values())
    return {k: c / total for k, c in counter.items()} if total > 0 else {}


def build_distributions(
    counts: Counts,
    modifiers: Iterable[str] | None = None,
    category: str = "",
) -> DistributionBundle:
    """Normalize token-domain counts into the per-domain conditional tables.

    No smoothing: zero counts give zero (absent) probabilities, and a
    conditioning context with no mass has no row at all.
    """
    if not counts:
        raise DataError("cannot build distributions from empty counts")
    modifiers = set(modifiers) if modifiers is not None else None
    domain_mass: Counter = Counter()
    free: dict[str, Counter] = {}
    mods: dict[str, Counter] = {}
    attr: dict[str, Counter] = {}
    value: dict[tuple[str, str], Counter] = {}
    for (token, d), c in sorted(counts.items()):
        if c <= 0:
            continue
        domain_mass[d] += c
        if token.is_free:
            free.setdefault(d, Counter())[token.text] += c
            if modifiers is not None and token.text in modifiers:
                mods.setdefault(d, Counter())[token.text] += c
        else:
            attr.setdefault(d, Counter())[token.av.attribute] += c
            value.setdefault((token.av.attribute, d), Counter())[token.av.value] += c
    if not domain_mass:
        raise DataError("counts carry no positive mass")

    def flatten(rows: Mapping[tuple | str, Counter]) -> dict:
        out = {}
        for ctx, row in rows.items():
            ctx = ctx if isinstance(ctx, tuple) else (ctx,)
            for k, p in _normalize(row).items():
                out[(k, *ctx)] = p
        return out

    return DistributionBundle(
        category=category,
        p_domain=_normalize(domain_mass),
        p_free_given_domain=flatten(free),
        p_attr_given_domain=flatten(attr),
        p_value_given_attr_domain=flatten(value),
        p_modifier_given_domain=flatten(mods),
    )


def counts_from_table(table: CounterTable) -> dict[tuple[Token, str], int]:
    return dict(table.entries)


# --- export ----------------------------------------------------------------

_TABLES = (
    ("p_domain", ("domain",)),
    ("p_free_given_domain", ("token", "domain")),
    ("p_attr_given_domain", ("attribute", "domain")),
    ("p_value_given_attr_domain", ("value", "attribute", "domain")),
    ("p_modifier_given_domain", ("modifier", "domain")),
)


def _sort_key(table: str, key: tuple) -> tuple:
    # per-domain rows: domain first, then the remaining fields
    return (key[-1], *key[:-1])


def write_bundle(bundle: DistributionBundle, path: str | Path) -> None:
    """Write a bundle report: a header record then one record per table cell."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = {"format": BUNDLE_FORMAT, "version": BUNDLE_VERSION, "category": bundle.category}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for table, columns in _TABLES:
            data = getattr(bundle, table)
            keys = [(k,) if table == "p_domain" else k for k in data]
            for key in sorted(keys, key=lambda k: _sort_key(table, k)):
                p = data[key[0] if table == "p_domain" else key]
                rec = {"table": table, **dict(zip(columns, key)), "p": p}
                fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def read_bundle(path: str | Path) -> DistributionBundle:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty bundle file")
    header = json.loads(lines[0])
    if header.get("format") != BUNDLE_FORMAT or header.get("version") != BUNDLE_VERSION:
        raise DataError(f"{path}: not a version-{BUNDLE_VERSION} bundle file")
    tables: dict[str, dict] = {name: {} for name, _ in _TABLES}
    columns = dict(_TABLES)
    for ln in lines[1:]:
        rec = json.loads(ln)
        table = rec["table"]
        key = tuple(rec[c] for c in columns[table])
        tables[table][key[0] if table == "p_domain" else key] = rec["p"]
    return DistributionBundle(category=header["category"], **tables)
