"""Domain types shared by the pipeline: AV pairs, tokens, trails, products.

Records on disk are newline-delimited JSON.  Trail records look like::

    {"query_id": "q1", "category": "televisions",
     "tokens": [{"kind": "free", "text": "portable"},
                {"kind": "av", "attr": "category", "value": "tv"}],
     "domains": ["www.target.com"]}

and catalog records like::

    {"product_id": "p1", "category": "televisions",
     "attrs": {"brand": "sony", "size": null}}

All text is normalized on the way in (lowercased, trimmed, internal
whitespace collapsed), so parsed objects are fixed points of
parse/serialize.
"""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from urllib.parse import urlsplit

_WS = re.compile(r"\s+")

TYPED = "typed"
FREE = "free"


class DataError(ValueError):
    """Input data that cannot be turned into valid domain objects."""


class ParseError(DataError):
    """A record is malformed; ``field`` names the offending field."""

    def __init__(self, message: str, field: str | None = None) -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class ValidationError(DataError):
    """A record parsed but violates a type invariant."""


def normalize_text(text: str) -> str:
    return _WS.sub(" ", text.strip()).lower()


def normalize_domain(raw: str) -> str:
    """Reduce a URL or host string to a lowercase hostname."""
    raw = raw.strip()
    if not raw:
        raise ValidationError("empty domain")
    host = urlsplit(raw if "://" in raw else "//" + raw).hostname
    if not host:
        raise ValidationError(f"cannot extract hostname from {raw!r}")
    return host.lower()


@dataclass(frozen=True, order=True, slots=True)
class AVPair:
    attribute: str
    value: str

    def __post_init__(self) -> None:
        if not self.attribute:
            raise ValidationError("AV pair attribute must be non-empty")
        if not self.value:
            raise ValidationError(f"AV pair value for {self.attribute!r} must be non-empty")

    @classmethod
    def of(cls, attribute: str, value: str) -> AVPair:
        return cls(normalize_text(attribute), normalize_text(value))

    def __str__(self) -> str:
        return f"{self.attribute}={self.value}"


@dataclass(frozen=True, order=True, slots=True)
class Token:
    """A query token: typed (carries an AV pair) or free (carries text)."""

    kind: str
    av: AVPair | None = None
    text: str | None = None

    def __post_init__(self) -> None:
        if self.kind == TYPED:
            if self.av is None or self.text is not None:
                raise ValidationError("typed token carries exactly an AV pair")
        elif self.kind == FREE:
            if self.av is not None or not self.text:
                raise ValidationError("free token carries non-empty text")
            if self.text != self.text.lower() or _WS.search(self.text):
                raise ValidationError(f"free token {self.text!r} must be lowercase and whitespace-free")
        else:
            raise ValidationError(f"unknown token kind {self.kind!r}")

    @classmethod
    def free(cls, text: str) -> Token:
        return cls(FREE, text=normalize_text(text))

    @classmethod
    def typed(cls, av: AVPair) -> Token:
        return cls(TYPED, av=av)

    @property
    def is_free(self) -> bool:
        return self.kind == FREE

    def key(self) -> tuple[str, ...]:
        """Flat tuple form, used for snapshots and reports."""
        if self.kind == FREE:
            return (FREE, self.text)
        return (TYPED, self.av.attribute, self.av.value)

    @classmethod
    def from_key(cls, key: Iterable[str]) -> Token:
        key = tuple(key)
        if key[0] == FREE and len(key) == 2:
            return cls(FREE, text=key[1])
        if key[0] == TYPED and len(key) == 3:
            return cls(TYPED, av=AVPair(key[1], key[2]))
        raise ValidationError(f"bad token key {key!r}")

    def to_record(self) -> dict:
        if self.kind == FREE:
            return {"kind": "free", "text": self.text}
        return {"kind": "av", "attr": self.av.attribute, "value": self.av.value}

    def __str__(self) -> str:
        return self.text if self.kind == FREE else str(self.av)


@dataclass(frozen=True, slots=True)
class AnnotatedQuery:
    query_id: str
    category: str
    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValidationError(f"query {self.query_id!r} has no tokens")


@dataclass(frozen=True, slots=True)
class BrowseTrail:
    query: AnnotatedQuery
    domains: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.domains:
            raise ValidationError(f"trail for query {self.query.query_id!r} has no domains")

    @property
    def category(self) -> str:
        return self.query.category

    def to_record(self) -> dict:
        return {
            "query_id": self.query.query_id,
            "category": self.query.category,
            "tokens": [t.to_record() for t in self.query.tokens],
            "domains": list(self.domains),
        }


@dataclass(frozen=True, slots=True)
class Product:
    product_id: str
    category: str
    attrs: Mapping[str, str | None]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attrs", MappingProxyType(dict(self.attrs)))
        for attr, value in self.attrs.items():
            if value is not None:
                AVPair(attr, value)

    def value(self, attribute: str) -> str | None:
        return self.attrs.get(attribute)

    def av_pairs(self) -> frozenset[AVPair]:
        """The product's non-null AV pairs (its itemset basket)."""
        return frozenset(AVPair(a, v) for a, v in self.attrs.items() if v is not None)

    def to_record(self) -> dict:
        return {
            "product_id": self.product_id,
            "category": self.category,
            "attrs": dict(self.attrs),
        }


@dataclass(frozen=True)
class Catalog:
    category: str
    products: tuple[Product, ...]
    attribute_registry: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "products", tuple(self.products))
        object.__setattr__(self, "attribute_registry", MappingProxyType(dict(self.attribute_registry)))
        seen = set()
        for p in self.products:
            if p.product_id in seen:
                raise ValidationError(f"duplicate product_id {p.product_id!r}")
            seen.add(p.product_id)

    @classmethod
    def from_products(cls, category: str, products: Iterable[Product]) -> Catalog:
        """Build a catalog, registering every attribute that any product names."""
        products = tuple(products)
        attributes = sorted({a for p in products for a in p.attrs})
        registry = {a: nonnull_fraction(products, a) for a in attributes}
        return cls(category, products, registry)

    def product(self, product_id: str) -> Product:
        for p in self.products:
            if p.product_id == product_id:
                return p
        raise KeyError(product_id)

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(sorted(self.attribute_registry))


def nonnull_fraction(products: tuple[Product, ...], attribute: str) -> float:
    if not products:
        return 0.0
    return sum(1 for p in products if p.attrs.get(attribute) is not None) / len(products)


@dataclass(frozen=True)
class AttributeImportance:
    """Per-attribute importance ``z(a)``; attributes not listed get ``default``."""

    z: Mapping[str, float]
    default: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", MappingProxyType(dict(self.z)))
        if any(v < 0 for v in self.z.values()) or self.default < 0:
            raise ValidationError("attribute importance must be non-negative")
        if not any(v > 0 for v in self.z.values()) and self.default <= 0:
            raise ValidationError("at least one attribute needs positive importance")

    @classmethod
    def uniform(cls, attributes: Iterable[str] = ()) -> AttributeImportance:
        return cls({a: 1.0 for a in attributes}, default=1.0)

    def __call__(self, attribute: str) -> float:
        return self.z.get(attribute, self.default)


# --- parsing ---------------------------------------------------------------


def _reject_duplicates(pairs: list[tuple[str, object]]) -> dict:
    out: dict = {}
    for k, v in pairs:
        if k in out:
            raise ParseError(f"duplicate key {k!r}", field=k)
        out[k] = v
    return out


def _load_json(line: str) -> dict:
    try:
        obj = json.loads(line, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object")
    return obj


def _require(obj: dict, name: str, kind: type | tuple[type, ...]) -> object:
    if name not in obj:
        raise ParseError("missing field", field=name)
    value = obj[name]
    if not isinstance(value, kind):
        raise ParseError(f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}", field=name)
    return value


def _ident(obj: dict, name: str) -> str:
    value = _require(obj, name, (str, int))
    text = str(value).strip()
    if not text:
        raise ParseError("must be non-empty", field=name)
    return text


def _parse_token(raw: object, index: int) -> list[Token]:
    where = f"tokens[{index}]"
    if not isinstance(raw, dict):
        raise ParseError("token must be an object", field=where)
    kind = raw.get("kind")
    if kind == "free":
        text = raw.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ParseError("free token needs non-empty text", field=f"{where}.text")
        # multiword free text becomes one free token per word
        return [Token.free(word) for word in normalize_text(text).split(" ")]
    if kind == "av":
        attr, value = raw.get("attr"), raw.get("value")
        if not isinstance(attr, str) or not attr.strip():
            raise ParseError("needs non-empty attr", field=f"{where}.attr")
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = format_number(value)
        if not isinstance(value, str) or not value.strip():
            raise ParseError("needs non-empty value", field=f"{where}.value")
        return [Token.typed(AVPair.of(attr, value))]
    raise ParseError(f"unknown token kind {kind!r}", field=f"{where}.kind")


def parse_trail_record(line: str) -> BrowseTrail:
    obj = _load_json(line)
    query_id = _ident(obj, "query_id")
    category = normalize_text(_ident(obj, "category"))
    raw_tokens = _require(obj, "tokens", list)
    raw_domains = _require(obj, "domains", list)
    tokens: list[Token] = []
    for i, raw in enumerate(raw_tokens):
        tokens.extend(_parse_token(raw, i))
    domains = []
    for i, d in enumerate(raw_domains):
        if not isinstance(d, str):
            raise ParseError("domain must be a string", field=f"domains[{i}]")
        domains.append(normalize_domain(d))
    return BrowseTrail(AnnotatedQuery(query_id, category, tuple(tokens)), tuple(domains))


def format_number(x: int | float) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def parse_catalog_record(line: str) -> Product:
    obj = _load_json(line)
    product_id = _ident(obj, "product_id")
    category = normalize_text(_ident(obj, "category"))
    raw_attrs = _require(obj, "attrs", dict)
    attrs: dict[str, str | None] = {}
    for raw_name, raw_value in raw_attrs.items():
        name = normalize_text(raw_name)
        if not name:
            raise ParseError("empty attribute name", field="attrs")
        if name in attrs:
            raise ParseError(f"duplicate attribute {name!r} after normalization", field=f"attrs.{name}")
        if raw_value is None:
            value = None
        elif isinstance(raw_value, bool):
            raise ParseError("boolean attribute values are not supported", field=f"attrs.{raw_name}")
        elif isinstance(raw_value, (int, float)):
            value = format_number(raw_value)
        elif isinstance(raw_value, str):
            value = normalize_text(raw_value) or None
        else:
            raise ParseError("value must be text, number or null", field=f"attrs.{raw_name}")
        attrs[name] = value
    return Product(product_id, category, attrs)


def dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _lines(path: str | Path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield lineno, line


def load_trails(path: str | Path) -> list[BrowseTrail]:
    trails = []
    for lineno, line in _lines(path):
        try:
            trails.append(parse_trail_record(line))
        except DataError as exc:
            raise type(exc)(f"{path}:{lineno}: {exc}") from exc
    return trails


def load_products(path: str | Path) -> list[Product]:
    products, seen = [], set()
    for lineno, line in _lines(path):
        try:
            p = parse_catalog_record(line)
        except DataError as exc:
            raise type(exc)(f"{path}:{lineno}: {exc}") from exc
        if p.product_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate product_id {p.product_id!r}")
        seen.add(p.product_id)
        products.append(p)
    return products


def load_catalogs(path: str | Path) -> dict[str, Catalog]:
    """Load a catalog file, split per category."""
    by_cat: dict[str, list[Product]] = {}
    for p in load_products(path):
        by_cat.setdefault(p.category, []).append(p)
    return {c: Catalog.from_products(c, ps) for c, ps in sorted(by_cat.items())}


def write_records(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dump_record(rec) + "\n")


# --- catalog operations ----------------------------------------------------


def filter_attributes(catalog: Catalog, min_nonnull_fraction: float = 0.10) -> Catalog:
    """Keep attributes whose non-null fraction is strictly above the threshold."""
    if not 0.0 <= min_nonnull_fraction <= 1.0:
        raise ValueError(f"min_nonnull_fraction must be in [0, 1], got {min_nonnull_fraction}")
    keep = {a: f for a, f in catalog.attribute_registry.items() if f > min_nonnull_fraction}
    products = tuple(
        Product(p.product_id, p.category, {a: v for a, v in p.attrs.items() if a in keep})
        for p in catalog.products
    )
    return Catalog(catalog.category, products, keep)


def match_products(catalog: Catalog, s: Iterable[AVPair], null_matches: bool = False) -> set[str]:
    """Ids of products that satisfy every AV pair in ``s``.

    A null value never satisfies a constraint unless ``null_matches`` is set.
    """
    s = list(s)
    for av in s:
        if av.attribute not in catalog.attribute_registry:
            raise ValidationError(f"attribute {av.attribute!r} is not registered in {catalog.category!r}")
    out = set()
    for p in catalog.products:
        for av in s:
            v = p.attrs.get(av.attribute)
            if v is None:
                if not null_matches:
                    break
            elif v != av.value:
                break
        else:
            out.add(p.product_id)
    return out
