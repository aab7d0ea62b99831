"""Bounded-memory frequency counting and keyword-list construction.

The counter is the classical decrement-all heavy-hitter table: with
``capacity`` slots over a stream of ``N`` items, every stored count is at
most the true count and at least ``true - N / (capacity + 1)``.

On top of it sit the two keyword-list filters for (keyword, page) counts:

* ``L_p`` keeps keywords whose scaled frequency ``g = f * m / n`` clears
  ``alpha*beta*theta``;
* ``L'_p`` keeps keywords whose per-keyword normalized score
  ``h = g / n_q``, divided by the page maximum, clears
  ``alpha*beta*theta / (gamma*delta)``.

The final list for a page is their intersection.  In streaming mode both
thresholds are relaxed by ``(1 - S)`` to absorb the counter's undercount.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from collections.abc import Callable, Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO

log = logging.getLogger(__name__)

STATIC = "static"
STREAMING = "streaming"

# relative slack on retain-side comparisons, so f == threshold survives rounding
_RETAIN_EPS = 1e-12


class CounterTable:
    """Capacity-bounded key -> count table (decrement-all update rule)."""

    __slots__ = ("capacity", "entries", "items_seen")

    def __init__(self, capacity: int, entries: Mapping[Hashable, int] | None = None, items_seen: int = 0) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.entries: dict[Hashable, int] = dict(entries or {})
        self.items_seen = int(items_seen)
        if len(self.entries) > self.capacity:
            raise ValueError("more entries than capacity")
        if any(c < 1 for c in self.entries.values()):
            raise ValueError("stored counts must be >= 1")

    def update(self, key: Hashable) -> None:
        self.items_seen += 1
        entries = self.entries
        if key in entries:
            entries[key] += 1
        elif len(entries) < self.capacity:
            entries[key] = 1
        else:
            # the incoming key is not inserted; each decrement round removes
            # capacity+1 units of mass, so total work stays O(N)
            self.entries = {k: c - 1 for k, c in entries.items() if c > 1}

    def extend(self, keys: Iterable[Hashable]) -> CounterTable:
        for key in keys:
            self.update(key)
        return self

    def __getitem__(self, key: Hashable) -> int:
        return self.entries.get(key, 0)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CounterTable):
            return NotImplemented
        return (
            self.capacity == other.capacity
            and self.items_seen == other.items_seen
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"CounterTable(capacity={self.capacity}, items_seen={self.items_seen}, size={len(self.entries)})"

    @property
    def error_bound(self) -> float:
        """Maximum undercount of any stored or dropped key."""
        return self.items_seen / (self.capacity + 1)


def hh_update(table: CounterTable, key: Hashable) -> CounterTable:
    table.update(key)
    return table


@dataclass(frozen=True)
class StreamParams:
    alpha: float
    beta: float
    gamma: float
    delta: float
    theta: float
    s_slack: float
    n: float
    m: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "theta"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        for name in ("gamma", "delta"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.s_slack < 1.0:
            raise ValueError(f"s_slack must be in (0, 1), got {self.s_slack}")
        if self.abt > self.gamma * self.delta:
            raise ValueError("alpha*beta*theta exceeds gamma*delta; L'_p would retain nothing")
        if self.n < 0 or self.m < 0:
            raise ValueError("n and m must be non-negative")

    @property
    def abt(self) -> float:
        return self.alpha * self.beta * self.theta

    def frequency_threshold(self) -> float:
        """``alpha*beta*theta * n / m``: the heavy-pair frequency cutoff."""
        return self.abt * self.n / self.m

    def prune_threshold(self) -> float:
        return (1.0 - self.s_slack) * self.frequency_threshold()

    def list_threshold(self, mode: str) -> float:
        return self.abt if mode == STATIC else (1.0 - self.s_slack) * self.abt

    def ratio_threshold(self, mode: str) -> float:
        return self.list_threshold(mode) / (self.gamma * self.delta)

    def size_bound(self, mode: str) -> float:
        return self.gamma * self.m / self.list_threshold(mode)

    def error_bound(self, mode: str) -> float:
        return self.ratio_threshold(mode) ** 2


def stream_capacity(params: StreamParams, cap: int | None = None) -> int:
    """Counter capacity ``ceil(m / (S * alpha*beta*theta))``, optionally capped."""
    raw = params.m / (params.s_slack * params.abt)
    capacity = max(1, math.ceil(raw - 1e-9))
    if cap is not None and capacity > cap:
        log.warning("counter capacity %d exceeds configured cap %d; guarantees no longer hold", capacity, cap)
        capacity = cap
    return capacity


def hh_prune(table: CounterTable, params: StreamParams) -> dict[Hashable, int]:
    threshold = params.prune_threshold()
    return {k: c for k, c in table.entries.items() if c >= threshold * (1 - _RETAIN_EPS)}


@dataclass(frozen=True)
class KeywordStats:
    """Per-keyword totals: ``n_q`` occurrences and ``m_q`` page mass."""

    n_q: Mapping[Hashable, float]
    m_q: Mapping[Hashable, float]

    @property
    def n(self) -> float:
        return sum(self.n_q.values())

    @property
    def m(self) -> float:
        return sum(self.m_q.values())

    @classmethod
    def from_counts(cls, counts: Mapping[tuple[Hashable, Hashable], int]) -> KeywordStats:
        """Measure stats from (keyword, page) counts: ``m_q`` = pages with nonzero count."""
        n_q: dict[Hashable, float] = {}
        m_q: dict[Hashable, float] = {}
        for (q, _p), c in counts.items():
            if c > 0:
                n_q[q] = n_q.get(q, 0) + c
                m_q[q] = m_q.get(q, 0) + 1
        return cls(n_q, m_q)


@dataclass
class KeywordLists:
    L_p: dict[Hashable, set] = field(default_factory=dict)
    L_prime_p: dict[Hashable, set] = field(default_factory=dict)
    final_p: dict[Hashable, set] = field(default_factory=dict)

    def total_size(self) -> int:
        return sum(len(v) for v in self.L_p.values())


def build_lists(
    counts: Mapping[tuple[Hashable, Hashable], float],
    stats: KeywordStats,
    params: StreamParams,
    mode: str = STATIC,
) -> KeywordLists:
    if mode not in (STATIC, STREAMING):
        raise ValueError(f"mode must be {STATIC!r} or {STREAMING!r}")
    scale = params.m / params.n if params.n else 0.0
    by_page: dict[Hashable, dict[Hashable, float]] = {}
    for (q, p), f in counts.items():
        by_page.setdefault(p, {})[q] = f

    lt = params.list_threshold(mode) * (1 - _RETAIN_EPS)
    rt = params.ratio_threshold(mode) * (1 - _RETAIN_EPS)
    lists = KeywordLists()
    for p in sorted(by_page, key=repr):
        row = by_page[p]
        g = {q: f * scale for q, f in row.items()}
        lp = {q for q, v in g.items() if v > 0 and v >= lt}
        h = {}
        for q, v in g.items():
            nq = stats.n_q.get(q, 0)
            if nq <= 0:
                if v > 0:
                    raise ValueError(f"keyword {q!r} has counts but no n_q")
                continue
            h[q] = v / nq
        top = max(h.values(), default=0.0)
        lpp = {q for q, v in h.items() if v > 0 and v / top >= rt} if top > 0 else set()
        lists.L_p[p] = lp
        lists.L_prime_p[p] = lpp
        lists.final_p[p] = lp & lpp
    return lists


# --- snapshots -------------------------------------------------------------

_MAGIC = b"MRCT"
_VERSION = 1
_HEADER = struct.Struct(">4sHQQQ")
_ENTRY_LEN = struct.Struct(">I")
_COUNT = struct.Struct(">Q")


class SnapshotError(ValueError):
    pass


def _tuplify(obj: Any) -> Any:
    if isinstance(obj, list):
        return tuple(_tuplify(x) for x in obj)
    return obj


def _default_encode(key: Hashable) -> Any:
    return key


def dump_snapshot(
    table: CounterTable,
    fh: BinaryIO,
    encode: Callable[[Hashable], Any] = _default_encode,
) -> None:
    """Write a versioned binary snapshot; entries sorted by encoded key bytes.

    Keys must encode to JSON (tuples become arrays and are restored as
    tuples on load).
    """
    encoded = sorted(
        (json.dumps(encode(k), ensure_ascii=False, separators=(",", ":")).encode("utf-8"), c)
        for k, c in table.entries.items()
    )
    fh.write(_HEADER.pack(_MAGIC, _VERSION, table.capacity, table.items_seen, len(encoded)))
    for kb, c in encoded:
        fh.write(_ENTRY_LEN.pack(len(kb)))
        fh.write(kb)
        fh.write(_COUNT.pack(c))


def load_snapshot(fh: BinaryIO, decode: Callable[[Any], Hashable] = _tuplify) -> CounterTable:
    head = fh.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise SnapshotError("truncated snapshot header")
    magic, version, capacity, items_seen, count = _HEADER.unpack(head)
    if magic != _MAGIC:
        raise SnapshotError("not a counter snapshot")
    if version != _VERSION:
        raise SnapshotError(f"unsupported snapshot version {version} (expected {_VERSION})")
    entries = {}
    for _ in range(count):
        raw = fh.read(_ENTRY_LEN.size)
        if len(raw) != _ENTRY_LEN.size:
            raise SnapshotError("truncated snapshot entry")
        (n,) = _ENTRY_LEN.unpack(raw)
        kb = fh.read(n)
        cb = fh.read(_COUNT.size)
        if len(kb) != n or len(cb) != _COUNT.size:
            raise SnapshotError("truncated snapshot entry")
        entries[decode(_tuplify(json.loads(kb.decode("utf-8"))))] = _COUNT.unpack(cb)[0]
    if fh.read(1):
        raise SnapshotError("trailing bytes after snapshot")
    return CounterTable(capacity, entries, items_seen)


def save_snapshot(table: CounterTable, path: str | Path, encode: Callable[[Hashable], Any] = _default_encode) -> None:
    with open(path, "wb") as fh:
        dump_snapshot(table, fh, encode)


def read_snapshot(path: str | Path, decode: Callable[[Any], Hashable] = _tuplify) -> CounterTable:
    with open(path, "rb") as fh:
        return load_snapshot(fh, decode)
