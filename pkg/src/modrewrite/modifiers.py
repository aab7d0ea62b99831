"""Score free tokens by how concentrated they are over domains."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from .labeler import DistributionBundle

RANKING_HEADER = "# modrewrite ranking v1"


@dataclass(frozen=True)
class ModifierRanking:
    category: str
    ranked: tuple[tuple[str, float], ...]

    @property
    def tokens(self) -> list[str]:
        return [t for t, _ in self.ranked]


def _profile(bundle: DistributionBundle, f: str) -> list[float]:
    return [p for (tok, _d), p in bundle.p_free_given_domain.items() if tok == f]


def document_frequency(bundle: DistributionBundle, f: str) -> int:
    return sum(1 for p in _profile(bundle, f) if p > 0)


def importance_score(mass: float, df: int, n_domains: int) -> float:
    """``mass * ln(|D| / (1 + df))``; negative for near-ubiquitous tokens."""
    return mass * math.log(n_domains / (1.0 + df))


def importance(bundle: DistributionBundle, f: str) -> float:
    n_domains = len(bundle.p_domain)
    if n_domains < 1:
        raise ValueError("bundle has no domains")
    profile = sorted(_profile(bundle, f))
    mass = math.fsum(profile)
    if mass == 0:
        return 0.0
    return importance_score(mass, sum(1 for p in profile if p > 0), n_domains)


def top_modifiers(
    bundle: DistributionBundle,
    k: int = 10,
    allow: Iterable[str] | None = None,
    deny: Iterable[str] = (),
) -> ModifierRanking:
    """The ``k`` highest-importance free tokens, ties broken by token text.

    ``allow`` (when given) restricts the candidate pool; ``deny`` removes
    tokens from it.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n_domains = len(bundle.p_domain)
    profiles: dict[str, list[float]] = {}
    for (tok, _d), p in bundle.p_free_given_domain.items():
        profiles.setdefault(tok, []).append(p)
    pool = set(profiles)
    if allow is not None:
        pool &= set(allow)
    pool -= set(deny)
    scored = []
    for t in pool:
        mass = math.fsum(profiles[t])
        df = sum(1 for p in profiles[t] if p > 0)
        scored.append((t, importance_score(mass, df, n_domains) if mass else 0.0))
    scored.sort(key=lambda ts: (-ts[1], ts[0]))
    return ModifierRanking(bundle.category, tuple(scored[:k]))


def write_ranking(rankings: Iterable[ModifierRanking], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RANKING_HEADER + "\n")
        for r in rankings:
            for token, score in r.ranked:
                fh.write(f"{r.category}\t{token}\t{score!r}\n")


def read_ranking(path: str | Path) -> list[ModifierRanking]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != RANKING_HEADER:
        raise ValueError(f"{path}: not a v1 ranking report")
    by_cat: dict[str, list[tuple[str, float]]] = {}
    for ln in lines[1:]:
        cat, token, score = ln.split("\t")
        by_cat.setdefault(cat, []).append((token, float(score)))
    return [ModifierRanking(c, tuple(r)) for c, r in by_cat.items()]
