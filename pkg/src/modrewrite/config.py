"""Pipeline configuration: an INI file plus ``MODREWRITE_*`` environment overrides.

Schema (every key optional except the paths needed by the stage you run)::

    [paths]
    trails = trails.jsonl          ; relative paths resolve against the config file
    catalog = catalog.jsonl
    stage_dir = out

    [pipeline]
    seed = 0
    workers = 1
    capacity =                     ; empty: exact counting
    capacity_cap =
    count_revisits = false
    null_matches = false
    min_nonnull_fraction = 0.10
    top_k = 10
    allow_modifiers =              ; comma separated
    deny_modifiers =
    normalization = over_av_pairs  ; or over_modifiers
    epsilon = 0.05
    max_attributes =
    z =                            ; "brand=2, color=1"; unlisted attributes get 1
    buckets =                      ; "diagonal size:equal_width:40:0; btu:equal_depth:3"
    template =                     ; "brand,manufacturer | product line | *material*,*type*"
    list_mode = false
    alpha = 0.9
    beta = 0.8
    gamma = 1.2
    delta = 1.5
    theta = 0.5
    s_slack = 0.1

    [category televisions]         ; per-category overrides of [pipeline] keys
    epsilon = 0.02

An environment variable ``MODREWRITE_<KEY>`` (e.g. ``MODREWRITE_EPSILON``,
``MODREWRITE_STAGE_DIR``) overrides the same key in ``[paths]`` or
``[pipeline]``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .associate import EQUAL_DEPTH, EQUAL_WIDTH, NORMALIZATIONS, BucketSpec
from .model import AttributeImportance, normalize_text
from .rewrite import DEFAULT_TEMPLATE

ENV_PREFIX = "MODREWRITE_"
PATH_KEYS = ("trails", "catalog", "stage_dir")


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _opt_int(text: str) -> int | None:
    return int(text) if text.strip() else None


def _list(text: str) -> tuple[str, ...]:
    return tuple(normalize_text(x) for x in text.split(",") if x.strip())


def parse_z(text: str) -> dict[str, float]:
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        name, _, value = part.rpartition("=")
        if not name.strip():
            raise ConfigError(f"bad z entry {part!r}; expected attribute=weight")
        out[normalize_text(name)] = float(value)
    return out


def parse_buckets(text: str) -> tuple[BucketSpec, ...]:
    specs = []
    for part in text.split(";"):
        if not part.strip():
            continue
        bits = [b.strip() for b in part.split(":")]
        if len(bits) not in (3, 4):
            raise ConfigError(f"bad bucket spec {part!r}; expected attribute:strategy:param[:origin]")
        origin = float(bits[3]) if len(bits) == 4 else 0.0
        try:
            specs.append(BucketSpec(normalize_text(bits[0]), bits[1], float(bits[2]), origin))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return tuple(specs)


def parse_template(text: str) -> tuple[tuple[str, ...], ...]:
    return tuple(tuple(x.strip().lower() for x in tier.split(",") if x.strip()) for tier in text.split("|") if tier.strip())


@dataclass(frozen=True)
class CategoryParams:
    capacity: int | None = None
    capacity_cap: int | None = None
    count_revisits: bool = False
    null_matches: bool = False
    min_nonnull_fraction: float = 0.10
    top_k: int = 10
    allow_modifiers: tuple[str, ...] | None = None
    deny_modifiers: tuple[str, ...] = ()
    normalization: str = "over_av_pairs"
    epsilon: float = 0.05
    max_attributes: int | None = None
    z: Mapping[str, float] = field(default_factory=dict)
    buckets: tuple[BucketSpec, ...] = ()
    template: tuple[tuple[str, ...], ...] = DEFAULT_TEMPLATE
    list_mode: bool = False
    alpha: float = 0.9
    beta: float = 0.8
    gamma: float = 1.2
    delta: float = 1.5
    theta: float = 0.5
    s_slack: float = 0.1

    def validate(self) -> None:
        if self.capacity is not None and self.capacity < 1:
            raise ConfigError("capacity must be positive")
        if not 0.0 <= self.min_nonnull_fraction <= 1.0:
            raise ConfigError("min_nonnull_fraction must be in [0, 1]")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.max_attributes is not None and self.max_attributes < 1:
            raise ConfigError("max_attributes must be positive")
        if any(v < 0 for v in self.z.values()):
            raise ConfigError("z weights must be non-negative")
        for b in self.buckets:
            if b.strategy not in (EQUAL_WIDTH, EQUAL_DEPTH):
                raise ConfigError(f"bad bucket strategy {b.strategy!r}")
        if self.list_mode:
            for name in ("alpha", "beta", "theta"):
                if not 0.0 < getattr(self, name) <= 1.0:
                    raise ConfigError(f"{name} must be in (0, 1]")
            if not 0.0 < self.s_slack < 1.0:
                raise ConfigError("s_slack must be in (0, 1)")
            if self.alpha * self.beta * self.theta > self.gamma * self.delta:
                raise ConfigError("alpha*beta*theta must not exceed gamma*delta")

    def importance(self) -> AttributeImportance:
        try:
            return AttributeImportance(dict(self.z), default=1.0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


_PARSERS = {
    "capacity": _opt_int,
    "capacity_cap": _opt_int,
    "count_revisits": _bool,
    "null_matches": _bool,
    "min_nonnull_fraction": float,
    "top_k": int,
    "allow_modifiers": lambda t: _list(t) or None,
    "deny_modifiers": _list,
    "normalization": str.strip,
    "epsilon": float,
    "max_attributes": _opt_int,
    "z": parse_z,
    "buckets": parse_buckets,
    "template": lambda t: parse_template(t) or DEFAULT_TEMPLATE,
    "list_mode": _bool,
    "alpha": float,
    "beta": float,
    "gamma": float,
    "delta": float,
    "theta": float,
    "s_slack": float,
}


def _apply(base: CategoryParams, raw: Mapping[str, str], where: str) -> CategoryParams:
    updates = {}
    for key, text in raw.items():
        if key not in _PARSERS:
            raise ConfigError(f"[{where}] unknown key {key!r}")
        try:
            updates[key] = _PARSERS[key](text)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{where}] {key}: {exc}") from exc
    params = replace(base, **updates)
    params.validate()
    return params


@dataclass(frozen=True)
class PipelineConfig:
    trails: Path | None = None
    catalog: Path | None = None
    stage_dir: Path = Path("out")
    seed: int = 0
    workers: int = 1
    defaults: CategoryParams = field(default_factory=CategoryParams)
    overrides: Mapping[str, CategoryParams] = field(default_factory=dict)
    categories: tuple[str, ...] | None = None
    emit_candidates: bool = False

    def params_for(self, category: str) -> CategoryParams:
        return self.overrides.get(category, self.defaults)

    def require_inputs(self) -> None:
        for name in ("trails", "catalog"):
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"no {name} path configured")
            if not path.exists():
                raise ConfigError(f"{name} path does not exist: {path}")

    def digest(self) -> str:
        """Stable hash of everything that can change artifact bytes."""
        payload = {
            "seed": self.seed,
            "defaults": _jsonable(self.defaults),
            "overrides": {c: _jsonable(p) for c, p in sorted(self.overrides.items())},
            "categories": self.categories,
            "emit_candidates": self.emit_candidates,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _jsonable(params: CategoryParams) -> dict:
    d = asdict(params)
    d["z"] = dict(sorted(params.z.items()))
    d["buckets"] = [asdict(b) for b in params.buckets]
    return d


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None, **cli: object) -> PipelineConfig:
    """Read the INI file, then environment overrides, then CLI overrides (non-None only)."""
    env = os.environ if env is None else env
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        base_dir = path.parent

    paths = dict(parser["paths"]) if parser.has_section("paths") else {}
    pipeline = dict(parser["pipeline"]) if parser.has_section("pipeline") else {}
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in PATH_KEYS:
            paths[name] = value
        elif name in _PARSERS or name in ("seed", "workers"):
            pipeline[name] = value
        else:
            raise ConfigError(f"unknown environment override {key}")
    for key in paths:
        if key not in PATH_KEYS:
            raise ConfigError(f"[paths] unknown key {key!r}")

    def resolve(p: str | None) -> Path | None:
        if p is None or not str(p).strip():
            return None
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    try:
        seed = int(pipeline.pop("seed", "0"))
        workers = int(pipeline.pop("workers", "1"))
    except ValueError as exc:
        raise ConfigError(f"[pipeline] {exc}") from exc
    defaults = _apply(CategoryParams(), pipeline, "pipeline")
    overrides = {}
    for section in parser.sections():
        if section.startswith("category "):
            name = normalize_text(section[len("category "):])
            overrides[name] = _apply(defaults, dict(parser[section]), section)
        elif section not in ("paths", "pipeline", "synth"):
            raise ConfigError(f"unknown section [{section}]")

    cli_params = {k: v for k, v in cli.items() if v is not None and k in {f.name for f in fields(CategoryParams)}}
    if cli_params:
        defaults = replace(defaults, **cli_params)
        defaults.validate()
        overrides = {c: replace(p, **cli_params) for c, p in overrides.items()}
        for p in overrides.values():
            p.validate()

    stage_dir = cli.get("stage_dir") or resolve(paths.get("stage_dir")) or base_dir / "out"
    categories = cli.get("categories")
    cfg = PipelineConfig(
        trails=resolve(paths.get("trails")),
        catalog=resolve(paths.get("catalog")),
        stage_dir=Path(stage_dir),
        seed=int(cli["seed"]) if cli.get("seed") is not None else seed,
        workers=max(1, workers),
        defaults=defaults,
        overrides=overrides,
        categories=tuple(normalize_text(c) for c in categories) if categories else None,
        emit_candidates=bool(cli.get("emit_candidates", False)),
    )
    return cfg
