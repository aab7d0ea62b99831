"""Command-line front end: ``modrewrite <stage|synth|verify> [options]``.

Exit codes: 0 success, 2 configuration error, 3 missing prior-stage
artifact, 4 data error (bad input records, failed verification).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .counter import CounterTable, StreamParams, hh_prune, stream_capacity
from .model import DataError
from .pipeline import STAGES, MissingArtifactError, run_stage
from .rewrite import build_weighted_db, find_itemsets
from .synth import (
    InfeasibleInstance,
    TheoremInstance,
    brute_force_maximal_itemsets,
    exact_counts,
    gen_theorem_instance,
    gen_trails,
    planted_ground_truth,
    random_planted_model,
    random_small_instance,
    read_stream,
    verify_assumptions,
    write_fixture,
    write_json,
    write_stream,
    write_trails,
)

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_DATA = 0, 2, 3, 4

log = logging.getLogger("modrewrite")


def _stage_parser(sub, name: str) -> None:
    p = sub.add_parser(name, help=f"run the {name} stage" if name != "all" else "run every stage in order")
    p.add_argument("--config", type=Path)
    p.add_argument("--category", action="append", dest="categories", help="restrict to a category (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--stage-dir", type=Path)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--top-k", type=int)
    p.add_argument("--normalization", choices=("over_av_pairs", "over_modifiers"))
    p.add_argument("--emit-candidates", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modrewrite", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "all"):
        _stage_parser(sub, name)

    syn = sub.add_parser("synth", help="generate synthetic corpora with ground truth")
    syn.add_argument("kind", choices=("trails", "theorem-instance", "fixture"))
    syn.add_argument("--out", type=Path, required=True, help="output directory")
    syn.add_argument("--config", type=Path, help="validated before generation")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("-n", "--n", type=int, default=1000, help="trails to generate")
    syn.add_argument("--modifier-rate", type=float, default=0.5)
    syn.add_argument("--domains", type=int, default=3)
    syn.add_argument("--attrs", type=int, default=2)
    syn.add_argument("--values", type=int, default=3)
    syn.add_argument("--modifiers", type=int, default=3)
    syn.add_argument("--keywords", type=int, default=20)
    syn.add_argument("--pages", type=int, default=200)
    syn.add_argument("--target-n", type=float, default=1e5)
    syn.add_argument("--profile", choices=("mixed", "identity"), default="mixed")
    for name, default in (("alpha", 0.9), ("beta", 0.8), ("gamma", 1.2), ("delta", 1.5), ("theta", 0.5), ("s-slack", 0.1)):
        syn.add_argument(f"--{name}", type=float, default=default)

    ver = sub.add_parser("verify", help="check theorem-instance assumptions and oracle agreement")
    ver.add_argument("--instance", type=Path, help="instance JSON written by synth theorem-instance")
    ver.add_argument("--stream", type=Path, help="stream file to replay through the counter")
    ver.add_argument("--oracle", type=int, default=0, metavar="N", help="random itemset instances to check")
    ver.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_stage(args: argparse.Namespace) -> int:
    cfg = load_config(
        args.config,
        seed=args.seed,
        stage_dir=args.stage_dir,
        epsilon=args.epsilon,
        top_k=args.top_k,
        normalization=args.normalization,
        emit_candidates=args.emit_candidates,
        categories=args.categories,
    )
    done = run_stage(cfg, args.command)
    for stage, paths in done.items():
        for p in paths:
            print(f"{stage}\t{p}")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.config is not None:
        load_config(args.config)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "fixture":
        for name, p in write_fixture(out, seed=args.seed).items():
            print(f"{name}\t{p}")
        return EXIT_OK
    if args.kind == "trails":
        model = random_planted_model(args.seed, args.domains, args.attrs, args.values, args.modifiers)
        n = write_trails(gen_trails(model, args.modifier_rate, args.n), out / "trails.jsonl")
        write_json(planted_ground_truth(model), out / "ground_truth.json")
        print(f"wrote {n} trails to {out / 'trails.jsonl'}")
        return EXIT_OK
    params = StreamParams(args.alpha, args.beta, args.gamma, args.delta, args.theta, args.s_slack, args.target_n, args.pages)
    try:
        inst = gen_theorem_instance(params, (args.keywords, args.pages), args.profile, args.seed, args.target_n)
    except InfeasibleInstance as exc:
        print(f"error: infeasible instance: {exc}", file=sys.stderr)
        return EXIT_DATA
    write_json(inst.to_json(), out / "instance.json")
    write_stream(inst.stream(), out / "stream.tsv")
    print(f"wrote instance n={inst.params.n:g} m={inst.params.m:g} to {out}")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    failures = 0
    inst = None
    if args.instance is not None:
        try:
            inst = TheoremInstance.from_json(json.loads(args.instance.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"{args.instance}: {exc}") from exc
        violations = verify_assumptions(inst)
        for v in violations:
            print(f"violation\t{v.kind}\t{v.detail}")
        failures += len(violations)
        print(f"assumptions: {'ok' if not violations else f'{len(violations)} violations'}")
    if args.stream is not None:
        stream = read_stream(args.stream)
        exact = exact_counts(stream)
        cap = stream_capacity(inst.params) if inst is not None else max(1, len(exact) // 2)
        table = CounterTable(cap).extend(stream)
        bound = len(stream) / (cap + 1)
        bad = [k for k, c in table.entries.items() if c > exact[k] or exact[k] - c > bound]
        missed = []
        if inst is not None:
            kept = hh_prune(table, inst.params)
            heavy = [k for k, c in exact.items() if c >= inst.params.frequency_threshold()]
            missed = [k for k in heavy if k not in kept]
        failures += len(bad) + len(missed)
        print(f"counter: capacity={cap} undercount-bound={'ok' if not bad else len(bad)} retention={'ok' if not missed else len(missed)}")
    if args.oracle:
        rng = np.random.default_rng(args.seed)
        mismatches = 0
        for _ in range(args.oracle):
            catalog, assoc, _z = random_small_instance(rng)
            db = build_weighted_db(assoc, catalog)
            t = float(rng.uniform(0.0, 1.0)) * db.total_weight
            if find_itemsets(db, t) != brute_force_maximal_itemsets(db, t):
                mismatches += 1
        failures += mismatches
        print(f"itemset oracle: {args.oracle - mismatches}/{args.oracle} agree")
    return EXIT_OK if failures == 0 else EXIT_DATA


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_stage(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
