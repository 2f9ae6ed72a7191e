"""Command-line entry point.

Machine-readable output goes to stdout only; human diagnostics to stderr.
Exit codes: 0 clean, 1 operational fatal, 2 completed with per-line errors,
64 usage errors. Config precedence for the documented keys (workers, lambda,
tau, grid_step, seed, ordered): flags > CASCADE_* environment variables >
./cascade.json.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .engine import ConfigUnresolvable, ScanBundle, ScanConfig, bench, scan
from .extractor import extract, logic_from_json, logic_to_json
from .labels import (
    default_core_registry_path,
    load_labels,
    load_snapshot,
    save_snapshot,
    snapshot_hash,
)
from .matcher import (
    EmptyPattern,
    InvalidHyperparameter,
    generalize,
    load_pattern_dir,
    match_one,
    save_pattern,
)
from .semantics import WireClassifier, content_hash, load_cheatsheet
from .synth import MutationSpec, synth_benign_pool, synth_corpus
from .trace import ParseStats, TraceError, parse_trace
from .tuner import load_corpus_jsonl, nested_cv, save_corpus_jsonl

USAGE_EXIT = 64
FATAL_EXIT = 1
PARTIAL_EXIT = 2

CONFIG_KEYS = ("workers", "lambda", "tau", "grid_step", "seed", "ordered")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _load_config_file(path: Optional[str]) -> dict:
    candidate = path or "cascade.json"
    if not os.path.exists(candidate):
        if path:
            raise FileNotFoundError(candidate)
        return {}
    with open(candidate, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    unknown = set(doc) - set(CONFIG_KEYS)
    if unknown:
        print(f"warning: ignoring unknown config keys {sorted(unknown)}", file=sys.stderr)
    return {k: doc[k] for k in CONFIG_KEYS if k in doc}


def _resolve(key: str, flag_value, file_config: dict, cast, default):
    if flag_value is not None:
        return flag_value
    env = os.environ.get(f"CASCADE_{key.upper()}")
    if env is not None:
        return cast(env)
    if key in file_config:
        return cast(file_config[key])
    return default


def _open_input(path: str):
    if path == "-":
        return sys.stdin
    return open(path, "r", encoding="utf-8")


def _open_output(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def _build_parser() -> _Parser:
    parser = _Parser(prog="cascadescan",
                     description="Generalize confirmed attack traces into "
                                 "patterns and scan trace streams for imitations.")
    parser.add_argument("--version", action="store_true",
                        help="print component versions and data hashes")
    parser.add_argument("--labels-for-version", default=None, metavar="SNAPSHOT",
                        help="with --version: also print this snapshot's hash")
    parser.add_argument("--config", default=None,
                        help="config file path (default ./cascade.json when present)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("labels", help="label snapshot operations")
    labels_sub = p.add_subparsers(dest="labels_command", parser_class=_Parser)
    pl = labels_sub.add_parser("load", help="merge label CSVs into a snapshot")
    pl.add_argument("--in", dest="inputs", nargs="+", required=True)
    pl.add_argument("--core", default=None,
                    help="core-asset registry (default: packaged seed)")
    pl.add_argument("--no-core", action="store_true",
                    help="skip the core-asset registry entirely")
    pl.add_argument("--out", required=True)

    p = sub.add_parser("extract", help="extract attacker-intent logic from traces")
    p.add_argument("--traces", required=True, help="trace JSONL file, or - for stdin")
    p.add_argument("--labels", required=True, help="label snapshot file")
    p.add_argument("--cheatsheet", default=None, help="cheatsheet JSON (default: packaged seed)")
    p.add_argument("--classifier", default=None,
                   help="classifier address (unix:PATH or exec:CMD)")
    p.add_argument("--fallback-on-unavailable", action="store_true")
    p.add_argument("--explain", action="store_true",
                   help="dump per-invocation decisions to stderr")
    p.add_argument("--out", default=None)

    p = sub.add_parser("generalize", help="build a pattern from one attack logic")
    p.add_argument("--attack-logic", required=True, help="ExtractedLogic JSONL file")
    p.add_argument("--tx", default=None, help="select one tx_hash from the file")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--multiset", action="store_true")
    p.add_argument("--pattern-id", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("scan", help="match a trace stream against patterns")
    p.add_argument("--traces", required=True)
    p.add_argument("--patterns", required=True, help="directory of pattern JSON files")
    p.add_argument("--labels", required=True)
    p.add_argument("--cheatsheet", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--ordered", action="store_true", default=None)
    p.add_argument("--explain", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)

    p = sub.add_parser("tune", help="grid search (lambda, tau) with nested CV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("bench", help="repeated scans plus match scaling table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--patterns", required=True)
    p.add_argument("--labels", default=None, help="label snapshot (default: empty)")
    p.add_argument("--cheatsheet", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--reps", type=int, default=5)

    p = sub.add_parser("synth", help="generate a labeled imitation corpus")
    p.add_argument("--seeds", required=True, help="seed attack logics (JSONL)")
    p.add_argument("--spec", required=True, help="mutation spec JSON")
    p.add_argument("--ratio", default="1:1", help="malicious:benign ratio, e.g. 1:5")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--imitations", type=int, default=10)
    p.add_argument("--benign", default=None,
                   help="benign pool JSONL (default: generated)")
    p.add_argument("--out", required=True)
    return parser


def _print_version(labels_path: Optional[str]) -> None:
    cheatsheet = load_cheatsheet()
    print(f"cascadescan {__version__}")
    print(f"cheatsheet {cheatsheet.version} sha256:{content_hash(cheatsheet)[:16]}")
    print(f"core-registry {default_core_registry_path()}")
    if labels_path:
        snapshot = load_snapshot(labels_path)
        print(f"label-snapshot v{snapshot.version} "
              f"sha256:{snapshot_hash(snapshot)[:16]}")


def _cmd_labels_load(args, file_config) -> int:
    core = None if args.no_core else (args.core or default_core_registry_path())
    version = None
    if os.path.exists(args.out):
        # regenerating an existing snapshot bumps its version
        version = load_snapshot(args.out).version + 1
    snapshot = load_labels(args.inputs, core_registry=core, version=version)
    save_snapshot(snapshot, args.out)
    print(f"snapshot v{snapshot.version}: {len(snapshot.entries)} entries, "
          f"{len(snapshot.core_assets)} core assets, "
          f"sha256:{snapshot_hash(snapshot)[:16]} -> {args.out}", file=sys.stderr)
    return 0


def _cmd_extract(args, file_config) -> int:
    snapshot = load_snapshot(args.labels)
    cheatsheet = load_cheatsheet(args.cheatsheet)
    classifier = WireClassifier(args.classifier) if args.classifier else None
    stats = ParseStats()
    bad = 0
    out = _open_output(args.out)
    with _open_input(args.traces) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                trace = parse_trace(line, stats)
            except TraceError as exc:
                bad += 1
                print(f"parse error: {exc}", file=sys.stderr)
                continue
            explain: Optional[list] = [] if args.explain else None
            logic = extract(trace, snapshot, cheatsheet, classifier,
                            fallback_on_unavailable=args.fallback_on_unavailable,
                            explain=explain)
            out.write(logic_to_json(logic) + "\n")
            if explain is not None:
                print(json.dumps({"tx_hash": trace.tx_hash, "explain": explain}),
                      file=sys.stderr)
    if out is not sys.stdout:
        out.close()
    return PARTIAL_EXIT if bad else 0


def _cmd_generalize(args, file_config) -> int:
    lam = _resolve("lambda", args.lam, file_config, float, 0.6)
    tau = _resolve("tau", args.tau, file_config, float, 0.7)
    logics = []
    with _open_input(args.attack_logic) as fh:
        for line in fh:
            if line.strip():
                logics.append(logic_from_json(line))
    if args.tx:
        logics = [lg for lg in logics if lg.tx_hash == args.tx]
    if len(logics) != 1:
        print(f"error: need exactly one attack logic, found {len(logics)} "
              f"(use --tx to select)", file=sys.stderr)
        return FATAL_EXIT
    pattern = generalize(logics[0], lam, tau, pattern_id=args.pattern_id,
                         multiset=args.multiset)
    save_pattern(pattern, args.out)
    check = match_one(pattern, logics[0])
    print(f"pattern {pattern.pattern_id}: core={len(pattern.core_set)} "
          f"proto={len(pattern.proto_set)} lambda={lam} tau={tau}", file=sys.stderr)
    print(f"self-match: sim_final={check.sim_final} flagged={check.flagged}",
          file=sys.stderr)
    return 0


def _make_bundle(labels_path: Optional[str], cheatsheet_path: Optional[str],
                 patterns_dir: str) -> ScanBundle:
    if labels_path:
        snapshot = load_snapshot(labels_path)
    else:
        snapshot = load_labels([], core_registry=default_core_registry_path())
    cheatsheet = load_cheatsheet(cheatsheet_path)
    patterns = tuple(load_pattern_dir(patterns_dir))
    return ScanBundle(snapshot=snapshot, cheatsheet=cheatsheet, patterns=patterns)


def _cmd_scan(args, file_config) -> int:
    bundle = _make_bundle(args.labels, args.cheatsheet, args.patterns)
    workers = _resolve("workers", args.workers, file_config, int, 1)
    ordered = _resolve("ordered", args.ordered, file_config,
                       lambda v: str(v).lower() in ("1", "true", "yes"), False)
    config = ScanConfig(worker_count=workers, ordered=bool(ordered),
                        explain=args.explain)
    out = _open_output(args.out)
    with _open_input(args.traces) as fh:
        report = scan(fh, bundle, config, lambda line: out.write(line + "\n"))
    if out is not sys.stdout:
        out.close()
    report_json = json.dumps(report.to_dict(), indent=1)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report_json + "\n")
    else:
        print(report_json, file=sys.stderr)
    return PARTIAL_EXIT if (report.parse_errors or report.errors) else 0


def _cmd_tune(args, file_config) -> int:
    corpus = load_corpus_jsonl(args.corpus)
    step = _resolve("grid_step", args.grid_step, file_config, float, 0.02)
    seed = _resolve("seed", args.seed, file_config, int, 0)
    from .tuner import default_grid
    result = nested_cv(corpus, outer_folds=args.folds, grid=default_grid(step),
                       seed=seed)
    doc = json.dumps(result.to_dict(), indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc + "\n")
        print(f"best lambda={result.best_lambda} tau={result.best_tau} -> {args.out}",
              file=sys.stderr)
    else:
        print(doc)
    return 0


def _cmd_bench(args, file_config) -> int:
    bundle = _make_bundle(args.labels, args.cheatsheet, args.patterns)
    workers = _resolve("workers", args.workers, file_config, int, 1)
    config = ScanConfig(worker_count=workers)
    with _open_input(args.corpus) as fh:
        lines = [line for line in fh if line.strip()]
    report = bench(lines, bundle, config, repetitions=args.reps)
    print(json.dumps(report, indent=1))
    return 0


def _cmd_synth(args, file_config) -> int:
    seeds = []
    with _open_input(args.seeds) as fh:
        for line in fh:
            if line.strip():
                seeds.append(logic_from_json(line))
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec_doc = json.load(fh)
    seed = _resolve("seed", args.seed, file_config, int, spec_doc.get("seed", 0))
    spec = MutationSpec(
        reorder=bool(spec_doc.get("reorder", True)),
        noise_items=int(spec_doc.get("noise_items", 0)),
        drop_fraction=float(spec_doc.get("drop_fraction", 0.0)),
        token_rename=bool(spec_doc.get("token_rename", False)),
        seed=seed,
    )
    try:
        rm, rb = (int(x) for x in args.ratio.split(":"))
    except ValueError:
        print(f"error: bad ratio {args.ratio!r}, expected M:B", file=sys.stderr)
        return USAGE_EXIT
    if args.benign:
        benign = []
        with _open_input(args.benign) as fh:
            for line in fh:
                if line.strip():
                    benign.append(logic_from_json(line))
    else:
        need = len(seeds) * args.imitations * rb // rm
        benign = synth_benign_pool(max(need, 3), seed + 7)
    corpus = synth_corpus(seeds, spec, args.imitations, benign, ratio=(rm, rb))
    save_corpus_jsonl(corpus, args.out)
    m, b = corpus.counts()
    print(f"corpus: {m} malicious / {b} benign -> {args.out}", file=sys.stderr)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.version:
        _print_version(args.labels_for_version)
        return 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    if args.command == "labels" and not args.labels_command:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    try:
        file_config = _load_config_file(args.config)
        if args.command == "labels":
            return _cmd_labels_load(args, file_config)
        handlers = {
            "extract": _cmd_extract,
            "generalize": _cmd_generalize,
            "scan": _cmd_scan,
            "tune": _cmd_tune,
            "bench": _cmd_bench,
            "synth": _cmd_synth,
        }
        return handlers[args.command](args, file_config)
    except (FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FATAL_EXIT
    except (ConfigUnresolvable, EmptyPattern, InvalidHyperparameter, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FATAL_EXIT


def console() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console()
