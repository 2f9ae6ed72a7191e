"""End-to-end scanning: stream traces, extract, match, report.

The workload is embarrassingly parallel per transaction: extract and match
are fused per worker over read-only snapshots (labels, cheatsheet, patterns),
so results are deterministic and independent of worker count and input
interleaving. A malformed line is counted and skipped; a processing failure
on one trace becomes an error result for that trace, never a scan abort.
"""

from __future__ import annotations

import itertools
import json
import pickle
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .extractor import extract
from .labels import LabelSnapshot
from .matcher import Pattern, match_all
from .semantics import Cheatsheet
from .trace import ParseStats, TraceError, parse_trace


class ConfigUnresolvable(ValueError):
    pass


@dataclass(frozen=True)
class ScanBundle:
    """The pinned read-only inputs of one scan."""

    snapshot: LabelSnapshot
    cheatsheet: Cheatsheet
    patterns: Tuple[Pattern, ...]


@dataclass(frozen=True)
class ScanConfig:
    worker_count: int = 1
    ordered: bool = False
    explain: bool = False
    trace_budget_s: float = 5.0
    chunk_size: int = 256
    # optional pins checked against the bundle before processing
    label_snapshot_version: Optional[int] = None
    cheatsheet_version: Optional[str] = None
    pattern_ids: Optional[Tuple[str, ...]] = None


@dataclass
class StageStats:
    p50: float = 0.0
    p95: float = 0.0
    max: float = 0.0

    @classmethod
    def of(cls, samples: List[float]) -> "StageStats":
        if not samples:
            return cls()
        ordered = sorted(samples)
        return cls(
            p50=ordered[len(ordered) // 2],
            p95=ordered[min(len(ordered) - 1, int(len(ordered) * 0.95))],
            max=ordered[-1],
        )


@dataclass
class ScanReport:
    total: int = 0
    flagged: int = 0
    errors: int = 0
    timed_out: int = 0
    parse_errors: int = 0
    duplicate_tx: int = 0
    unknown_fields: int = 0
    per_pattern_hits: dict = field(default_factory=dict)
    wall_time: float = 0.0
    throughput_tps: float = 0.0
    extract_stats: StageStats = field(default_factory=StageStats)
    match_stats: StageStats = field(default_factory=StageStats)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "flagged": self.flagged,
            "errors": self.errors,
            "timed_out": self.timed_out,
            "parse_errors": self.parse_errors,
            "duplicate_tx": self.duplicate_tx,
            "unknown_fields": self.unknown_fields,
            "per_pattern_hits": dict(sorted(self.per_pattern_hits.items())),
            "wall_time": self.wall_time,
            "throughput_tps": self.throughput_tps,
            "latency": {
                "extract": vars(self.extract_stats),
                "match": vars(self.match_stats),
            },
        }


def _validate_config(bundle: ScanBundle, config: ScanConfig) -> None:
    if config.worker_count < 1:
        raise ConfigUnresolvable("worker_count must be >= 1")
    if not bundle.patterns:
        raise ConfigUnresolvable("no patterns loaded")
    if (config.label_snapshot_version is not None
            and config.label_snapshot_version != bundle.snapshot.version):
        raise ConfigUnresolvable(
            f"label snapshot version {bundle.snapshot.version} != pinned "
            f"{config.label_snapshot_version}"
        )
    if (config.cheatsheet_version is not None
            and config.cheatsheet_version != bundle.cheatsheet.version):
        raise ConfigUnresolvable(
            f"cheatsheet version {bundle.cheatsheet.version} != pinned "
            f"{config.cheatsheet_version}"
        )
    if config.pattern_ids is not None:
        have = {p.pattern_id for p in bundle.patterns}
        missing = [pid for pid in config.pattern_ids if pid not in have]
        if missing:
            raise ConfigUnresolvable(f"patterns not loaded: {missing}")


# one record per input line:
# (kind, tx_hash, line_out, extract_s, match_s, flagged_pattern_ids, unknown_fields)
_LineRecord = Tuple[str, str, Optional[str], float, float, Tuple[str, ...], int]


def _process_line(line: str, bundle: ScanBundle, config: ScanConfig) -> Optional[_LineRecord]:
    line = line.strip()
    if not line:
        return None
    stats = ParseStats()
    started = time.perf_counter()
    try:
        trace = parse_trace(line, stats)
    except TraceError:
        return ("PARSE_ERROR", "", None, 0.0, 0.0, (), stats.unknown_fields)
    try:
        explain: Optional[list] = [] if config.explain else None
        logic = extract(trace, bundle.snapshot, bundle.cheatsheet, explain=explain)
        t_extract = time.perf_counter()
        if t_extract - started > config.trace_budget_s:
            out = {"tx_hash": trace.tx_hash, "status": "TIMED_OUT", "flagged": False,
                   "matches": []}
            return ("TIMED_OUT", trace.tx_hash, json.dumps(out), t_extract - started,
                    0.0, (), stats.unknown_fields)
        results = match_all(bundle.patterns, logic)
        t_match = time.perf_counter()
        flagged_ids = tuple(r.pattern_id for r in results if r.flagged)
        out = {
            "tx_hash": trace.tx_hash,
            "status": "OK",
            "flagged": bool(flagged_ids),
            "matches": [r.to_dict() for r in results],
        }
        if explain is not None:
            out["explain"] = explain
        kind = "TIMED_OUT" if t_match - started > config.trace_budget_s else "OK"
        if kind == "TIMED_OUT":
            out["status"] = "TIMED_OUT"
        return (kind, trace.tx_hash, json.dumps(out), t_extract - started,
                t_match - t_extract, flagged_ids, stats.unknown_fields)
    except Exception as exc:  # crash containment: one bad trace, one error line
        out = {"tx_hash": trace.tx_hash, "status": "ERROR", "flagged": False,
               "error": f"{type(exc).__name__}: {exc}", "matches": []}
        return ("ERROR", trace.tx_hash, json.dumps(out), 0.0, 0.0, (),
                stats.unknown_fields)


_WORKER_STATE: dict = {}


def _worker_init(blob: bytes) -> None:
    bundle, config = pickle.loads(blob)
    _WORKER_STATE["bundle"] = bundle
    _WORKER_STATE["config"] = config


def _worker_chunk(chunk: List[str]) -> List[_LineRecord]:
    bundle = _WORKER_STATE["bundle"]
    config = _WORKER_STATE["config"]
    out = []
    for line in chunk:
        rec = _process_line(line, bundle, config)
        if rec is not None:
            out.append(rec)
    return out


def _chunks(lines: Iterable[str], size: int) -> Iterable[List[str]]:
    it = iter(lines)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def scan(lines: Iterable[str], bundle: ScanBundle, config: ScanConfig,
         emit: Callable[[str], None]) -> ScanReport:
    """Scan a stream of trace JSON lines, emitting one result line per valid
    trace and returning the reconciled report."""
    _validate_config(bundle, config)
    report = ScanReport()
    seen_tx: set = set()
    extract_times: List[float] = []
    match_times: List[float] = []

    def consume(rec: _LineRecord) -> None:
        kind, tx_hash, line_out, t_extract, t_match, flagged_ids, unknown = rec
        report.unknown_fields += unknown
        if kind == "PARSE_ERROR":
            report.parse_errors += 1
            return
        report.total += 1
        if tx_hash in seen_tx:
            report.duplicate_tx += 1
        seen_tx.add(tx_hash)
        if kind == "ERROR":
            report.errors += 1
        elif kind == "TIMED_OUT":
            report.timed_out += 1
        else:
            extract_times.append(t_extract)
            match_times.append(t_match)
        if flagged_ids:
            report.flagged += 1
            for pid in flagged_ids:
                report.per_pattern_hits[pid] = report.per_pattern_hits.get(pid, 0) + 1
        emit(line_out)

    started = time.perf_counter()
    if config.worker_count == 1:
        for line in lines:
            rec = _process_line(line, bundle, config)
            if rec is not None:
                consume(rec)
    else:
        blob = pickle.dumps((bundle, config))
        with ProcessPoolExecutor(max_workers=config.worker_count,
                                 initializer=_worker_init,
                                 initargs=(blob,)) as pool:
            futures = [pool.submit(_worker_chunk, chunk)
                       for chunk in _chunks(lines, config.chunk_size)]
            ordered_futures = futures if config.ordered else as_completed(futures)
            for fut in ordered_futures:
                for rec in fut.result():
                    consume(rec)

    report.wall_time = time.perf_counter() - started
    report.throughput_tps = report.total / report.wall_time if report.wall_time > 0 else 0.0
    report.extract_stats = StageStats.of(extract_times)
    report.match_stats = StageStats.of(match_times)
    return report


def _median(values: List[float]) -> float:
    ordered = sorted(values)
    return ordered[len(ordered) // 2]


def bench(corpus_lines: Sequence[str], bundle: ScanBundle, config: ScanConfig,
          repetitions: int = 5) -> dict:
    """Repeated scans plus a match-stage scaling table.

    The scaling table times match-only latency for candidate lengths
    100/200/400/800 against a fixed 800-key pattern, checking that growth
    stays linear in the candidate length.
    """
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    if not corpus_lines:
        raise ValueError("empty corpus")
    runs = []
    for _ in range(repetitions):
        sink: List[str] = []
        runs.append(scan(iter(corpus_lines), bundle, config, sink.append))
    wall = _median([r.wall_time for r in runs])
    tps = _median([r.throughput_tps for r in runs])
    report = runs[len(runs) // 2]
    return {
        "repetitions": repetitions,
        "median_wall_time": wall,
        "median_throughput_tps": tps,
        "scan": report.to_dict(),
        "match_scaling": match_scaling_table(),
    }


def match_scaling_table(pattern_keys: int = 800,
                        candidate_lengths: Sequence[int] = (100, 200, 400, 800),
                        iterations: int = 200) -> dict:
    """Median match-only latency per candidate length, plus doubling ratios."""
    from .extractor import ExtractedLogic, LogicItem
    from .labels import AddressRole, TokenClass
    from .matcher import match_one, Pattern

    half = pattern_keys // 2
    core = tuple((f"C{i:04d}", TokenClass.CORE.value, AddressRole.CORE_ASSET_TOKEN.value)
                 for i in range(half))
    proto = tuple((f"P{i:04d}", TokenClass.PROTOCOL_SPECIFIC.value,
                   AddressRole.PROTOCOL_TOKEN.value)
                  for i in range(pattern_keys - half))
    pattern = Pattern(pattern_id="bench", source_tx="0x" + "0" * 64, lam=0.6, tau=0.7,
                      core_set=core, proto_set=proto)

    def candidate(n: int) -> ExtractedLogic:
        items = []
        for i in range(n):
            if i % 2 == 0:
                items.append(LogicItem(f"C{i // 2:04d}", TokenClass.CORE,
                                       AddressRole.CORE_ASSET_TOKEN, 0))
            else:
                items.append(LogicItem(f"P{i // 2:04d}", TokenClass.PROTOCOL_SPECIFIC,
                                       AddressRole.PROTOCOL_TOKEN, 0))
        return ExtractedLogic("0x" + "1" * 64, tuple(items), n)

    latencies = {}
    for n in candidate_lengths:
        logic = candidate(n)
        match_one(pattern, logic)  # warm caches
        samples = []
        for _ in range(iterations):
            t0 = time.perf_counter()
            match_one(pattern, logic)
            samples.append(time.perf_counter() - t0)
        latencies[n] = _median(samples)
    lengths = list(candidate_lengths)
    ratios = {
        f"{lengths[i]}->{lengths[i + 1]}": latencies[lengths[i + 1]] / latencies[lengths[i]]
        for i in range(len(lengths) - 1)
        if latencies[lengths[i]] > 0
    }
    return {"median_latency_s": latencies, "doubling_ratios": ratios}
