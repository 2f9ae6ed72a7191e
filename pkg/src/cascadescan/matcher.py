"""Token-type-aware logic matching.

A pattern generalized from one confirmed attack keeps two key sets: core-asset
operations (value extraction) and protocol-specific operations (exploitation).
A candidate is scored per side with the asymmetric normalized set difference

    sim(A, B) = 1 - |A \\ B| / |A|

where A is the reference attack side, then the sides are combined as
``lam * sim_core + (1 - lam) * sim_proto`` and flagged when the result
reaches tau. Extra candidate activity never lowers a score: only omitting
reference logic does.

Set elements are canonical keys ``(category_id, token_class, target_role)``,
deduplicated. Multiplicity is deliberately ignored to maximize mutation
tolerance; a multiset mode is available behind a flag for experimentation.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import AbstractSet, List, Optional, Sequence, Tuple

from .extractor import ExtractedLogic, LogicItem
from .labels import TokenClass

CanonKey = Tuple[str, str, str]  # (category_id, token_class, target_role)


class EmptyPattern(ValueError):
    pass


class InvalidHyperparameter(ValueError):
    pass


class EmptyReference(ValueError):
    pass


def canonical_key(item: LogicItem) -> CanonKey:
    return (item.category_id, item.token.value, item.target_role.value)


def candidate_sides(logic: ExtractedLogic, multiset: bool = False):
    """Partition a candidate's items into (core, proto) key collections.

    NON_TOKEN items are retained in the logic for diagnostics but carry no
    similarity weight.
    """
    core: List[CanonKey] = []
    proto: List[CanonKey] = []
    for item in logic.items:
        if item.token is TokenClass.CORE:
            core.append(canonical_key(item))
        elif item.token is TokenClass.PROTOCOL_SPECIFIC:
            proto.append(canonical_key(item))
    if multiset:
        return Counter(core), Counter(proto)
    return frozenset(core), frozenset(proto)


@dataclass(frozen=True)
class Pattern:
    """A detection rule derived from one attack's extracted logic."""

    pattern_id: str
    source_tx: str
    lam: float
    tau: float
    core_set: Tuple[CanonKey, ...]  # sorted; deduplicated unless multiset
    proto_set: Tuple[CanonKey, ...]
    multiset: bool = False
    created_at: str = ""
    reference_logic: Optional[ExtractedLogic] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.multiset:
            object.__setattr__(self, "_core", Counter(self.core_set))
            object.__setattr__(self, "_proto", Counter(self.proto_set))
        else:
            object.__setattr__(self, "_core", frozenset(self.core_set))
            object.__setattr__(self, "_proto", frozenset(self.proto_set))

    @property
    def core_keys(self):
        return self._core

    @property
    def proto_keys(self):
        return self._proto


@dataclass(frozen=True)
class MatchResult:
    pattern_id: str
    tx_hash: str
    sim_core: Optional[float]  # None when the pattern side is empty
    sim_proto: Optional[float]
    sim_final: float
    flagged: bool
    tau: float
    lam: float

    def to_dict(self) -> dict:
        return {
            "pattern_id": self.pattern_id,
            "tx_hash": self.tx_hash,
            "sim_core": self.sim_core,
            "sim_proto": self.sim_proto,
            "sim_final": self.sim_final,
            "tau": self.tau,
            "lambda": self.lam,
            "flagged": self.flagged,
        }


def ansd(reference: AbstractSet, candidate: AbstractSet) -> float:
    """1 - |reference \\ candidate| / |reference| over deduplicated sets."""
    size = len(reference)
    if size == 0:
        raise EmptyReference("reference set is empty")
    covered = len(reference & candidate) if len(candidate) < size else \
        sum(1 for k in reference if k in candidate)
    return 1.0 - (size - covered) / size


def ansd_multiset(reference: Counter, candidate: Counter) -> float:
    """Multiset variant: multiplicities in the reference must be covered."""
    size = sum(reference.values())
    if size == 0:
        raise EmptyReference("reference multiset is empty")
    missing = sum(max(0, n - candidate.get(k, 0)) for k, n in reference.items())
    return 1.0 - missing / size


def combine(sim_core: float, sim_proto: float, lam: float) -> float:
    # equal sides combine to themselves exactly; avoids drift at the
    # tau boundary for the common full-coverage case
    if sim_core == sim_proto:
        return sim_core
    # the true weighted mean lies in [min, max] of the sides; clamping keeps
    # the float result there too, which makes scores monotone under added
    # coverage even across the fast/slow path boundary
    lo, hi = (sim_core, sim_proto) if sim_core < sim_proto else (sim_proto, sim_core)
    return min(hi, max(lo, lam * sim_core + (1.0 - lam) * sim_proto))


def side_similarities(pattern: Pattern, logic: ExtractedLogic) -> Tuple[Optional[float], Optional[float]]:
    """Per-side ANSD scores; None marks an empty (excluded) pattern side."""
    cand_core, cand_proto = candidate_sides(logic, pattern.multiset)
    score = ansd_multiset if pattern.multiset else ansd
    sim_core = score(pattern.core_keys, cand_core) if pattern.core_set else None
    sim_proto = score(pattern.proto_keys, cand_proto) if pattern.proto_set else None
    return sim_core, sim_proto


def finalize(sim_core: Optional[float], sim_proto: Optional[float], lam: float) -> float:
    """Empty-side policy: an empty pattern side is excluded and the other
    side receives full weight."""
    if sim_core is None and sim_proto is None:
        raise EmptyPattern("pattern has no keys on either side")
    if sim_core is None:
        return sim_proto
    if sim_proto is None:
        return sim_core
    return combine(sim_core, sim_proto, lam)


def match_one(pattern: Pattern, logic: ExtractedLogic) -> MatchResult:
    """Score one candidate against one pattern; O(|pattern| + |candidate|)."""
    sim_core, sim_proto = side_similarities(pattern, logic)
    sim_final = finalize(sim_core, sim_proto, pattern.lam)
    return MatchResult(
        pattern_id=pattern.pattern_id,
        tx_hash=logic.tx_hash,
        sim_core=sim_core,
        sim_proto=sim_proto,
        sim_final=sim_final,
        flagged=sim_final >= pattern.tau,
        tau=pattern.tau,
        lam=pattern.lam,
    )


def match_all(patterns: Sequence[Pattern], logic: ExtractedLogic) -> List[MatchResult]:
    """One result per pattern, in input order. The candidate side sets are
    built once and shared."""
    if not patterns:
        raise ValueError("patterns must be non-empty")
    set_sides = None
    counter_sides = None
    results = []
    for pattern in patterns:
        if pattern.multiset:
            if counter_sides is None:
                counter_sides = candidate_sides(logic, True)
            cand_core, cand_proto = counter_sides
            score = ansd_multiset
        else:
            if set_sides is None:
                set_sides = candidate_sides(logic, False)
            cand_core, cand_proto = set_sides
            score = ansd
        sim_core = score(pattern.core_keys, cand_core) if pattern.core_set else None
        sim_proto = score(pattern.proto_keys, cand_proto) if pattern.proto_set else None
        sim_final = finalize(sim_core, sim_proto, pattern.lam)
        results.append(MatchResult(
            pattern_id=pattern.pattern_id, tx_hash=logic.tx_hash,
            sim_core=sim_core, sim_proto=sim_proto, sim_final=sim_final,
            flagged=sim_final >= pattern.tau, tau=pattern.tau, lam=pattern.lam,
        ))
    return results


def generalize(attack: ExtractedLogic, lam: float, tau: float,
               pattern_id: Optional[str] = None, multiset: bool = False) -> Pattern:
    """Build a pattern from one confirmed attack's extracted logic.

    The created pattern must flag its own source (self-match postcondition);
    that is verified here, not assumed.
    """
    if not (0.0 <= lam <= 1.0) or not (0.0 <= tau <= 1.0):
        raise InvalidHyperparameter(f"lambda={lam} tau={tau} must lie in [0, 1]")
    core: List[CanonKey] = []
    proto: List[CanonKey] = []
    for item in attack.items:
        if item.token is TokenClass.CORE:
            core.append(canonical_key(item))
        elif item.token is TokenClass.PROTOCOL_SPECIFIC:
            proto.append(canonical_key(item))
    if not core and not proto:
        raise EmptyPattern(f"{attack.tx_hash}: no token-bearing items to generalize")
    if not multiset:
        core = sorted(set(core))
        proto = sorted(set(proto))
    else:
        core = sorted(core)
        proto = sorted(proto)
    pattern = Pattern(
        pattern_id=pattern_id or f"p-{attack.tx_hash[2:14]}",
        source_tx=attack.tx_hash,
        lam=lam,
        tau=tau,
        core_set=tuple(core),
        proto_set=tuple(proto),
        multiset=multiset,
        created_at=datetime.now(timezone.utc).isoformat(),
        reference_logic=attack,
    )
    self_match = match_one(pattern, attack)
    if self_match.sim_final != 1.0:
        raise RuntimeError(
            f"self-match postcondition violated for {pattern.pattern_id}: "
            f"sim_final={self_match.sim_final}"
        )
    return pattern


def pattern_to_dict(pattern: Pattern) -> dict:
    return {
        "pattern_id": pattern.pattern_id,
        "source_tx": pattern.source_tx,
        "lambda": pattern.lam,
        "tau": pattern.tau,
        "core_set": [list(k) for k in pattern.core_set],
        "proto_set": [list(k) for k in pattern.proto_set],
        "multiset": pattern.multiset,
        "created_at": pattern.created_at,
    }


def save_pattern(pattern: Pattern, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pattern_to_dict(pattern), fh, indent=1)
        fh.write("\n")


def pattern_from_dict(doc: dict) -> Pattern:
    lam, tau = float(doc["lambda"]), float(doc["tau"])
    if not (0.0 <= lam <= 1.0) or not (0.0 <= tau <= 1.0):
        raise InvalidHyperparameter(f"lambda={lam} tau={tau} must lie in [0, 1]")
    if not doc["core_set"] and not doc["proto_set"]:
        raise EmptyPattern(f"{doc['pattern_id']}: both key sets empty")
    return Pattern(
        pattern_id=doc["pattern_id"],
        source_tx=doc["source_tx"],
        lam=lam,
        tau=tau,
        core_set=tuple(tuple(k) for k in doc["core_set"]),
        proto_set=tuple(tuple(k) for k in doc["proto_set"]),
        multiset=bool(doc.get("multiset", False)),
        created_at=doc.get("created_at", ""),
    )


def load_pattern(path: str) -> Pattern:
    with open(path, "r", encoding="utf-8") as fh:
        return pattern_from_dict(json.load(fh))


def load_pattern_dir(path: str) -> List[Pattern]:
    """Load every ``*.json`` pattern in a directory, sorted by filename."""
    names = sorted(n for n in os.listdir(path) if n.endswith(".json"))
    if not names:
        raise FileNotFoundError(f"no *.json patterns in {path}")
    return [load_pattern(os.path.join(path, n)) for n in names]
