"""Synthetic imitation corpora for desk-scale evaluation.

Seed attack logics are drawn from a small pool of archetypes (recurring
exploit shapes), each family perturbing its archetype slightly; imitations
then mutate their family seed by reordering, noise injection, bounded key
drops, and protocol-token identity swaps. Benign logics come in three
shapes: single-category core, single-category protocol, and short mixed
activity. All generation is deterministic under the configured seeds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .extractor import ExtractedLogic, LogicItem
from .labels import AddressRole, TokenClass
from .matcher import canonical_key
from .semantics import load_cheatsheet
from .tuner import CorpusEntry, InsufficientBenign, Label, LabeledCorpus

_DEFAULT_CATEGORIES: Optional[Tuple[str, ...]] = None


def default_categories() -> Tuple[str, ...]:
    global _DEFAULT_CATEGORIES
    if _DEFAULT_CATEGORIES is None:
        _DEFAULT_CATEGORIES = tuple(sorted(load_cheatsheet().categories))
    return _DEFAULT_CATEGORIES


class BenignKind(str, Enum):
    SINGLE_CATEGORY_CORE = "SINGLE_CATEGORY_CORE"
    SINGLE_CATEGORY_PROTO = "SINGLE_CATEGORY_PROTO"
    MIXED_SHORT = "MIXED_SHORT"


@dataclass(frozen=True)
class MutationSpec:
    reorder: bool = True
    noise_items: int = 0  # per-imitation count drawn uniformly from 0..noise_items
    drop_fraction: float = 0.0  # per-side share of seed keys removed
    token_rename: bool = False
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.drop_fraction <= 0.5):
            raise ValueError(f"drop_fraction {self.drop_fraction} outside [0, 0.5]")
        if self.noise_items < 0:
            raise ValueError("noise_items must be >= 0")


def _rng(*parts) -> random.Random:
    return random.Random(":".join(str(p) for p in parts))


def _tx_hash(rng: random.Random) -> str:
    return "0x" + format(rng.getrandbits(256), "064x")


def _core_item(category: str, rng: random.Random) -> LogicItem:
    return LogicItem(category, TokenClass.CORE, AddressRole.CORE_ASSET_TOKEN,
                     rng.randint(0, 3))


def _proto_item(category: str, rng: random.Random) -> LogicItem:
    return LogicItem(category, TokenClass.PROTOCOL_SPECIFIC, AddressRole.PROTOCOL_TOKEN,
                     rng.randint(0, 3))


def synth_seeds(n: int, seed: int, n_archetypes: int = 12,
                categories: Optional[Sequence[str]] = None,
                core_keys: Tuple[int, int] = (4, 10),
                proto_keys: Tuple[int, int] = (4, 10),
                extra_family_keys: int = 2,
                duplicate_items: int = 3) -> List[ExtractedLogic]:
    """Generate seed attack logics grouped around shared archetypes.

    Families of one archetype overlap heavily in keys (imitative cascades
    reuse exploit shapes across incidents) while still differing in a few
    family-specific keys.
    """
    cats = tuple(categories) if categories else default_categories()
    rng = _rng(seed, "archetypes")
    archetypes = []
    for _ in range(max(1, n_archetypes)):
        kc = rng.randint(*core_keys)
        kp = rng.randint(*proto_keys)
        archetypes.append((
            rng.sample(cats, kc),
            rng.sample(cats, kp),
        ))
    seeds = []
    for i in range(n):
        srng = _rng(seed, "seed", i)
        arch_core, arch_proto = archetypes[srng.randrange(len(archetypes))]
        core = list(arch_core)
        proto = list(arch_proto)
        for _ in range(srng.randint(0, extra_family_keys)):
            core.append(srng.choice(cats))
        for _ in range(srng.randint(0, extra_family_keys)):
            proto.append(srng.choice(cats))
        items = [_core_item(c, srng) for c in dict.fromkeys(core)]
        items += [_proto_item(c, srng) for c in dict.fromkeys(proto)]
        for _ in range(srng.randint(0, duplicate_items)):
            items.append(srng.choice(items))
        srng.shuffle(items)
        tx = _tx_hash(srng)
        seeds.append(ExtractedLogic(tx, tuple(items), len(items)))
    return seeds


def synth_benign(kind: BenignKind, n: int, seed: int,
                 categories: Optional[Sequence[str]] = None,
                 max_items: int = 6) -> List[ExtractedLogic]:
    """Benign logics of one shape; deterministic under seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cats = tuple(categories) if categories else default_categories()
    rng = _rng(seed, "benign", kind.value)
    out = []
    for _ in range(n):
        if kind is BenignKind.MIXED_SHORT:
            count = rng.randint(1, 3)
            items = [
                _core_item(rng.choice(cats), rng) if rng.random() < 0.5
                else _proto_item(rng.choice(cats), rng)
                for _ in range(count)
            ]
        elif kind is BenignKind.SINGLE_CATEGORY_CORE:
            items = [_core_item(rng.choice(cats), rng)
                     for _ in range(rng.randint(1, max_items))]
        else:
            items = [_proto_item(rng.choice(cats), rng)
                     for _ in range(rng.randint(1, max_items))]
        tx = _tx_hash(rng)
        out.append(ExtractedLogic(tx, tuple(items), len(items)))
    return out


def synth_benign_pool(n: int, seed: int,
                      categories: Optional[Sequence[str]] = None) -> List[ExtractedLogic]:
    """Even mix of the three benign shapes."""
    per = n // 3
    pool = synth_benign(BenignKind.SINGLE_CATEGORY_CORE, per or 1, seed, categories)
    pool += synth_benign(BenignKind.SINGLE_CATEGORY_PROTO, per or 1, seed + 1, categories)
    pool += synth_benign(BenignKind.MIXED_SHORT, n - 2 * per or 1, seed + 2, categories)
    return pool[:n]


def _side_keys(items: Sequence[LogicItem], token: TokenClass) -> List[tuple]:
    return sorted({canonical_key(i) for i in items if i.token is token})


def mutate_items(seed_logic: ExtractedLogic, rng: random.Random, spec: MutationSpec,
                 benign_pool: Sequence[ExtractedLogic]) -> List[LogicItem]:
    """One imitation's item list derived from a seed logic.

    Key drops are exactly floor(drop_fraction * side keys) per side, so every
    imitation retains at least a (1 - drop_fraction) share of the seed's
    keys on each side.
    """
    items = list(seed_logic.items)
    for token in (TokenClass.CORE, TokenClass.PROTOCOL_SPECIFIC):
        keys = _side_keys(items, token)
        k = int(spec.drop_fraction * len(keys))
        if k:
            dropped = set(rng.sample(keys, k))
            items = [i for i in items
                     if not (i.token is token and canonical_key(i) in dropped)]
    if spec.noise_items and benign_pool:
        for _ in range(rng.randint(0, spec.noise_items)):
            donor = benign_pool[rng.randrange(len(benign_pool))]
            if donor.items:
                items.append(donor.items[rng.randrange(len(donor.items))])
    if spec.token_rename:
        # swap which protocol token carries which operation; the key multiset
        # is unchanged because abstraction already collapsed token identity
        proto_pos = [j for j, i in enumerate(items)
                     if i.token is TokenClass.PROTOCOL_SPECIFIC]
        cats = [items[j].category_id for j in proto_pos]
        rng.shuffle(cats)
        for j, cat in zip(proto_pos, cats):
            old = items[j]
            items[j] = LogicItem(cat, old.token, old.target_role, old.depth_after_lift)
    if spec.reorder:
        rng.shuffle(items)
    return items


def synth_corpus(seeds: Sequence[ExtractedLogic], spec: MutationSpec,
                 n_imitations_per_seed: int, benign_pool: Sequence[ExtractedLogic],
                 ratio: Tuple[int, int] = (1, 1)) -> LabeledCorpus:
    """Imitation families plus benign entries at a malicious:benign ratio.

    Benign entries are taken from the pool untouched, so no mutation can add
    seed-pattern keys to a benign label. family_id is the seed's tx hash.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    entries: List[CorpusEntry] = []
    for fi, seed_logic in enumerate(seeds):
        frng = _rng(spec.seed, "fam", fi)
        for _ in range(n_imitations_per_seed):
            items = mutate_items(seed_logic, frng, spec, benign_pool)
            tx = _tx_hash(frng)
            entries.append(CorpusEntry(
                tx, Label.MALICIOUS, seed_logic.tx_hash,
                ExtractedLogic(tx, tuple(items), len(items)),
            ))
    rm, rb = ratio
    n_benign = len(entries) * rb // rm
    if n_benign > len(benign_pool):
        raise InsufficientBenign(
            f"ratio {rm}:{rb} needs {n_benign} benign logics, pool has {len(benign_pool)}"
        )
    for logic in benign_pool[:n_benign]:
        entries.append(CorpusEntry(logic.tx_hash, Label.BENIGN, None, logic))
    return LabeledCorpus(tuple(entries))
