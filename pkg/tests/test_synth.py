import random

import pytest

from cascadescan.extractor import logic_fingerprint
from cascadescan.labels import TokenClass
from cascadescan.matcher import canonical_key, generalize, match_one
from cascadescan.synth import (
    BenignKind,
    MutationSpec,
    mutate_items,
    synth_benign,
    synth_benign_pool,
    synth_corpus,
    synth_seeds,
)
from cascadescan.tuner import InsufficientBenign, Label, save_corpus_jsonl


def side_keys(items, token):
    return {canonical_key(i) for i in items if i.token is token}


class TestSeeds:
    def test_deterministic(self):
        a = synth_seeds(10, seed=7)
        b = synth_seeds(10, seed=7)
        assert [s.tx_hash for s in a] == [s.tx_hash for s in b]
        assert [logic_fingerprint(s) for s in a] == [logic_fingerprint(s) for s in b]

    def test_sides_meet_minimum(self):
        for s in synth_seeds(20, seed=3):
            assert len(side_keys(s.items, TokenClass.CORE)) >= 4
            assert len(side_keys(s.items, TokenClass.PROTOCOL_SPECIFIC)) >= 4

    def test_archetype_sharing_creates_cross_family_overlap(self):
        seeds = synth_seeds(30, seed=5, n_archetypes=4)
        overlaps = []
        for i in range(len(seeds)):
            for j in range(i + 1, len(seeds)):
                a = side_keys(seeds[i].items, TokenClass.CORE)
                b = side_keys(seeds[j].items, TokenClass.CORE)
                overlaps.append(len(a & b) / len(a))
        assert max(overlaps) > 0.8  # some family pairs share an archetype


class TestBenign:
    def test_single_category_core(self):
        for lg in synth_benign(BenignKind.SINGLE_CATEGORY_CORE, 50, seed=1):
            assert lg.items
            assert all(i.token is TokenClass.CORE for i in lg.items)

    def test_single_category_proto(self):
        for lg in synth_benign(BenignKind.SINGLE_CATEGORY_PROTO, 50, seed=1):
            assert all(i.token is TokenClass.PROTOCOL_SPECIFIC for i in lg.items)

    def test_mixed_short_at_most_three(self):
        for lg in synth_benign(BenignKind.MIXED_SHORT, 100, seed=2):
            assert 1 <= len(lg.items) <= 3

    def test_deterministic(self):
        a = synth_benign(BenignKind.MIXED_SHORT, 20, seed=9)
        b = synth_benign(BenignKind.MIXED_SHORT, 20, seed=9)
        assert [x.tx_hash for x in a] == [x.tx_hash for x in b]

    def test_single_proto_bounded_against_two_sided_pattern(self):
        seeds = synth_seeds(5, seed=11)
        patterns = [generalize(s, 0.6, 0.7) for s in seeds]
        for lg in synth_benign(BenignKind.SINGLE_CATEGORY_PROTO, 40, seed=4):
            for p in patterns:
                res = match_one(p, lg)
                assert res.sim_final <= 1 - 0.6 + 1e-12


class TestMutations:
    def test_identity_mutation(self):
        seeds = synth_seeds(3, seed=21)
        spec = MutationSpec(reorder=False, noise_items=0, drop_fraction=0.0,
                            token_rename=False, seed=0)
        corpus = synth_corpus(seeds, spec, 2, synth_benign_pool(12, 5), ratio=(1, 1))
        malicious = [e for e in corpus.entries if e.label is Label.MALICIOUS]
        by_family = {s.tx_hash: s for s in seeds}
        for e in malicious:
            assert e.logic.items == by_family[e.family].items

    def test_drop_arithmetic(self):
        # ten distinct single-side keys, drop 10% -> exactly one key removed
        from cascadescan.extractor import ExtractedLogic
        from test_matcher import core_item
        seed_logic = ExtractedLogic("0x" + "3" * 64,
                                    tuple(core_item(f"C{i}") for i in range(10)), 10)
        spec = MutationSpec(reorder=False, drop_fraction=0.1, seed=0)
        rng = random.Random(0)
        items = mutate_items(seed_logic, rng, spec, [])
        assert len(items) == 9
        p = generalize(seed_logic, 0.6, 0.7)
        res = match_one(p, ExtractedLogic("0x" + "4" * 64, tuple(items), 9))
        assert res.sim_core == 0.9

    def test_reorder_and_noise_keep_full_similarity(self):
        seeds = synth_seeds(10, seed=31)
        pool = synth_benign_pool(60, 6)
        spec = MutationSpec(reorder=True, noise_items=8, drop_fraction=0.0,
                            token_rename=True, seed=1)
        corpus = synth_corpus(seeds, spec, 5, pool, ratio=(1, 1))
        patterns = {s.tx_hash: generalize(s, 0.6, 0.7) for s in seeds}
        for e in corpus.entries:
            if e.label is Label.MALICIOUS:
                assert match_one(patterns[e.family], e.logic).sim_final == 1.0

    def test_label_soundness_retention_per_side(self):
        seeds = synth_seeds(10, seed=41)
        pool = synth_benign_pool(60, 6)
        spec = MutationSpec(reorder=True, noise_items=5, drop_fraction=0.25, seed=2)
        corpus = synth_corpus(seeds, spec, 5, pool, ratio=(1, 1))
        by_family = {s.tx_hash: s for s in seeds}
        for e in corpus.entries:
            if e.label is not Label.MALICIOUS:
                continue
            seed_logic = by_family[e.family]
            for token in (TokenClass.CORE, TokenClass.PROTOCOL_SPECIFIC):
                seed_side = side_keys(seed_logic.items, token)
                kept = side_keys(e.logic.items, token) & seed_side
                assert len(kept) >= (1 - spec.drop_fraction) * len(seed_side) - 1e-9

    def test_token_rename_preserves_key_multiset(self):
        seeds = synth_seeds(5, seed=51)
        spec = MutationSpec(reorder=False, token_rename=True, seed=3)
        rng = random.Random(3)
        for s in seeds:
            items = mutate_items(s, rng, spec, [])
            assert sorted(canonical_key(i) for i in items) == \
                sorted(canonical_key(i) for i in s.items)

    def test_drop_fraction_validated(self):
        with pytest.raises(ValueError):
            MutationSpec(drop_fraction=0.6)


class TestCorpus:
    def test_ratio_counts(self):
        seeds = synth_seeds(4, seed=61)
        pool = synth_benign_pool(100, 8)
        corpus = synth_corpus(seeds, MutationSpec(seed=1), 5, pool, ratio=(1, 5))
        m, b = corpus.counts()
        assert m == 20 and b == 100

    def test_insufficient_benign(self):
        seeds = synth_seeds(4, seed=61)
        pool = synth_benign_pool(10, 8)
        with pytest.raises(InsufficientBenign):
            synth_corpus(seeds, MutationSpec(seed=1), 5, pool, ratio=(1, 5))

    def test_byte_identical_reproducibility(self, tmp_path):
        seeds = synth_seeds(6, seed=71)
        pool = synth_benign_pool(40, 9)
        spec = MutationSpec(reorder=True, noise_items=4, drop_fraction=0.1, seed=5)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_corpus_jsonl(synth_corpus(seeds, spec, 4, pool, ratio=(1, 1)), str(p1))
        save_corpus_jsonl(synth_corpus(seeds, spec, 4, pool, ratio=(1, 1)), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_family_ids_group_imitations(self):
        seeds = synth_seeds(3, seed=81)
        corpus = synth_corpus(seeds, MutationSpec(seed=2), 4,
                              synth_benign_pool(12, 3), ratio=(1, 1))
        fams = {}
        for e in corpus.entries:
            if e.label is Label.MALICIOUS:
                fams.setdefault(e.family, 0)
                fams[e.family] += 1
        assert set(fams) == {s.tx_hash for s in seeds}
        assert all(v == 4 for v in fams.values())
