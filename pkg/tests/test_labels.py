import itertools

import pytest

from builders import ADDR_CORE, ADDR_EXPLOITER, ADDR_PROTO, ADDR_SENDER, make_snapshot
from cascadescan.labels import (
    AddressLabel,
    AddressRole,
    LabelClass,
    LabelSnapshot,
    LabelSource,
    MalformedRow,
    TokenClass,
    classify_address,
    default_core_registry_path,
    load_core_registry,
    load_labels,
    load_snapshot,
    save_snapshot,
    token_class,
)

A1 = "0x" + "01" * 20
A2 = "0x" + "02" * 20


def write_csv(path, rows):
    lines = ["address,label_class,display_name,source"]
    lines += [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadLabels:
    def test_empty_file_set(self):
        snap = load_labels([], version=1)
        assert len(snap.entries) == 0
        assert snap.version == 1

    def test_precedence_local_override_wins(self, tmp_path):
        f = tmp_path / "labels.csv"
        write_csv(f, [
            (A1, "PROTOCOL", "some dex", "COMMUNITY_DB"),
            (A1, "EXPLOITER", "tagged", "LOCAL_OVERRIDE"),
        ])
        snap = load_labels([str(f)])
        assert snap.lookup(A1) is LabelClass.EXPLOITER

    def test_precedence_holds_regardless_of_order(self, tmp_path):
        f = tmp_path / "labels.csv"
        write_csv(f, [
            (A1, "EXPLOITER", "tagged", "LOCAL_OVERRIDE"),
            (A1, "PROTOCOL", "some dex", "COMMUNITY_DB"),
        ])
        snap = load_labels([str(f)])
        assert snap.lookup(A1) is LabelClass.EXPLOITER

    def test_last_occurrence_wins_within_source(self, tmp_path):
        f = tmp_path / "labels.csv"
        write_csv(f, [
            (A1, "PROTOCOL", "first", "COMMUNITY_DB"),
            (A1, "PROTOCOL_TOKEN", "second", "COMMUNITY_DB"),
        ])
        snap = load_labels([str(f)])
        assert snap.lookup(A1) is LabelClass.PROTOCOL_TOKEN

    def test_dedup_across_files(self, tmp_path, rng):
        files = []
        addresses = ["0x" + format(i, "040x") for i in range(1000)]
        for fi in range(3):
            f = tmp_path / f"l{fi}.csv"
            rows = [(a, "PROTOCOL", f"p{fi}", "COMMUNITY_DB")
                    for a in addresses[fi * 300:fi * 300 + 400]]
            write_csv(f, rows)
            files.append(str(f))
        snap = load_labels(files)
        # files overlap by 100 addresses each; union oracle
        expected = {a for fi in range(3) for a in addresses[fi * 300:fi * 300 + 400]}
        assert len(snap.entries) == len(expected)

    def test_ten_thousand_unique_rows(self, tmp_path):
        # line-count oracle after dedup: 4000 + 3000 + 3000 disjoint rows
        addresses = ["0x" + format(0x100000 + i, "040x") for i in range(10_000)]
        files = []
        for fi, (lo, hi) in enumerate(((0, 4000), (4000, 7000), (7000, 10_000))):
            f = tmp_path / f"big{fi}.csv"
            write_csv(f, [(a, "PROTOCOL_TOKEN", "t", "COMMUNITY_DB")
                          for a in addresses[lo:hi]])
            files.append(str(f))
        snap = load_labels(files)
        assert len(snap.entries) == 10_000

    def test_malformed_row_names_file_and_line(self, tmp_path):
        f = tmp_path / "labels.csv"
        f.write_text("address,label_class,display_name,source\nnot-an-address,PROTOCOL,x,COMMUNITY_DB\n")
        with pytest.raises(MalformedRow) as err:
            load_labels([str(f)])
        assert str(f) in str(err.value)
        assert ":2:" in str(err.value)

    def test_bad_header(self, tmp_path):
        f = tmp_path / "labels.csv"
        f.write_text("addr,class\n")
        with pytest.raises(MalformedRow):
            load_labels([str(f)])

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_labels(["/nonexistent/labels.csv"])

    def test_snapshot_round_trip(self, tmp_path):
        f = tmp_path / "labels.csv"
        write_csv(f, [(A1, "PROTOCOL", "dex", "COMMUNITY_DB")])
        snap = load_labels([str(f)], core_registry=default_core_registry_path())
        out = tmp_path / "snap.json"
        save_snapshot(snap, str(out))
        back = load_snapshot(str(out))
        assert back.entries == snap.entries
        assert back.core_assets == snap.core_assets
        assert back.version == snap.version

    def test_versions_increase_across_loads(self):
        a = load_labels([])
        b = load_labels([])
        assert b.version > a.version

    def test_snapshot_hash_stable_and_content_sensitive(self, tmp_path):
        from cascadescan.labels import snapshot_hash
        f = tmp_path / "labels.csv"
        write_csv(f, [(A1, "PROTOCOL", "dex", "COMMUNITY_DB")])
        snap1 = load_labels([str(f)], version=3)
        snap2 = load_labels([str(f)], version=3)
        assert snapshot_hash(snap1) == snapshot_hash(snap2)
        write_csv(f, [(A1, "EXPLOITER", "dex", "COMMUNITY_DB")])
        snap3 = load_labels([str(f)], version=3)
        assert snapshot_hash(snap3) != snapshot_hash(snap1)


class TestCoreRegistry:
    def test_packaged_registry_loads(self):
        chains = load_core_registry(default_core_registry_path())
        assert 1 in chains and 56 in chains
        assert ADDR_CORE in chains[1]

    def test_section_required(self, tmp_path):
        f = tmp_path / "core.txt"
        f.write_text(A1 + "\n")
        with pytest.raises(MalformedRow):
            load_core_registry(str(f))

    def test_core_entries_become_labels(self, tmp_path):
        snap = load_labels([], core_registry=default_core_registry_path())
        assert snap.lookup(ADDR_CORE) is LabelClass.CORE_ASSET_TOKEN
        assert ADDR_CORE in snap.core_assets


class TestClassifyAddress:
    def test_sender_wins(self, snapshot):
        assert classify_address(snapshot, ADDR_SENDER, ADDR_SENDER, True) is AddressRole.SENDER

    def test_unlabeled_is_attacker_script(self, snapshot):
        assert classify_address(snapshot, A1, ADDR_SENDER, False) is AddressRole.ATTACKER_SCRIPT

    def test_exploiter_is_attacker_script(self, snapshot):
        assert classify_address(snapshot, ADDR_EXPLOITER, ADDR_SENDER, False) is \
            AddressRole.ATTACKER_SCRIPT

    def test_labeled_protocol_keeps_label_when_directly_called(self, snapshot):
        assert classify_address(snapshot, ADDR_PROTO, ADDR_SENDER, True) is AddressRole.PROTOCOL

    def test_full_decision_table(self, snapshot):
        # oracle: enumerate every (label_class, directly_called) cell
        cases = {
            LabelClass.PROTOCOL: AddressRole.PROTOCOL,
            LabelClass.CORE_ASSET_TOKEN: AddressRole.CORE_ASSET_TOKEN,
            LabelClass.PROTOCOL_TOKEN: AddressRole.PROTOCOL_TOKEN,
            LabelClass.EXPLOITER: AddressRole.ATTACKER_SCRIPT,
            LabelClass.UNLABELED: AddressRole.ATTACKER_SCRIPT,
        }
        for (label_class, expected), direct in itertools.product(cases.items(), (True, False)):
            if label_class is LabelClass.UNLABELED:
                snap = make_snapshot()
                addr = A2
            else:
                snap = make_snapshot({A2: (label_class, "x")})
                addr = A2
            assert classify_address(snap, addr, ADDR_SENDER, direct) is expected, \
                (label_class, direct)

    def test_deterministic(self, snapshot):
        results = {classify_address(snapshot, ADDR_PROTO, ADDR_SENDER, False)
                   for _ in range(50)}
        assert len(results) == 1


class TestTokenClass:
    def test_core_registry_token(self, snapshot):
        assert token_class(snapshot, ADDR_CORE) is TokenClass.CORE

    def test_unlabeled_non_token(self, snapshot):
        assert token_class(snapshot, A1) is TokenClass.NON_TOKEN

    def test_protocol_token_maps_to_protocol_specific(self, snapshot):
        from builders import ADDR_PTOKEN
        assert token_class(snapshot, ADDR_PTOKEN) is TokenClass.PROTOCOL_SPECIFIC

    def test_unlabeled_token_like_hint(self, snapshot):
        assert token_class(snapshot, A1, token_like=True) is TokenClass.PROTOCOL_SPECIFIC

    def test_core_label_outside_registry_is_not_core(self):
        snap = make_snapshot({A1: (LabelClass.CORE_ASSET_TOKEN, "claims-core")})
        assert A1 not in snap.core_assets
        assert token_class(snap, A1) is TokenClass.PROTOCOL_SPECIFIC

    def test_never_core_without_registry_membership(self, snapshot):
        for addr in (A1, A2, ADDR_PROTO):
            assert token_class(snapshot, addr) is not TokenClass.CORE
