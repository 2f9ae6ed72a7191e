import pytest

from cascadescan.semantics import (
    CATEGORY_ID_RE,
    CategoryCollision,
    CategoryKind,
    CategoryMeta,
    Cheatsheet,
    ClassificationOutcome,
    ClassifierReply,
    Provenance,
    STEM_TABLE,
    SidecarUnavailable,
    classify_unknown,
    content_hash,
    is_token_operation,
    load_cheatsheet,
    lookup,
    persist_new_category,
    save_cheatsheet,
)


class TestSeedCheatsheet:
    def test_category_scale(self, cheatsheet):
        assert len(cheatsheet.categories) == 122

    def test_every_entry_references_known_category(self, cheatsheet):
        for sig, cid in cheatsheet.entries.items():
            assert cid in cheatsheet.categories, sig

    def test_category_ids_well_formed(self, cheatsheet):
        for cid in cheatsheet.categories:
            assert CATEGORY_ID_RE.match(cid), cid

    def test_save_load_round_trip(self, cheatsheet, tmp_path):
        path = tmp_path / "cs.json"
        save_cheatsheet(cheatsheet, str(path))
        back = load_cheatsheet(str(path))
        assert back.entries == cheatsheet.entries
        assert back.categories == cheatsheet.categories
        assert content_hash(back) == content_hash(cheatsheet)


class TestLookup:
    def test_transfer_maps_to_transfer(self, cheatsheet):
        assert lookup(cheatsheet, "transfer(address,uint256)") == "TRANSFER"

    def test_canonicalization_before_lookup(self, cheatsheet):
        assert lookup(cheatsheet, "transfer( address , uint256 )") == "TRANSFER"
        assert lookup(cheatsheet, "transfer(address to, uint256 amount)") == "TRANSFER"

    def test_absent_signature(self, cheatsheet):
        assert lookup(cheatsheet, "noSuchFunction(bytes7)") is None

    def test_pure_function_of_content(self, cheatsheet):
        for _ in range(5):
            assert lookup(cheatsheet, "swap(uint256,uint256,address,bytes)") == "SWAP"


class TestClassifyUnknown:
    def test_undecoded_discarded(self, cheatsheet):
        out = classify_unknown(cheatsheet, "whatever()", is_decoded=False)
        assert out.discarded
        assert out.provenance is Provenance.DISCARD_UNDECODED

    def test_undecoded_discarded_even_with_classifier(self, cheatsheet):
        class Exploding:
            def classify(self, signature, source_code=""):
                raise AssertionError("must not be called")

        out = classify_unknown(cheatsheet, "whatever()", False, Exploding())
        assert out.discarded

    def test_before_deposit_is_verification_not_deposit(self, cheatsheet):
        out = classify_unknown(cheatsheet, "beforeDeposit(uint256)", True)
        assert out.category_id == "VERIFY_DEPOSIT"
        assert out.category_id != "DEPOSIT"
        assert cheatsheet.categories["VERIFY_DEPOSIT"].kind is CategoryKind.VERIFICATION

    def test_prefix_rule_for_every_stem(self, cheatsheet):
        # hook classification must never collapse into the plain stem category
        for stem in STEM_TABLE:
            plain = classify_unknown(cheatsheet, f"zz{stem}qq(uint256)", True)
            hook = classify_unknown(cheatsheet, f"before{stem.capitalize()}(uint256)", True)
            assert plain.category_id != hook.category_id, stem
            assert hook.category_id.startswith("VERIFY_")

    def test_emergency_burn_hits_burn_family(self, cheatsheet):
        out = classify_unknown(cheatsheet, "emergencyBurn(address)", True)
        assert out.category_id == "BURN"
        assert out.provenance is Provenance.LOCAL_FALLBACK

    def test_longest_stem_wins(self, cheatsheet):
        # contains both "addliquidity" and "liquidat"? no: contains "addliquidity"
        out = classify_unknown(cheatsheet, "addLiquiditySafely(uint256)", True)
        assert out.category_id == "ADD_LIQUIDITY"

    def test_unresolved_yields_hashed_new_category(self, cheatsheet):
        out = classify_unknown(cheatsheet, "frobnicate(uint8)", True)
        assert out.is_new
        assert out.category_id.startswith("OTHER_")
        assert CATEGORY_ID_RE.match(out.category_id)
        again = classify_unknown(cheatsheet, "frobnicate(uint8)", True)
        assert again.category_id == out.category_id

    def test_sidecar_validated_existing_category(self, cheatsheet):
        class Stub:
            def classify(self, signature, source_code=""):
                return ClassifierReply("SWAP", 0.93, True)

        out = classify_unknown(cheatsheet, "mysteryOp(uint256)", True, Stub())
        assert out.category_id == "SWAP"
        assert out.provenance is Provenance.SIDECAR
        assert not out.is_new

    def test_sidecar_rejection_routes_to_new_category(self, cheatsheet):
        class Reject:
            def classify(self, signature, source_code=""):
                return ClassifierReply("SWAP", 0.2, False)

        out = classify_unknown(cheatsheet, "mysteryOp(uint256)", True, Reject())
        assert out.is_new
        assert out.category_id.startswith("OTHER_")

    def test_sidecar_unavailable_propagates(self, cheatsheet):
        class Down:
            def classify(self, signature, source_code=""):
                raise SidecarUnavailable("socket closed")

        with pytest.raises(SidecarUnavailable):
            classify_unknown(cheatsheet, "mysteryOp(uint256)", True, Down())

    def test_sidecar_unavailable_falls_back_when_flagged(self, cheatsheet):
        class Down:
            def classify(self, signature, source_code=""):
                raise SidecarUnavailable("socket closed")

        out = classify_unknown(cheatsheet, "emergencyBurn(address)", True, Down(),
                               fallback_on_unavailable=True)
        assert out.category_id == "BURN"
        assert out.provenance is Provenance.LOCAL_FALLBACK

    def test_sidecar_proposing_novel_id_becomes_new_category(self, cheatsheet):
        class Novel:
            def classify(self, signature, source_code=""):
                return ClassifierReply("ORACLE_DRAIN", 0.91, True)

        out = classify_unknown(cheatsheet, "drainViaOracle(address)", True, Novel())
        assert out.is_new
        assert out.category_id == "ORACLE_DRAIN"
        assert out.provenance is Provenance.SIDECAR

    def test_sidecar_proposing_malformed_id_hashes_instead(self, cheatsheet):
        class Bad:
            def classify(self, signature, source_code=""):
                return ClassifierReply("not a valid id!", 0.91, True)

        out = classify_unknown(cheatsheet, "oddOne(uint8)", True, Bad())
        assert out.is_new
        assert out.category_id.startswith("OTHER_")


class TestWireClassifier:
    def test_dead_socket_raises_unavailable(self, cheatsheet):
        from cascadescan.semantics import WireClassifier
        client = WireClassifier("unix:/nonexistent/path.sock")
        with pytest.raises(SidecarUnavailable):
            client.classify("f()", "code")

    def test_unknown_scheme_raises_unavailable(self):
        from cascadescan.semantics import WireClassifier
        with pytest.raises(SidecarUnavailable):
            WireClassifier("http://nope").classify("f()", "")

    def test_exec_echo_protocol(self, tmp_path):
        # a stand-in sidecar that always answers with a fixed category
        from cascadescan.semantics import WireClassifier
        import sys
        script = tmp_path / "stub.py"
        script.write_text(
            "import json, sys\n"
            "for line in sys.stdin:\n"
            "    json.loads(line)\n"
            "    print(json.dumps({'category': 'SWAP', 'confidence': 0.8,"
            " 'validated': True}), flush=True)\n"
        )
        client = WireClassifier(f"exec:{sys.executable} {script}")
        try:
            reply = client.classify("anything(uint256)", "src")
            assert reply.category == "SWAP"
            assert reply.validated
        finally:
            client.close()

    def test_error_reply_raises_unavailable(self, tmp_path):
        from cascadescan.semantics import WireClassifier
        import sys
        script = tmp_path / "stub.py"
        script.write_text(
            "import sys\n"
            "for line in sys.stdin:\n"
            "    print('{\"error\": \"boom\"}', flush=True)\n"
        )
        client = WireClassifier(f"exec:{sys.executable} {script}")
        try:
            with pytest.raises(SidecarUnavailable):
                client.classify("anything(uint256)", "src")
        finally:
            client.close()


class TestPersistNewCategory:
    def empty(self):
        return Cheatsheet(entries={}, categories={}, version="t+0")

    def outcome(self, sig="newOp(uint256)", cid="NEW_OP", desc="d"):
        return ClassificationOutcome(
            signature=sig, category_id=cid, provenance=Provenance.LOCAL_FALLBACK,
            is_new=True, new_meta=CategoryMeta(cid, CategoryKind.OTHER, desc),
        )

    def test_add_to_empty(self):
        cs = persist_new_category(self.empty(), self.outcome())
        assert len(cs.entries) == 1
        assert cs.entries["newOp(uint256)"] == "NEW_OP"

    def test_original_unmodified(self):
        base = self.empty()
        persist_new_category(base, self.outcome())
        assert len(base.entries) == 0
        assert len(base.categories) == 0

    def test_idempotent_readd(self):
        cs1 = persist_new_category(self.empty(), self.outcome())
        cs2 = persist_new_category(cs1, self.outcome())
        assert content_hash(cs1) == content_hash(cs2)

    def test_collision_on_different_description(self):
        cs = persist_new_category(self.empty(), self.outcome(desc="one"))
        with pytest.raises(CategoryCollision):
            persist_new_category(cs, self.outcome(sig="other()", desc="two"))

    def test_hundred_sequential_additions(self):
        cs = self.empty()
        versions = [cs.version]
        for i in range(100):
            cs = persist_new_category(cs, self.outcome(sig=f"op{i}()", cid=f"CAT_{i:03d}"))
            versions.append(cs.version)
        assert len(cs.entries) == 100
        revisions = [int(v.rpartition("+")[2]) for v in versions]
        assert revisions == sorted(revisions)
        assert len(set(revisions)) == len(revisions)

    def test_non_new_outcome_rejected(self, cheatsheet):
        plain = ClassificationOutcome("transfer(address,uint256)", "TRANSFER",
                                      Provenance.CHEATSHEET)
        with pytest.raises(ValueError):
            persist_new_category(cheatsheet, plain)


def test_token_operation_marker():
    assert is_token_operation("TRANSFER")
    assert is_token_operation("MINT")
    assert not is_token_operation("SWAP")
    assert not is_token_operation(None)
