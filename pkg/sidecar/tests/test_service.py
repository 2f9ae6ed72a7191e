import json
import time
from pathlib import Path

import pytest

from cascade_sidecar.codebase import ModelUnavailable, load_codebase
from cascade_sidecar.service import (
    ClassifierService,
    ValidatorTimeout,
    nearest_category,
    reject_validator,
    validate,
)

DATA = Path(__file__).parent / "data" / "codebase.jsonl"


@pytest.fixture(scope="module")
def codebase():
    return load_codebase(str(DATA))


class TestCodebase:
    def test_loads_every_category(self, codebase):
        assert {"SWAP", "TRANSFER", "MINT", "BURN", "DEPOSIT",
                "VERIFY_DEPOSIT"} <= codebase.categories()

    def test_consistent_dimensions(self, codebase):
        dims = {len(e.embedding) for e in codebase.entries}
        assert len(dims) == 1

    def test_empty_codebase_rejected(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        with pytest.raises(ModelUnavailable) as err:
            load_codebase(str(empty))
        assert "empty" in str(err.value)

    def test_malformed_row_rejected(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"category": "X"}\n')
        with pytest.raises(ModelUnavailable):
            load_codebase(str(bad))


class TestNearestCategory:
    def test_stored_snippet_returns_own_category(self, codebase):
        for entry in codebase.entries:
            category, sim = nearest_category(entry.snippet, codebase)
            assert category == entry.category_id
            assert sim >= 0.999

    def test_near_variant_beats_far_categories(self, codebase):
        # ordering is the contract here, not absolute scores
        variant = """function transfer(address dst, uint256 qty) internal {
            require(dst != address(0), 'transfer to zero');
            uint256 bal = _balances[msg.sender];
            require(bal >= qty, 'amount exceeds balance');
            _balances[msg.sender] = bal - qty;
            _balances[dst] += qty;
            emit Transfer(msg.sender, dst, qty);
        }"""
        category, sim = nearest_category(variant, codebase)
        assert category == "TRANSFER"
        assert 0.0 < sim <= 1.0

    def test_empty_source_rejected(self, codebase):
        with pytest.raises(ModelUnavailable):
            nearest_category("", codebase)


class TestValidate:
    def test_pass_through(self):
        out = validate("SWAP", "swap(uint256)", "code", None, similarity=0.87)
        assert out == {"validated": True, "confidence": 0.87}

    def test_confirm_verdict(self):
        out = validate("SWAP", "s()", "code",
                       lambda c, s, src: json.dumps({"verdict": "confirm"}), 0.8)
        assert out["validated"] is True

    def test_reject_verdict(self):
        out = validate("SWAP", "s()", "code", reject_validator, 0.8)
        assert out["validated"] is False

    def test_non_conforming_payload_rejects(self):
        out = validate("SWAP", "s()", "code", lambda c, s, src: "sure, looks fine!", 0.8)
        assert out["validated"] is False
        assert "diagnostic" in out

    def test_timeout(self):
        def slow(c, s, src):
            time.sleep(0.5)
            return json.dumps({"verdict": "confirm"})

        with pytest.raises(ValidatorTimeout):
            validate("SWAP", "s()", "code", slow, 0.8, timeout_s=0.05)


class TestService:
    def test_distrust_floor(self, codebase):
        service = ClassifierService(codebase=codebase, min_similarity=0.99)
        reply = service.classify("odd()", "function odd() { completely unrelated stuff; }")
        assert reply["validated"] is False

    def test_validated_reply_shape(self, codebase):
        service = ClassifierService(codebase=codebase)
        reply = service.classify("transfer(address,uint256)",
                                 codebase.entries[1].snippet)
        assert set(reply) == {"category", "confidence", "validated"}
        assert 0.0 <= reply["confidence"] <= 1.0
