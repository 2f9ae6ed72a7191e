"""Sidecar acceptance: protocol conformance end to end against the scanner
package's classifier boundary.

The scanner's primary suite runs with no sidecar process anywhere; these
tests cover the optional integration path.
"""

import json
import sys
from pathlib import Path

import pytest

from cascadescan.semantics import (
    Provenance,
    WireClassifier,
    classify_unknown,
    load_cheatsheet,
)

DATA = Path(__file__).parent / "data" / "codebase.jsonl"
EXEC_ADDR = (f"exec:{sys.executable} -m cascade_sidecar.server "
             f"--codebase {DATA} --stdio")


class RecordingStub:
    def __init__(self):
        self.calls = 0

    def classify(self, signature, source_code=""):
        self.calls += 1
        raise AssertionError("classifier must not be reached")


@pytest.fixture(scope="module")
def cheatsheet():
    return load_cheatsheet()


def test_undecoded_never_reaches_the_sidecar(cheatsheet):
    stub = RecordingStub()
    out = classify_unknown(cheatsheet, "mystery()", is_decoded=False, classifier=stub)
    assert out.discarded
    assert out.provenance is Provenance.DISCARD_UNDECODED
    assert stub.calls == 0
    print("PASS sidecar-acceptance: undecoded short-circuits before the wire")


def test_decoded_unknown_round_trip(cheatsheet):
    client = WireClassifier(EXEC_ADDR)
    try:
        snippet = json.loads(DATA.read_text().splitlines()[1])["snippet"]
        out = classify_unknown(cheatsheet, "obscureTransfer(address,uint256)",
                               is_decoded=True, classifier=client,
                               source_code=snippet)
        assert out.provenance is Provenance.SIDECAR
        assert out.category_id == "TRANSFER"
        assert not out.is_new
    finally:
        client.close()
    print("PASS sidecar-acceptance: decoded unknown round-trips over the wire")


def test_exact_duplicate_snippet_self_similarity(cheatsheet):
    client = WireClassifier(EXEC_ADDR)
    try:
        for line in DATA.read_text().splitlines():
            row = json.loads(line)
            reply = client.classify("anything()", row["snippet"])
            assert reply.category == row["category"]
            assert reply.confidence >= 0.999
            assert reply.validated
    finally:
        client.close()
    print("PASS sidecar-acceptance: exact duplicates score >= 0.999 as their own category")


def test_scripted_rejection_routes_to_new_category(cheatsheet):
    addr = EXEC_ADDR + " --validator reject"
    client = WireClassifier(addr)
    try:
        snippet = json.loads(DATA.read_text().splitlines()[0])["snippet"]
        out = classify_unknown(cheatsheet, "mysterySwapLike(uint256)",
                               is_decoded=True, classifier=client,
                               source_code=snippet)
        assert out.provenance is Provenance.SIDECAR
        assert out.is_new
        assert out.category_id.startswith("OTHER_")
    finally:
        client.close()
    print("PASS sidecar-acceptance: scripted rejection lands on the NEW_CATEGORY path")


def test_primary_package_needs_no_sidecar_import(cheatsheet):
    # the scanner's own suite, including all acceptance criteria, runs with
    # the sidecar absent; the local fallback owns classification then
    out = classify_unknown(cheatsheet, "emergencyBurn(address)", is_decoded=True,
                           classifier=None)
    assert out.provenance is Provenance.LOCAL_FALLBACK
    assert out.category_id == "BURN"
    print("PASS sidecar-acceptance: local fallback fully covers the no-sidecar path")
