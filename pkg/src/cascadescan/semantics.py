"""Function-signature semantics: cheatsheet lookup plus fallback classification.

The cheatsheet maps canonical signatures to semantic categories (SWAP,
TRANSFER, VERIFY_DEPOSIT, ...). Signatures missing from the cheatsheet go
through a fallback pipeline: undecoded calls are discarded, decoded ones are
either delegated to an external classifier over the wire protocol or resolved
locally by keyword-stem matching.
"""

from __future__ import annotations

import hashlib
import json
import re
import socket
import subprocess
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Mapping, Optional, Protocol

from .trace import canonical_signature

CATEGORY_ID_RE = re.compile(r"^[A-Z0-9_]{2,32}$")


class CategoryKind(str, Enum):
    FINANCIAL = "FINANCIAL"
    VERIFICATION = "VERIFICATION"
    OTHER = "OTHER"


class Provenance(str, Enum):
    CHEATSHEET = "CHEATSHEET"
    SIDECAR = "SIDECAR"
    LOCAL_FALLBACK = "LOCAL_FALLBACK"
    DISCARD_UNDECODED = "DISCARD_UNDECODED"


class CategoryCollision(ValueError):
    pass


class SidecarUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class CategoryMeta:
    category_id: str
    kind: CategoryKind
    description: str


@dataclass(frozen=True)
class Cheatsheet:
    """Immutable signature -> category mapping. Treat as a value: updates go
    through :func:`persist_new_category`, which returns a new instance."""

    entries: Mapping[str, str]
    categories: Mapping[str, CategoryMeta]
    version: str


@dataclass(frozen=True)
class ClassificationOutcome:
    signature: str  # canonical form
    category_id: Optional[str]  # None iff discarded
    provenance: Provenance
    is_new: bool = False
    new_meta: Optional[CategoryMeta] = None

    @property
    def discarded(self) -> bool:
        return self.category_id is None


@dataclass(frozen=True)
class ClassifierReply:
    category: str
    confidence: float
    validated: bool


class ClassifierBoundary(Protocol):
    def classify(self, signature: str, source_code: str = "") -> ClassifierReply: ...


def load_cheatsheet(path: Optional[str] = None) -> Cheatsheet:
    """Load a cheatsheet file; defaults to the packaged seed."""
    if path is None:
        text = resources.files("cascadescan").joinpath("data/cheatsheet.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    categories = {}
    for c in doc["categories"]:
        cid = c["id"]
        if not CATEGORY_ID_RE.match(cid):
            raise ValueError(f"bad category id {cid!r}")
        categories[cid] = CategoryMeta(cid, CategoryKind(c["kind"]), c.get("description", ""))
    entries = {}
    for e in doc["entries"]:
        sig = canonical_signature(e["signature"])
        cid = e["category"]
        if cid not in categories:
            raise ValueError(f"entry {sig!r} references unknown category {cid!r}")
        entries[sig] = cid
    return Cheatsheet(entries=entries, categories=categories, version=str(doc["version"]))


def save_cheatsheet(cheatsheet: Cheatsheet, path: str) -> None:
    doc = {
        "version": cheatsheet.version,
        "categories": [
            {"id": m.category_id, "kind": m.kind.value, "description": m.description}
            for m in sorted(cheatsheet.categories.values(), key=lambda m: m.category_id)
        ],
        "entries": [
            {"signature": sig, "category": cid}
            for sig, cid in sorted(cheatsheet.entries.items())
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def content_hash(cheatsheet: Cheatsheet) -> str:
    blob = json.dumps(
        {
            "version": cheatsheet.version,
            "categories": sorted(
                (m.category_id, m.kind.value, m.description)
                for m in cheatsheet.categories.values()
            ),
            "entries": sorted(cheatsheet.entries.items()),
        },
        separators=(",", ":"),
    ).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def lookup(cheatsheet: Cheatsheet, signature: str) -> Optional[str]:
    """Exact-match category lookup after canonicalization; None if absent."""
    return cheatsheet.entries.get(canonical_signature(signature))


# Stems checked against the lowercased function name. Longest stem wins;
# ties break alphabetically. Deliberately conservative: containment only.
STEM_TABLE: Mapping[str, str] = {
    "addliquidity": "ADD_LIQUIDITY",
    "airdrop": "AIRDROP",
    "approve": "APPROVE",
    "borrow": "BORROW",
    "burn": "BURN",
    "buy": "BUY",
    "claim": "CLAIM_REWARD",
    "compound": "COMPOUND",
    "delegate": "DELEGATE",
    "deposit": "DEPOSIT",
    "exit": "EXIT",
    "flash": "FLASH_LOAN",
    "harvest": "HARVEST",
    "liquidat": "LIQUIDATE",
    "lock": "LOCK",
    "migrate": "MIGRATE",
    "mint": "MINT",
    "permit": "APPROVE",
    "redeem": "REDEEM",
    "removeliquidity": "REMOVE_LIQUIDITY",
    "repay": "REPAY",
    "reward": "CLAIM_REWARD",
    "sell": "SELL",
    "skim": "SKIM",
    "stake": "STAKE",
    "swap": "SWAP",
    "sweep": "SWEEP",
    "sync": "SYNC",
    "transfer": "TRANSFER",
    "unlock": "UNLOCK",
    "unstake": "UNSTAKE",
    "unwrap": "UNWRAP",
    "vest": "VEST",
    "vote": "VOTE",
    "withdraw": "WITHDRAW",
    "wrap": "WRAP",
}

_VERIFY_PREFIXES = ("before", "after", "check")

# categories whose presence marks the callee as token-like
TOKEN_OPERATION_CATEGORIES = frozenset({
    "TRANSFER", "APPROVE", "MINT", "BURN", "AIRDROP",
})


def is_token_operation(category_id: Optional[str]) -> bool:
    return category_id in TOKEN_OPERATION_CATEGORIES


def _hash8(canonical: str) -> str:
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:8].upper()


def _function_name(canonical: str) -> str:
    idx = canonical.find("(")
    return canonical[:idx] if idx >= 0 else canonical


def _local_fallback(cheatsheet: Cheatsheet, canonical: str) -> ClassificationOutcome:
    name = _function_name(canonical).lstrip("_").lower()
    is_hook = name.startswith(_VERIFY_PREFIXES)
    matches = [stem for stem in STEM_TABLE if stem in name]
    if matches:
        matches.sort(key=lambda s: (-len(s), s))
        base = STEM_TABLE[matches[0]]
        cid = f"VERIFY_{base}" if is_hook else base
        kind = CategoryKind.VERIFICATION if is_hook else CategoryKind.FINANCIAL
    else:
        cid = f"OTHER_{_hash8(canonical)}"
        kind = CategoryKind.VERIFICATION if is_hook else CategoryKind.OTHER
    if cid in cheatsheet.categories:
        return ClassificationOutcome(canonical, cid, Provenance.LOCAL_FALLBACK)
    meta = CategoryMeta(cid, kind, f"auto: stem match for {name!r}" if matches
                        else "auto: unresolved signature")
    return ClassificationOutcome(canonical, cid, Provenance.LOCAL_FALLBACK,
                                 is_new=True, new_meta=meta)


def classify_unknown(cheatsheet: Cheatsheet, signature: str, is_decoded: bool,
                     classifier: Optional[ClassifierBoundary] = None,
                     source_code: str = "",
                     fallback_on_unavailable: bool = False) -> ClassificationOutcome:
    """Classify a signature that missed the cheatsheet.

    Undecoded calls are discarded outright. Decoded ones go to the external
    classifier when one is configured, otherwise to the local stem fallback.
    SidecarUnavailable propagates unless ``fallback_on_unavailable`` is set.
    """
    canonical = canonical_signature(signature)
    if not is_decoded:
        return ClassificationOutcome(canonical, None, Provenance.DISCARD_UNDECODED)
    if classifier is not None:
        try:
            reply = classifier.classify(canonical, source_code)
        except SidecarUnavailable:
            if not fallback_on_unavailable:
                raise
            return _local_fallback(cheatsheet, canonical)
        if reply.validated and reply.category in cheatsheet.categories:
            return ClassificationOutcome(canonical, reply.category, Provenance.SIDECAR)
        if reply.validated and CATEGORY_ID_RE.match(reply.category):
            meta = CategoryMeta(reply.category, CategoryKind.OTHER, "proposed by classifier")
            return ClassificationOutcome(canonical, reply.category, Provenance.SIDECAR,
                                         is_new=True, new_meta=meta)
        cid = f"OTHER_{_hash8(canonical)}"
        if cid in cheatsheet.categories:
            return ClassificationOutcome(canonical, cid, Provenance.SIDECAR)
        meta = CategoryMeta(cid, CategoryKind.OTHER, "classifier rejected nearest category")
        return ClassificationOutcome(canonical, cid, Provenance.SIDECAR,
                                     is_new=True, new_meta=meta)
    return _local_fallback(cheatsheet, canonical)


def _bump_version(version: str) -> str:
    base, _, rev = version.rpartition("+")
    if base and rev.isdigit():
        return f"{base}+{int(rev) + 1}"
    return f"{version}+1"


def persist_new_category(cheatsheet: Cheatsheet, outcome: ClassificationOutcome) -> Cheatsheet:
    """Record a NEW_CATEGORY outcome, returning an updated cheatsheet value.

    Idempotent: re-adding an identical mapping returns the input unchanged.
    """
    if not outcome.is_new or outcome.new_meta is None:
        raise ValueError("outcome does not carry a new category")
    cid = outcome.new_meta.category_id
    existing = cheatsheet.categories.get(cid)
    if existing is not None and existing.description != outcome.new_meta.description:
        raise CategoryCollision(
            f"category {cid} already present with a different description"
        )
    if cheatsheet.entries.get(outcome.signature) == cid and existing is not None:
        return cheatsheet
    categories = dict(cheatsheet.categories)
    categories[cid] = outcome.new_meta
    entries = dict(cheatsheet.entries)
    entries[outcome.signature] = cid
    return Cheatsheet(entries=entries, categories=categories,
                      version=_bump_version(cheatsheet.version))


class WireClassifier:
    """Client for the newline-delimited JSON classifier protocol.

    Addresses: ``unix:/path/to.sock`` connects to a listening sidecar;
    ``exec:<command line>`` spawns one and speaks over its stdio.
    """

    def __init__(self, address: str, timeout: float = 30.0):
        self.address = address
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None
        self._sock_file = None

    def _ensure_channel(self):
        if self.address.startswith("exec:"):
            if self._proc is None or self._proc.poll() is not None:
                cmd = self.address[len("exec:"):].split()
                try:
                    self._proc = subprocess.Popen(
                        cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
                    )
                except OSError as exc:
                    raise SidecarUnavailable(f"cannot spawn {cmd!r}: {exc}") from None
            return ("proc", self._proc)
        if self.address.startswith("unix:"):
            if self._sock_file is None:
                path = self.address[len("unix:"):]
                sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
                sock.settimeout(self.timeout)
                try:
                    sock.connect(path)
                except OSError as exc:
                    raise SidecarUnavailable(f"cannot connect to {path}: {exc}") from None
                self._sock_file = sock.makefile("rw", encoding="utf-8", newline="\n")
            return ("sock", self._sock_file)
        raise SidecarUnavailable(f"unsupported classifier address {self.address!r}")

    def classify(self, signature: str, source_code: str = "") -> ClassifierReply:
        kind, chan = self._ensure_channel()
        request = json.dumps({"signature": signature, "source_code": source_code},
                             separators=(",", ":"))
        try:
            if kind == "proc":
                chan.stdin.write(request + "\n")
                chan.stdin.flush()
                line = chan.stdout.readline()
            else:
                chan.write(request + "\n")
                chan.flush()
                line = chan.readline()
        except (OSError, ValueError, BrokenPipeError) as exc:
            raise SidecarUnavailable(f"classifier I/O failed: {exc}") from None
        if not line:
            raise SidecarUnavailable("classifier closed the stream")
        try:
            doc = json.loads(line)
            if "error" in doc:
                raise SidecarUnavailable(f"classifier error: {doc['error']}")
            return ClassifierReply(
                category=str(doc["category"]),
                confidence=float(doc["confidence"]),
                validated=bool(doc["validated"]),
            )
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise SidecarUnavailable(f"malformed classifier response: {exc}") from None

    def close(self) -> None:
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
            self._proc = None
        if self._sock_file is not None:
            self._sock_file.close()
            self._sock_file = None
