"""Address labels and the core-asset token registry.

Label CSVs carry community/vendor/local knowledge about which addresses are
protocols, tokens, or known exploiters. A snapshot is immutable once built;
a scan pins exactly one snapshot so results stay reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from importlib import resources
from typing import Dict, FrozenSet, Mapping, Optional, Sequence

from .trace import ADDRESS_RE

logger = logging.getLogger(__name__)


class LabelClass(str, Enum):
    PROTOCOL = "PROTOCOL"
    CORE_ASSET_TOKEN = "CORE_ASSET_TOKEN"
    PROTOCOL_TOKEN = "PROTOCOL_TOKEN"
    EXPLOITER = "EXPLOITER"
    UNLABELED = "UNLABELED"


class LabelSource(str, Enum):
    COMMUNITY_DB = "COMMUNITY_DB"
    VENDOR_DB = "VENDOR_DB"
    LOCAL_OVERRIDE = "LOCAL_OVERRIDE"


# higher rank wins on conflict
_SOURCE_RANK = {
    LabelSource.COMMUNITY_DB: 0,
    LabelSource.VENDOR_DB: 1,
    LabelSource.LOCAL_OVERRIDE: 2,
}


class AddressRole(str, Enum):
    """Role of an address within one transaction's context."""

    PROTOCOL = "PROTOCOL"
    CORE_ASSET_TOKEN = "CORE_ASSET_TOKEN"
    PROTOCOL_TOKEN = "PROTOCOL_TOKEN"
    ATTACKER_SCRIPT = "ATTACKER_SCRIPT"
    SENDER = "SENDER"


class TokenClass(str, Enum):
    CORE = "CORE"
    PROTOCOL_SPECIFIC = "PROTOCOL_SPECIFIC"
    NON_TOKEN = "NON_TOKEN"


class MalformedRow(ValueError):
    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class AddressLabel:
    address: str
    label_class: LabelClass
    display_name: str
    source: LabelSource


@dataclass(frozen=True)
class LabelSnapshot:
    """Immutable address -> label map plus the core-asset registry."""

    entries: Mapping[str, AddressLabel]
    core_assets: FrozenSet[str]
    version: int
    loaded_at: str

    def lookup(self, address: str) -> LabelClass:
        entry = self.entries.get(address)
        return entry.label_class if entry is not None else LabelClass.UNLABELED


_CSV_HEADER = ["address", "label_class", "display_name", "source"]

_version_counter = itertools.count(1)


def load_labels(files: Sequence[str], core_registry: Optional[str] = None,
                version: Optional[int] = None) -> LabelSnapshot:
    """Build a snapshot from label CSVs plus an optional core-asset registry.

    Precedence on conflicting addresses: LOCAL_OVERRIDE > VENDOR_DB >
    COMMUNITY_DB; within one source the last occurrence wins. Conflicts
    within a single source are logged, not fatal. Versions increase
    monotonically across loads unless pinned explicitly.
    """
    if version is None:
        version = next(_version_counter)
    best: Dict[str, AddressLabel] = {}

    def _offer(label: AddressLabel) -> None:
        prev = best.get(label.address)
        if prev is None or _SOURCE_RANK[label.source] >= _SOURCE_RANK[prev.source]:
            if (prev is not None and prev.source == label.source
                    and prev.label_class != label.label_class):
                logger.warning(
                    "conflicting %s rows for %s: %s -> %s (keeping last)",
                    label.source.value, label.address,
                    prev.label_class.value, label.label_class.value,
                )
            best[label.address] = label

    core: set = set()
    if core_registry is not None:
        for chain_addresses in load_core_registry(core_registry).values():
            core.update(chain_addresses)
        for addr in sorted(core):
            _offer(AddressLabel(addr, LabelClass.CORE_ASSET_TOKEN, "core asset",
                                LabelSource.VENDOR_DB))

    for path in files:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != _CSV_HEADER:
                raise MalformedRow(str(path), 1, f"expected header {','.join(_CSV_HEADER)}")
            for line_no, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 4:
                    raise MalformedRow(str(path), line_no, f"expected 4 columns, got {len(row)}")
                addr = row[0].strip().lower()
                if not ADDRESS_RE.match(addr):
                    raise MalformedRow(str(path), line_no, f"bad address {row[0]!r}")
                try:
                    label_class = LabelClass(row[1].strip())
                    source = LabelSource(row[3].strip())
                except ValueError as exc:
                    raise MalformedRow(str(path), line_no, str(exc)) from None
                _offer(AddressLabel(addr, label_class, row[2].strip(), source))

    return LabelSnapshot(
        entries=dict(best),
        core_assets=frozenset(core),
        version=version,
        loaded_at=datetime.now(timezone.utc).isoformat(),
    )


_SECTION_RE = re.compile(r"^#\s*chain_id\s*=\s*(\d+)\s*$")


def load_core_registry(path: str) -> Dict[int, FrozenSet[str]]:
    """Read the core-asset registry: one address per line under
    ``# chain_id=N`` section headers."""
    chains: Dict[int, set] = {}
    current: Optional[int] = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            m = _SECTION_RE.match(line)
            if m:
                current = int(m.group(1))
                chains.setdefault(current, set())
                continue
            if line.startswith("#"):
                continue
            addr = line.lower()
            if not ADDRESS_RE.match(addr):
                raise MalformedRow(str(path), line_no, f"bad address {line!r}")
            if current is None:
                raise MalformedRow(str(path), line_no, "address before any chain_id section")
            chains[current].add(addr)
    return {cid: frozenset(addrs) for cid, addrs in chains.items()}


def default_core_registry_path() -> str:
    return str(resources.files("cascadescan").joinpath("data/core_assets.txt"))


def classify_address(snapshot: LabelSnapshot, addr: str, trace_sender: str,
                     directly_called_by_sender: bool = False) -> AddressRole:
    """Resolve an address to its role within one transaction.

    Sender beats everything. Unlabeled and exploiter-tagged addresses are
    attacker scripts; a directly-called address that carries a protocol or
    token label keeps that label (direct calls from the EOA to labeled
    protocols are routine, not evidence of attacker control).
    """
    if addr == trace_sender:
        return AddressRole.SENDER
    label_class = snapshot.lookup(addr)
    if label_class in (LabelClass.EXPLOITER, LabelClass.UNLABELED):
        return AddressRole.ATTACKER_SCRIPT
    if label_class is LabelClass.PROTOCOL:
        return AddressRole.PROTOCOL
    if label_class is LabelClass.CORE_ASSET_TOKEN:
        return AddressRole.CORE_ASSET_TOKEN
    return AddressRole.PROTOCOL_TOKEN


def token_class(snapshot: LabelSnapshot, addr: str, token_like: bool = False) -> TokenClass:
    """Economic class of the token at ``addr``.

    CORE requires both the label and membership in the core registry.
    ``token_like`` marks unlabeled addresses whose invocation looked like a
    token operation (newly deployed tokens are rarely labeled yet).
    """
    label_class = snapshot.lookup(addr)
    if label_class is LabelClass.CORE_ASSET_TOKEN and addr in snapshot.core_assets:
        return TokenClass.CORE
    if label_class is LabelClass.PROTOCOL_TOKEN:
        return TokenClass.PROTOCOL_SPECIFIC
    if label_class is LabelClass.CORE_ASSET_TOKEN:
        # labeled core outside the registry: still a token, not CORE
        return TokenClass.PROTOCOL_SPECIFIC
    if label_class is LabelClass.UNLABELED and token_like:
        return TokenClass.PROTOCOL_SPECIFIC
    return TokenClass.NON_TOKEN


def snapshot_hash(snapshot: LabelSnapshot) -> str:
    blob = json.dumps(
        {
            "version": snapshot.version,
            "core": sorted(snapshot.core_assets),
            "entries": sorted(
                (e.address, e.label_class.value, e.display_name, e.source.value)
                for e in snapshot.entries.values()
            ),
        },
        separators=(",", ":"),
    ).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_snapshot(snapshot: LabelSnapshot, path: str) -> None:
    doc = {
        "version": snapshot.version,
        "loaded_at": snapshot.loaded_at,
        "core_assets": sorted(snapshot.core_assets),
        "entries": [
            {
                "address": e.address,
                "label_class": e.label_class.value,
                "display_name": e.display_name,
                "source": e.source.value,
            }
            for e in sorted(snapshot.entries.values(), key=lambda e: e.address)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_snapshot(path: str) -> LabelSnapshot:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    entries = {
        e["address"]: AddressLabel(
            e["address"], LabelClass(e["label_class"]), e["display_name"],
            LabelSource(e["source"]),
        )
        for e in doc["entries"]
    }
    return LabelSnapshot(
        entries=entries,
        core_assets=frozenset(doc["core_assets"]),
        version=int(doc["version"]),
        loaded_at=doc["loaded_at"],
    )
