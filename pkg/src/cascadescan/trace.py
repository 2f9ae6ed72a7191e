"""Decoded transaction-trace model: parsing, validation, serialization.

One trace is the decoded call tree of a single transaction. The on-disk
format is one JSON document per line:

    {"tx_hash":"0x..","sender":"0x..","chain_id":1,"calls":[
        {"caller":"0x..","callee":"0x..","selector":"0xa9059cbb",
         "signature":"transfer(address,uint256)","kind":"CALL",
         "depth":0,"value":"0","children":[...]}]}

``caller``, ``callee``, ``kind``, ``depth`` and ``value`` are required per
call; ``selector``/``signature`` default to empty (undecoded) and
``children`` to []. Unknown fields are ignored and counted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

from .keccak import selector_bytes

ADDRESS_RE = re.compile(r"^0x[0-9a-f]{40}$")
TX_HASH_RE = re.compile(r"^0x[0-9a-f]{64}$")
SELECTOR_RE = re.compile(r"^0x[0-9a-f]{8}$")
_VALUE_RE = re.compile(r"^[0-9]+$")  # ASCII only; str.isdigit admits unicode digits

# worst observed production trace lengths are in the hundreds; this bound
# only exists to stop pathological inputs from exhausting memory
MAX_TRACE_INVOCATIONS = 100_000


class TraceError(ValueError):
    """Base class for trace parsing/validation failures."""


class MalformedJson(TraceError):
    pass


class SchemaViolation(TraceError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantViolation(TraceError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class CallKind(str, Enum):
    CALL = "CALL"
    DELEGATECALL = "DELEGATECALL"
    STATICCALL = "STATICCALL"
    CREATE = "CREATE"


@dataclass(frozen=True)
class Invocation:
    """One decoded call frame. Immutable; safe to share across workers."""

    caller: str
    callee: str
    selector: str  # "0x"+8 hex chars, or "" when absent
    signature: str  # canonical-ish textual signature, or "" when undecoded
    call_kind: CallKind
    depth: int
    value: str  # wei as base-10 string; amounts exceed 64-bit range
    children: Tuple["Invocation", ...] = ()


@dataclass(frozen=True)
class Trace:
    tx_hash: str
    sender: str
    chain_id: int
    root_calls: Tuple[Invocation, ...]


@dataclass
class ParseStats:
    """Counters accumulated across parse calls (e.g. one scan)."""

    unknown_fields: int = 0


_CALL_FIELDS = {"caller", "callee", "selector", "signature", "kind", "depth", "value", "children"}
_TOP_FIELDS = {"tx_hash", "sender", "chain_id", "calls"}


def canonical_signature(signature: str) -> str:
    """Strip whitespace and parameter names, keeping only name(type,...).

    Type tokens are lowercased; the function name keeps its case since the
    selector depends on it.
    """
    sig = signature.strip()
    open_idx = sig.find("(")
    if open_idx < 0 or not sig.endswith(")"):
        return "".join(sig.split())
    name = sig[:open_idx].strip()
    body = sig[open_idx + 1:-1]
    args = _split_top_level(body)
    out_args = []
    for arg in args:
        arg = arg.strip()
        if not arg:
            continue
        tokens = arg.split()
        # drop storage-location keywords and a trailing bare identifier (the name)
        tokens = [t for t in tokens if t not in ("memory", "calldata", "storage", "payable")]
        if len(tokens) > 1 and re.fullmatch(r"[A-Za-z_$][A-Za-z0-9_$]*", tokens[-1]):
            tokens = tokens[:-1]
        out_args.append("".join(tokens).lower())
    return f"{name}({','.join(out_args)})"


def _split_top_level(body: str) -> List[str]:
    parts = []
    depth = 0
    cur = []
    for ch in body:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur or parts:
        parts.append("".join(cur))
    return parts


def selector_for(signature: str) -> str:
    """Derive the 4-byte selector of a (canonicalized) signature."""
    return "0x" + selector_bytes(canonical_signature(signature)).hex()


def parse_trace(raw: Union[bytes, str], stats: Optional[ParseStats] = None) -> Trace:
    """Parse and validate one trace document.

    Raises MalformedJson on syntax errors, SchemaViolation for missing or
    ill-typed fields (naming the JSON path), and InvariantViolation for
    structural inconsistencies (naming the offending node).
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="replace")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaViolation("$", "top-level value must be an object")

    if stats is not None:
        stats.unknown_fields += sum(1 for k in doc if k not in _TOP_FIELDS)

    tx_hash = _require_str(doc, "tx_hash", "$").lower()
    if not TX_HASH_RE.match(tx_hash):
        raise SchemaViolation("tx_hash", f"not a 32-byte hex string: {tx_hash!r}")
    sender = _parse_address(doc, "sender", "$")
    chain_id = doc.get("chain_id")
    if not isinstance(chain_id, int) or isinstance(chain_id, bool):
        raise SchemaViolation("chain_id", "must be an integer")
    calls = doc.get("calls")
    if not isinstance(calls, list) or not calls:
        raise SchemaViolation("calls", "must be a non-empty array")

    counter = [0]
    roots = tuple(
        _parse_invocation(call, f"calls[{i}]", 0, counter, stats)
        for i, call in enumerate(calls)
    )
    for i, root in enumerate(roots):
        if root.depth != 0:
            raise InvariantViolation(f"calls[{i}]", f"root call must have depth 0, got {root.depth}")
        if root.caller != sender:
            raise InvariantViolation(
                f"calls[{i}]", f"root caller {root.caller} does not match sender {sender}"
            )
    return Trace(tx_hash=tx_hash, sender=sender, chain_id=chain_id, root_calls=roots)


def _require_str(obj: dict, key: str, path: str) -> str:
    v = obj.get(key)
    if not isinstance(v, str):
        raise SchemaViolation(f"{path}.{key}" if path != "$" else key, "must be a string")
    return v


def _parse_address(obj: dict, key: str, path: str) -> str:
    v = _require_str(obj, key, path).lower()
    if not ADDRESS_RE.match(v):
        where = f"{path}.{key}" if path != "$" else key
        raise SchemaViolation(where, f"not a 20-byte hex address: {v!r}")
    return v


def _parse_invocation(obj, path: str, expected_depth: int, counter: list,
                      stats: Optional[ParseStats]) -> Invocation:
    if not isinstance(obj, dict):
        raise SchemaViolation(path, "call must be an object")
    counter[0] += 1
    if counter[0] > MAX_TRACE_INVOCATIONS:
        raise SchemaViolation(path, f"trace exceeds {MAX_TRACE_INVOCATIONS} invocations")
    if stats is not None:
        stats.unknown_fields += sum(1 for k in obj if k not in _CALL_FIELDS)

    caller = _parse_address(obj, "caller", path)
    callee = _parse_address(obj, "callee", path)

    selector = obj.get("selector", "")
    if not isinstance(selector, str):
        raise SchemaViolation(f"{path}.selector", "must be a string")
    selector = selector.lower()
    if selector and not SELECTOR_RE.match(selector):
        raise SchemaViolation(f"{path}.selector", f"not a 4-byte hex selector: {selector!r}")

    signature = obj.get("signature", "")
    if not isinstance(signature, str):
        raise SchemaViolation(f"{path}.signature", "must be a string")

    kind_raw = obj.get("kind")
    if not isinstance(kind_raw, str) or kind_raw not in CallKind.__members__:
        raise SchemaViolation(f"{path}.kind", f"must be one of {[k.value for k in CallKind]}")
    kind = CallKind(kind_raw)

    depth = obj.get("depth")
    if not isinstance(depth, int) or isinstance(depth, bool) or depth < 0:
        raise SchemaViolation(f"{path}.depth", "must be a non-negative integer")

    value = obj.get("value")
    if not isinstance(value, str) or not _VALUE_RE.match(value):
        raise SchemaViolation(f"{path}.value", "must be a non-negative base-10 string")

    if depth != expected_depth:
        raise InvariantViolation(path, f"depth {depth} does not equal parent depth + 1 ({expected_depth})")

    if selector and signature:
        expected = selector_for(signature)
        if expected != selector:
            raise InvariantViolation(
                path, f"selector {selector} does not match keccak of {signature!r} ({expected})"
            )

    children_raw = obj.get("children", [])
    if not isinstance(children_raw, list):
        raise SchemaViolation(f"{path}.children", "must be an array")
    children = tuple(
        _parse_invocation(child, f"{path}.children[{i}]", depth + 1, counter, stats)
        for i, child in enumerate(children_raw)
    )
    return Invocation(
        caller=caller, callee=callee, selector=selector, signature=signature,
        call_kind=kind, depth=depth, value=value, children=children,
    )


def _invocation_to_dict(inv: Invocation) -> dict:
    return {
        "caller": inv.caller,
        "callee": inv.callee,
        "selector": inv.selector,
        "signature": inv.signature,
        "kind": inv.call_kind.value,
        "depth": inv.depth,
        "value": inv.value,
        "children": [_invocation_to_dict(c) for c in inv.children],
    }


def serialize_trace(trace: Trace) -> str:
    """Render one trace as a single JSON line in the documented format."""
    doc = {
        "tx_hash": trace.tx_hash,
        "sender": trace.sender,
        "chain_id": trace.chain_id,
        "calls": [_invocation_to_dict(r) for r in trace.root_calls],
    }
    return json.dumps(doc, separators=(",", ":"))


def flatten(trace: Trace) -> List[Invocation]:
    """Pre-order depth-first enumeration of all invocations."""
    out: List[Invocation] = []
    stack = list(reversed(trace.root_calls))
    while stack:
        inv = stack.pop()
        out.append(inv)
        stack.extend(reversed(inv.children))
    return out
