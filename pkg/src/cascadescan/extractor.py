"""Logic extraction: reduce a raw call tree to the attacker-intent invocations.

Three phases over one trace:

1. Tagging: every callee address is resolved to a role (sender, attacker
   script, protocol, core-asset token, protocol token).
2. Filtration: an invocation survives only when its caller is the sender or
   an attacker script; calls originating from protocols (recursive internals,
   triggered hooks) are protocol logic, not attacker intent.
3. Layer restructuring: a surviving call whose callee is an attacker script
   is a wrapper; the wrapper is deleted and its children lifted one level up,
   repeatedly, until no surviving call targets an attacker script. Lifted
   children keep attacker-initiated caller context.

Delegatecall frames are attributed to the callee address: attacker proxies
delegate into logic contracts, and the callee identity carries the semantic
signature. The alternative reading (attribute to the caller) would merge
proxy frames into their parents; nothing downstream depends on that choice
because wrappers are deleted either way.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .labels import AddressRole, LabelSnapshot, TokenClass, classify_address, token_class
from .semantics import (
    Cheatsheet,
    ClassifierBoundary,
    classify_unknown,
    is_token_operation,
    lookup,
)
from .trace import Invocation, Trace

logger = logging.getLogger(__name__)

# wrapper chains deeper than this are adversarial; truncate instead of failing
LIFT_CAP = 32

_ITEM_ROLES = (AddressRole.PROTOCOL, AddressRole.CORE_ASSET_TOKEN, AddressRole.PROTOCOL_TOKEN)


@dataclass(frozen=True)
class LogicItem:
    category_id: str
    token: TokenClass
    target_role: AddressRole
    depth_after_lift: int


@dataclass(frozen=True)
class ExtractedLogic:
    tx_hash: str
    items: Tuple[LogicItem, ...]
    source_invocation_count: int  # pre-filter size, diagnostics only


def extract(trace: Trace, snapshot: LabelSnapshot, cheatsheet: Cheatsheet,
            classifier: Optional[ClassifierBoundary] = None,
            fallback_on_unavailable: bool = False,
            explain: Optional[list] = None) -> ExtractedLogic:
    """Run tagging, filtration and layer restructuring over one trace.

    Pure given its pinned inputs; safe to run across traces in parallel.
    When ``explain`` is a list, a per-invocation record of (path, phase,
    decision, reason) dicts is appended for the debug dump.
    """
    sender = trace.sender
    role_cache: Dict[str, AddressRole] = {}
    direct_callees = {inv.callee for root in trace.root_calls for inv in _iter_tree(root)
                      if inv.caller == sender}

    def role_of(addr: str) -> AddressRole:
        role = role_cache.get(addr)
        if role is None:
            role = classify_address(snapshot, addr, sender, addr in direct_callees)
            role_cache[addr] = role
        return role

    def note(path: str, phase: str, decision: str, reason: str) -> None:
        if explain is not None:
            explain.append({"path": path, "phase": phase, "decision": decision,
                            "reason": reason})

    items: List[LogicItem] = []
    total = 0
    # stack of (invocation, path, lifted-levels); children pushed in reverse
    # so emission follows pre-order with wrappers spliced out in place
    stack: List[Tuple[Invocation, str, int]] = [
        (root, f"calls[{i}]", 0)
        for i, root in reversed(list(enumerate(trace.root_calls)))
    ]
    while stack:
        inv, path, lifted = stack.pop()
        total += 1
        caller_role = role_of(inv.caller)
        kept = caller_role in (AddressRole.SENDER, AddressRole.ATTACKER_SCRIPT)
        callee_role = role_of(inv.callee)

        child_lift = lifted
        if kept and callee_role is AddressRole.ATTACKER_SCRIPT:
            if lifted >= LIFT_CAP:
                note(path, "restructure", "truncated", f"lift cap {LIFT_CAP} reached")
                logger.warning("%s: wrapper chain exceeds lift cap %d; truncating",
                               trace.tx_hash, LIFT_CAP)
                continue
            # lifted children keep attacker-initiated caller context: their
            # caller is the deleted wrapper's callee, an attacker script, so
            # re-filtration keeps them. The alternative reading (re-check the
            # filter against the lifted position's parent, i.e. the wrapper's
            # own caller) yields the same keep decision for sender-rooted
            # chains but would drop reentrant children under protocol frames.
            note(path, "restructure", "lifted", "wrapper to attacker script removed")
            child_lift = lifted + 1
        elif kept and callee_role in _ITEM_ROLES:
            item = _to_item(inv, callee_role, inv.depth - lifted, snapshot, cheatsheet,
                            classifier, fallback_on_unavailable)
            if item is not None:
                items.append(item)
                note(path, "classify", "item", item.category_id)
            else:
                note(path, "classify", "discarded", "undecoded signature")
        elif kept:
            note(path, "filter", "kept-no-item", f"callee role {callee_role.value}")
        else:
            note(path, "filter", "dropped", f"caller role {caller_role.value}")

        for i, child in reversed(list(enumerate(inv.children))):
            stack.append((child, f"{path}.children[{i}]", child_lift))

    return ExtractedLogic(tx_hash=trace.tx_hash, items=tuple(items),
                          source_invocation_count=total)


def _iter_tree(inv: Invocation):
    stack = [inv]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(cur.children)


def _to_item(inv: Invocation, callee_role: AddressRole, depth: int,
             snapshot: LabelSnapshot, cheatsheet: Cheatsheet,
             classifier: Optional[ClassifierBoundary],
             fallback_on_unavailable: bool) -> Optional[LogicItem]:
    if inv.signature:
        category = lookup(cheatsheet, inv.signature)
        if category is None:
            outcome = classify_unknown(cheatsheet, inv.signature, True, classifier,
                                       fallback_on_unavailable=fallback_on_unavailable)
            category = outcome.category_id
    else:
        category = None  # undecoded: discard
    if category is None:
        return None
    token = token_class(snapshot, inv.callee, token_like=is_token_operation(category))
    return LogicItem(category_id=category, token=token, target_role=callee_role,
                     depth_after_lift=depth)


def logic_fingerprint(logic: ExtractedLogic) -> bytes:
    """Order-independent digest of the item multiset, usable as a cache key."""
    rows = sorted(
        f"{i.category_id}|{i.token.value}|{i.target_role.value}|{i.depth_after_lift}"
        for i in logic.items
    )
    blob = "\x1e".join(["logic-v1"] + rows).encode("utf-8")
    return hashlib.sha256(blob).digest()


def logic_to_dict(logic: ExtractedLogic) -> dict:
    return {
        "tx_hash": logic.tx_hash,
        "items": [
            {
                "category": i.category_id,
                "token": i.token.value,
                "target_role": i.target_role.value,
                "depth": i.depth_after_lift,
            }
            for i in logic.items
        ],
        "source_invocation_count": logic.source_invocation_count,
    }


def logic_to_json(logic: ExtractedLogic) -> str:
    return json.dumps(logic_to_dict(logic), separators=(",", ":"))


def logic_from_dict(doc: dict) -> ExtractedLogic:
    items = tuple(
        LogicItem(
            category_id=i["category"],
            token=TokenClass(i["token"]),
            target_role=AddressRole(i["target_role"]),
            depth_after_lift=int(i["depth"]),
        )
        for i in doc["items"]
    )
    return ExtractedLogic(
        tx_hash=doc["tx_hash"],
        items=items,
        source_invocation_count=int(doc.get("source_invocation_count", len(items))),
    )


def logic_from_json(line: str) -> ExtractedLogic:
    return logic_from_dict(json.loads(line))
