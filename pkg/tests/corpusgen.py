"""Raw-trace corpus generation with an Ethereum-like length distribution.

The overwhelming majority of transactions are one or two calls; a few are
mid-sized protocol interactions and a rare tail reaches hundreds of
invocations. A configurable fraction are imitative attack traces built as
attacker-wrapper trees whose extracted logic matches seed patterns.
"""

import json
import random

from builders import ADDR_SENDER, call_node, make_snapshot, trace_doc
from cascadescan.labels import LabelClass

PROTOCOLS = ["0x" + format(0xF000 + i, "040x") for i in range(12)]
PTOKENS = ["0x" + format(0xE000 + i, "040x") for i in range(12)]
CORE = "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"

SIGS_PROTO = [
    "swap(uint256,uint256,address,bytes)",
    "deposit(uint256)",
    "withdraw(uint256)",
    "borrow(uint256)",
    "harvest()",
]
SIGS_TOKEN = ["transfer(address,uint256)", "approve(address,uint256)",
              "mint(address,uint256)", "burn(uint256)"]
SIGS_PTOKEN = ["skim(address)", "sync()", "transfer(address,uint256)",
               "mint(address,uint256)"]


def corpus_snapshot():
    extra = {p: (LabelClass.PROTOCOL, f"proto-{i}") for i, p in enumerate(PROTOCOLS)}
    extra.update({t: (LabelClass.PROTOCOL_TOKEN, f"ptoken-{i}")
                  for i, t in enumerate(PTOKENS)})
    return make_snapshot(extra)


def _tx(rng):
    return "0x" + format(rng.getrandbits(256), "064x")


def _simple_trace(rng):
    proto = rng.choice(PROTOCOLS)
    children = [call_node(proto, rng.choice(PTOKENS + [CORE]),
                          rng.choice(SIGS_TOKEN), 1)
                for _ in range(rng.choice((0, 0, 0, 1, 2)))]
    root = call_node(ADDR_SENDER, proto, rng.choice(SIGS_PROTO), 0, children)
    return trace_doc([root], tx_hash=_tx(rng))


def _token_transfer_trace(rng):
    root = call_node(ADDR_SENDER, rng.choice([CORE] + PTOKENS),
                     rng.choice(SIGS_TOKEN), 0)
    return trace_doc([root], tx_hash=_tx(rng))


def _mid_trace(rng, n_calls):
    proto = rng.choice(PROTOCOLS)
    children = [call_node(proto, rng.choice(PTOKENS + [CORE] + PROTOCOLS),
                          rng.choice(SIGS_TOKEN + SIGS_PROTO), 1)
                for _ in range(n_calls - 1)]
    root = call_node(ADDR_SENDER, proto, rng.choice(SIGS_PROTO), 0, children)
    return trace_doc([root], tx_hash=_tx(rng))


def attack_trace(rng, wrapper=None, tx_hash=None):
    """Wrapper-shaped attack: undecoded attacker script hitting core + pool."""
    wrapper = wrapper or ("0x" + format(rng.getrandbits(160), "040x"))
    ptoken = rng.choice(PTOKENS)
    children = [
        call_node(wrapper, CORE, "transfer(address,uint256)", 1),
        call_node(wrapper, ptoken, "skim(address)", 1),
        call_node(wrapper, ptoken, "mint(address,uint256)", 1),
        call_node(wrapper, rng.choice(PROTOCOLS), "swap(uint256,uint256,address,bytes)", 1),
    ]
    root = call_node(ADDR_SENDER, wrapper, "", 0, children)
    return trace_doc([root], tx_hash=tx_hash or _tx(rng))


def gen_lines(n, seed=0, attack_fraction=0.01):
    """JSONL trace corpus; lengths mimic public-chain traffic (mostly tiny)."""
    rng = random.Random(seed)
    lines = []
    for _ in range(n):
        roll = rng.random()
        if roll < attack_fraction:
            doc = attack_trace(rng)
        elif roll < 0.60:
            doc = _token_transfer_trace(rng)
        elif roll < 0.97:
            doc = _simple_trace(rng)
        elif roll < 0.998:
            doc = _mid_trace(rng, rng.randint(5, 30))
        else:
            doc = _mid_trace(rng, rng.randint(100, 800))
        lines.append(json.dumps(doc, separators=(",", ":")))
    return lines
