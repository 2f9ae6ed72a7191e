#!/usr/bin/env python3
"""Generate a demo workspace: label CSV, trace corpus, and one attack trace.

Produces everything needed to drive the CLI end to end:

    python scripts/gen_trace_corpus.py --out demo --n 5000 --seed 42
    cascadescan labels load --in demo/labels.csv --out demo/snap.json
    cascadescan extract --traces demo/attack.jsonl --labels demo/snap.json \
        --out demo/attack_logic.jsonl
    mkdir -p demo/patterns
    cascadescan generalize --attack-logic demo/attack_logic.jsonl \
        --lambda 0.6 --tau 0.7 --out demo/patterns/p0.json
    cascadescan scan --traces demo/traces.jsonl --patterns demo/patterns \
        --labels demo/snap.json --workers 4 --report demo/report.json

Trace lengths follow a public-chain-like distribution: mostly one or two
calls, a thin mid-range, and a rare long tail.
"""

import argparse
import json
import random
from pathlib import Path

SENDER = "0x" + "aa" * 20
PROTOCOLS = ["0x" + format(0xF000 + i, "040x") for i in range(12)]
PTOKENS = ["0x" + format(0xE000 + i, "040x") for i in range(12)]
CORE = "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"  # in the packaged registry

SIGS_PROTO = ["swap(uint256,uint256,address,bytes)", "deposit(uint256)",
              "withdraw(uint256)", "borrow(uint256)", "harvest()"]
SIGS_TOKEN = ["transfer(address,uint256)", "approve(address,uint256)",
              "mint(address,uint256)", "burn(uint256)"]

SELECTORS = {
    "swap(uint256,uint256,address,bytes)": "0x022c0d9f",
    "deposit(uint256)": "0xb6b55f25",
    "withdraw(uint256)": "0x2e1a7d4d",
    "borrow(uint256)": "0xc5ebeaec",
    "harvest()": "0x4641257d",
    "transfer(address,uint256)": "0xa9059cbb",
    "approve(address,uint256)": "0x095ea7b3",
    "mint(address,uint256)": "0x40c10f19",
    "burn(uint256)": "0x42966c68",
    "skim(address)": "0xbc25cf77",
    "": "",
}


def call(caller, callee, sig, depth, children=()):
    return {"caller": caller, "callee": callee, "selector": SELECTORS[sig],
            "signature": sig, "kind": "CALL", "depth": depth, "value": "0",
            "children": list(children)}


def tx_hash(rng):
    return "0x" + format(rng.getrandbits(256), "064x")


def doc(calls, rng):
    return {"tx_hash": tx_hash(rng), "sender": SENDER, "chain_id": 1, "calls": calls}


def attack_doc(rng):
    wrapper = "0x" + format(rng.getrandbits(160), "040x")
    ptoken = rng.choice(PTOKENS)
    return doc([call(SENDER, wrapper, "", 0, [
        call(wrapper, CORE, "transfer(address,uint256)", 1),
        call(wrapper, ptoken, "skim(address)", 1),
        call(wrapper, ptoken, "mint(address,uint256)", 1),
        call(wrapper, rng.choice(PROTOCOLS), "swap(uint256,uint256,address,bytes)", 1),
    ])], rng)


def routine_doc(rng):
    roll = rng.random()
    if roll < 0.6:
        return doc([call(SENDER, rng.choice([CORE] + PTOKENS),
                         rng.choice(SIGS_TOKEN), 0)], rng)
    proto = rng.choice(PROTOCOLS)
    if roll < 0.97:
        n = rng.choice((0, 0, 0, 1, 2))
    elif roll < 0.998:
        n = rng.randint(5, 30)
    else:
        n = rng.randint(100, 799)
    children = [call(proto, rng.choice(PTOKENS + [CORE]), rng.choice(SIGS_TOKEN), 1)
                for _ in range(n)]
    return doc([call(SENDER, proto, rng.choice(SIGS_PROTO), 0, children)], rng)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo")
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--attack-fraction", type=float, default=0.01)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    rows = ["address,label_class,display_name,source"]
    rows += [f"{p},PROTOCOL,demo-proto-{i},COMMUNITY_DB" for i, p in enumerate(PROTOCOLS)]
    rows += [f"{t},PROTOCOL_TOKEN,demo-ptoken-{i},COMMUNITY_DB"
             for i, t in enumerate(PTOKENS)]
    (out / "labels.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    with open(out / "traces.jsonl", "w", encoding="utf-8") as fh:
        for _ in range(args.n):
            d = attack_doc(rng) if rng.random() < args.attack_fraction else routine_doc(rng)
            fh.write(json.dumps(d, separators=(",", ":")) + "\n")

    with open(out / "attack.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(attack_doc(rng), separators=(",", ":")) + "\n")

    print(f"wrote {out}/labels.csv, {out}/traces.jsonl ({args.n} traces), "
          f"{out}/attack.jsonl")


if __name__ == "__main__":
    main()
