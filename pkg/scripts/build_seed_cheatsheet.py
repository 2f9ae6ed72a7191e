#!/usr/bin/env python3
"""Regenerate the packaged seed cheatsheet (src/cascadescan/data/cheatsheet.json).

The seed carries 122 curated semantic categories: 60 high-frequency financial
operations and verification hooks, plus 62 long-tail niche operations, each
with representative function signatures. Run from the repository root.
"""

import json
from pathlib import Path

# category id -> (kind, description, [signatures])
HIGH_FREQUENCY = {
    "TRANSFER": ("FINANCIAL", "move tokens between accounts", [
        "transfer(address,uint256)",
        "transferFrom(address,address,uint256)",
        "safeTransferFrom(address,address,uint256)",
        "safeTransferFrom(address,address,uint256,bytes)",
        "send(address,uint256,bytes)",
    ]),
    "APPROVE": ("FINANCIAL", "grant spending allowance", [
        "approve(address,uint256)",
        "increaseAllowance(address,uint256)",
        "decreaseAllowance(address,uint256)",
        "setApprovalForAll(address,bool)",
        "permit(address,address,uint256,uint256,uint8,bytes32,bytes32)",
    ]),
    "SWAP": ("FINANCIAL", "exchange one asset for another", [
        "swap(uint256,uint256,address,bytes)",
        "swap(address,bool,int256,uint160,bytes)",
        "swapExactTokensForTokens(uint256,uint256,address[],address,uint256)",
        "swapTokensForExactTokens(uint256,uint256,address[],address,uint256)",
        "swapExactETHForTokens(uint256,address[],address,uint256)",
        "swapExactTokensForETH(uint256,uint256,address[],address,uint256)",
        "swapExactTokensForTokensSupportingFeeOnTransferTokens(uint256,uint256,address[],address,uint256)",
        "exactInputSingle((address,address,uint24,address,uint256,uint256,uint256,uint160))",
    ]),
    "MINT": ("FINANCIAL", "create new token units", [
        "mint(address,uint256)", "mint(uint256)", "mint(address)",
    ]),
    "BURN": ("FINANCIAL", "destroy token units", [
        "burn(uint256)", "burn(address,uint256)", "burnFrom(address,uint256)",
        "burn(address)",
    ]),
    "DEPOSIT": ("FINANCIAL", "pay assets into a protocol", [
        "deposit()", "deposit(uint256)", "deposit(uint256,address)",
        "depositAll()", "depositFor(address,uint256)",
        "supply(address,uint256,address,uint16)",
    ]),
    "WITHDRAW": ("FINANCIAL", "take assets out of a protocol", [
        "withdraw(uint256)", "withdraw()", "withdraw(uint256,address,address)",
        "withdrawAll()", "emergencyWithdraw(uint256)",
    ]),
    "BORROW": ("FINANCIAL", "open or grow a debt position", [
        "borrow(uint256)", "borrow(address,uint256,uint256,uint16,address)",
    ]),
    "REPAY": ("FINANCIAL", "pay down a debt position", [
        "repay(uint256)", "repayBorrow(uint256)",
        "repay(address,uint256,uint256,address)",
        "repayBorrowBehalf(address,uint256)",
    ]),
    "LIQUIDATE": ("FINANCIAL", "seize an undercollateralized position", [
        "liquidate(address)", "liquidateBorrow(address,uint256,address)",
        "liquidationCall(address,address,address,uint256,bool)",
    ]),
    "FLASH_LOAN": ("FINANCIAL", "uncollateralized intra-transaction loan", [
        "flashLoan(address,address,uint256,bytes)",
        "flashLoan(address,address[],uint256[],uint256[],address,bytes,uint16)",
        "flashLoanSimple(address,address,uint256,bytes,uint16)",
        "flash(address,uint256,uint256,bytes)",
    ]),
    "STAKE": ("FINANCIAL", "lock tokens for yield", [
        "stake(uint256)", "stake(uint256,address)", "enterStaking(uint256)",
    ]),
    "UNSTAKE": ("FINANCIAL", "release staked tokens", [
        "unstake(uint256)", "unstake()", "leaveStaking(uint256)",
    ]),
    "CLAIM_REWARD": ("FINANCIAL", "collect accrued rewards", [
        "claim()", "claim(address)", "claimReward(uint256)",
        "claimRewards(address[],uint256,address)", "getReward()",
    ]),
    "HARVEST": ("FINANCIAL", "realize vault yield", [
        "harvest()", "harvest(uint256)",
    ]),
    "ADD_LIQUIDITY": ("FINANCIAL", "provide pool liquidity", [
        "addLiquidity(address,address,uint256,uint256,uint256,uint256,address,uint256)",
        "addLiquidityETH(address,uint256,uint256,uint256,address,uint256)",
    ]),
    "REMOVE_LIQUIDITY": ("FINANCIAL", "withdraw pool liquidity", [
        "removeLiquidity(address,address,uint256,uint256,uint256,address,uint256)",
        "removeLiquidityETH(address,uint256,uint256,uint256,address,uint256)",
        "removeLiquidityETHSupportingFeeOnTransferTokens(address,uint256,uint256,uint256,address,uint256)",
    ]),
    "SKIM": ("FINANCIAL", "sweep pool balance surplus", ["skim(address)"]),
    "SYNC": ("FINANCIAL", "force pool reserve resync", ["sync()"]),
    "REDEEM": ("FINANCIAL", "convert shares back to assets", [
        "redeem(uint256)", "redeem(uint256,address,address)",
        "redeemUnderlying(uint256)",
    ]),
    "BUY": ("FINANCIAL", "purchase at quoted price", [
        "buy(uint256)", "buyTokens(address,uint256)",
    ]),
    "SELL": ("FINANCIAL", "sell at quoted price", [
        "sell(uint256)", "sellTokens(uint256)",
    ]),
    "WRAP": ("FINANCIAL", "wrap native coin into token", ["wrap(uint256)"]),
    "UNWRAP": ("FINANCIAL", "unwrap token into native coin", ["unwrap(uint256)"]),
    "LOCK": ("FINANCIAL", "time-lock a balance", [
        "lock(uint256,uint256)", "createLock(uint256,uint256)",
    ]),
    "UNLOCK": ("FINANCIAL", "release a time-locked balance", ["unlock(uint256)"]),
    "VEST": ("FINANCIAL", "vesting schedule operations", [
        "vest(uint256)", "release(address)",
    ]),
    "EXIT": ("FINANCIAL", "leave a position entirely", ["exit()"]),
    "MIGRATE": ("FINANCIAL", "move a position between versions", [
        "migrate(uint256)", "migrate(address,uint256)",
    ]),
    "DELEGATE": ("FINANCIAL", "delegate voting power", [
        "delegate(address)",
        "delegateBySig(address,uint256,uint256,uint8,bytes32,bytes32)",
    ]),
    "VOTE": ("FINANCIAL", "cast a governance vote", [
        "castVote(uint256,uint8)", "vote(uint256,bool)",
    ]),
    "AIRDROP": ("FINANCIAL", "gratis token distribution", [
        "airdrop(address[],uint256)", "airdropTokens(address[],uint256[])",
    ]),
    "BRIDGE": ("FINANCIAL", "move assets across chains", [
        "bridge(uint256,address)", "bridgeTokens(uint256,uint16,address)",
    ]),
    "SETTLE": ("FINANCIAL", "settle an open obligation", [
        "settle()", "settleAuction(uint256)",
    ]),
    "EXECUTE": ("FINANCIAL", "proxy/wallet arbitrary execution", [
        "execute(address,uint256,bytes)",
        "execTransaction(address,uint256,bytes,uint8,uint256,uint256,uint256,address,address,bytes)",
    ]),
    "MULTICALL": ("FINANCIAL", "batch several calls", [
        "multicall(bytes[])", "aggregate((address,bytes)[])",
    ]),
    "SWEEP": ("FINANCIAL", "sweep stray balances", [
        "sweep(address)", "sweepTokens(address,uint256)",
    ]),
    "COMPOUND": ("FINANCIAL", "reinvest accrued yield", ["compound()"]),
    "ZAP": ("FINANCIAL", "single-sided liquidity entry/exit", [
        "zapIn(address,uint256)", "zapOut(address,uint256)",
    ]),
    "SEIZE": ("FINANCIAL", "transfer collateral on liquidation", [
        "seize(address,address,uint256)",
    ]),
    "ACCRUE": ("FINANCIAL", "accrue interest bookkeeping", ["accrueInterest()"]),
    "REBALANCE": ("FINANCIAL", "rebalance holdings", ["rebalance()"]),
    "PRICE_QUERY": ("OTHER", "read quoted prices or reserves", [
        "getAmountsOut(uint256,address[])", "getAmountOut(uint256,uint256,uint256)",
        "getReserves()", "latestAnswer()", "getPrice(address)",
    ]),
    "BALANCE_QUERY": ("OTHER", "read an account balance", [
        "balanceOf(address)", "balanceOfUnderlying(address)",
    ]),
    "SUPPLY_QUERY": ("OTHER", "read total supply", ["totalSupply()"]),
    "ALLOWANCE_QUERY": ("OTHER", "read an allowance", ["allowance(address,address)"]),
    "OWNERSHIP": ("OTHER", "contract ownership transfer", [
        "transferOwnership(address)", "renounceOwnership()", "acceptOwnership()",
    ]),
    "UPGRADE": ("OTHER", "proxy implementation upgrade", [
        "upgradeTo(address)", "upgradeToAndCall(address,bytes)",
    ]),
    "INITIALIZE": ("OTHER", "one-shot initializer", [
        "initialize()", "initialize(address)", "initialize(address,address)",
    ]),
    "PAUSE": ("OTHER", "halt protocol operation", ["pause()"]),
    "UNPAUSE": ("OTHER", "resume protocol operation", ["unpause()"]),
    "SET_FEE": ("OTHER", "adjust fee parameters", [
        "setFee(uint256)", "setFees(uint256,uint256)",
    ]),
    "CREATE_PAIR": ("FINANCIAL", "deploy a new trading pool", [
        "createPair(address,address)", "createPool(address,address,uint24)",
    ]),
    "VERIFY_TRANSFER": ("VERIFICATION", "transfer hook checks", [
        "_beforeTokenTransfer(address,address,uint256)",
        "beforeTokenTransfer(address,address,uint256)",
        "afterTokenTransfer(address,address,uint256)",
    ]),
    "VERIFY_DEPOSIT": ("VERIFICATION", "deposit hook checks", [
        "afterDeposit(uint256,uint256)",
    ]),
    "VERIFY_WITHDRAW": ("VERIFICATION", "withdraw hook checks", [
        "beforeWithdraw(uint256,uint256)",
    ]),
    "VERIFY_BORROW": ("VERIFICATION", "borrow hook checks", [
        "afterBorrow(address,uint256)",
    ]),
    "VERIFY_SWAP": ("VERIFICATION", "swap hook checks", [
        "beforeSwap(address,uint256)",
    ]),
    "CALLBACK": ("VERIFICATION", "protocol-initiated callbacks", [
        "uniswapV2Call(address,uint256,uint256,bytes)",
        "pancakeCall(address,uint256,uint256,bytes)",
        "uniswapV3SwapCallback(int256,int256,bytes)",
        "onFlashLoan(address,address,uint256,uint256,bytes)",
        "onERC721Received(address,address,uint256,bytes)",
    ]),
    "CHECK_AUTH": ("VERIFICATION", "authorization checks", [
        "checkOwner()", "checkRole(bytes32,address)",
    ]),
}

LONG_TAIL = [
    ("EMERGENCY_BURN", "emergencyBurn(address)"),
    ("BURN_ALP", "burnAlp(address,uint256)"),
    ("AIRDROP_REWARD", "airDropReward(address[])"),
    ("REBASE", "rebase()"),
    ("GULP", "gulp(address)"),
    ("TEND", "tend()"),
    ("KICK", "kick(uint256)"),
    ("DRIP", "drip()"),
    ("CAGE", "cage()"),
    ("JOIN", "join(address,uint256)"),
    ("FREE", "free(uint256)"),
    ("FOLD", "fold(address)"),
    ("PLANT", "plant()"),
    ("REAP", "reap(address)"),
    ("NOTIFY_REWARD", "notifyRewardAmount(uint256)"),
    ("CHECKPOINT", "checkpoint()"),
    ("POKE", "poke(address)"),
    ("BOND", "bond(uint256)"),
    ("UNBOND", "unbond(uint256)"),
    ("REBOND", "rebond(uint256)"),
    ("SLASH", "slash(address,uint256)"),
    ("RAGE_QUIT", "ragequit(uint256)"),
    ("SPONSOR", "sponsor(uint256)"),
    ("TIP", "tip(uint256)"),
    ("DONATE", "donate(uint256)"),
    ("REFUND", "refund(address)"),
    ("RESCUE", "rescueTokens(address,uint256)"),
    ("RECOVER", "recoverERC20(address,uint256)"),
    ("CLAWBACK", "clawback(address)"),
    ("BOOST", "boost(uint256)"),
    ("DILUTE", "dilute(uint256)"),
    ("SPLIT", "split(uint256)"),
    ("MERGE", "merge(uint256,uint256)"),
    ("GRADUATE", "graduate()"),
    ("LAUNCH", "launch()"),
    ("SEED_LIQUIDITY", "seedLiquidity(uint256)"),
    ("PRIME", "prime()"),
    ("ENROLL", "enroll(address)"),
    ("REGISTER", "register(address)"),
    ("WHITELIST", "addToWhitelist(address)"),
    ("BLACKLIST", "addToBlacklist(address)"),
    ("SNAPSHOT", "snapshot()"),
    ("FINALIZE", "finalize()"),
    ("ROLLOVER", "rollover(uint256)"),
    ("EXPIRE", "expire(uint256)"),
    ("EXERCISE", "exercise(uint256)"),
    ("WRITE_OPTION", "writeOption(uint256,uint256)"),
    ("HEDGE", "hedge(uint256)"),
    ("LEVER", "lever(uint256)"),
    ("DELEVER", "delever(uint256)"),
    ("REPEG", "repeg()"),
    ("TWAP_UPDATE", "updateTwap()"),
    ("ORACLE_UPDATE", "updatePrice(address)"),
    ("KEEPER_PERFORM", "performUpkeep(bytes)"),
    ("TASK_EXEC", "executeTask(bytes)"),
    ("BATCH_TRANSFER", "batchTransfer(address[],uint256[])"),
    ("DISPERSE", "disperse(address[],uint256[])"),
    ("STREAM_CREATE", "createStream(address,uint256,uint256)"),
    ("STREAM_CANCEL", "cancelStream(uint256)"),
    ("STREAM_WITHDRAW", "withdrawFromStream(uint256,uint256)"),
    ("DESTROY", "destroy()"),
    ("CULL", "cull(address)"),
]


def build() -> dict:
    categories = []
    entries = []
    for cid, (kind, desc, sigs) in HIGH_FREQUENCY.items():
        categories.append({"id": cid, "kind": kind, "description": desc})
        for sig in sigs:
            entries.append({"signature": sig, "category": cid})
    for cid, sig in LONG_TAIL:
        categories.append({
            "id": cid, "kind": "FINANCIAL",
            "description": "long-tail project-specific operation",
        })
        entries.append({"signature": sig, "category": cid})
    categories.sort(key=lambda c: c["id"])
    entries.sort(key=lambda e: e["signature"])
    return {"version": "seed-1+0", "categories": categories, "entries": entries}


def main() -> None:
    out = Path(__file__).resolve().parents[1] / "src" / "cascadescan" / "data" / "cheatsheet.json"
    doc = build()
    out.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}: {len(doc['categories'])} categories, {len(doc['entries'])} entries")


if __name__ == "__main__":
    main()
