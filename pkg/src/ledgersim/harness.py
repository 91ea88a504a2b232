"""Deterministic mempool/scheduler and the theorem fuzz campaigns.

Intents are actor actions replayed against a ledger snapshot in a chosen
order.  On the UTxO-style ledger every intent is built into a concrete
transaction at submit time, against the initial snapshot, and never rebuilt:
competing traffic can only make an intent fail to attach, never change what it
does.  On the account ledger a call executes against whatever state it finds,
so its effect depends on the order.  ``run_schedule`` is a pure function of
(initial ledger, intents, order); outcomes serialize canonically so identical
runs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from . import formats
from .accounts import AccountChain, CallTx, call, deploy_changing
from .equivalence import (
    alpha_equiv,
    apart,
    check_commute,
    check_defer,
    check_defer_slotted,
    freshen_spent_clashes,
    obs_equiv,
    rename_positions,
    spent_edges,
)
from .gen import ChainGen, GenConfig, spend, spendable
from .ledger import Chain, ValidationReport, append, utxo, validate_chain
from .model import ADA, Input, Output, PositionAllocator, SlotRange, Transaction, positions_of
from .policy import PolicyTable
from .token_portal import (
    InsufficientSupply,
    NoPortalError,
    PriceRefused,
    TokenConfig,
    build_buy_tx,
    build_set_price_tx,
    find_portal,
)
from .validators import pay_to_pubkey

EUTXO = "eutxo"
ACCOUNT = "account"


@dataclass(frozen=True)
class Intent:
    """One actor action: a token-portal builder or a prebuilt transaction on
    the UTxO ledger, or a contract call on the account ledger."""

    actor: str
    kind: str  # "buy" | "set_price" | "tx" (eutxo) | "call" (account)
    params: tuple[tuple[str, int | str], ...] = ()
    prebuilt: Transaction | None = None  # for kind "tx" only

    def get(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    @property
    def build_time(self) -> str:
        """UTxO intents are fixed at submit; account calls run at execution."""
        return "at-execute" if self.kind == "call" else "at-submit"

    @classmethod
    def of(cls, actor: str, kind: str, prebuilt: Transaction | None = None, **params) -> Intent:
        return cls(actor, kind, tuple(sorted(params.items())), prebuilt)


@dataclass(frozen=True)
class EutxoWorld:
    chain: Chain
    cfg: TokenConfig
    policies: PolicyTable
    actors: tuple[tuple[str, int], ...]

    def key_of(self, actor: str) -> int:
        for name, key in self.actors:
            if name == actor:
                return key
        raise KeyError(f"unknown actor {actor!r}")


@dataclass(frozen=True)
class AccountWorld:
    chain: AccountChain
    contract: int
    actors: tuple[tuple[str, int], ...]

    def key_of(self, actor: str) -> int:
        for name, key in self.actors:
            if name == actor:
                return key
        raise KeyError(f"unknown actor {actor!r}")


@dataclass(frozen=True)
class Outcome:
    """Everything observable about one scheduled run.

    ``statuses`` is indexed by intent (not by order position).  ``key()``
    drops the order so permutations with identical effects collapse when
    counting distinct outcomes.
    """

    order: tuple[int, ...]
    statuses: tuple[tuple[str, str], ...]
    holdings: tuple[tuple[str, tuple[tuple[str, int], ...]], ...]
    state: tuple[tuple[str, int], ...]
    digest: str

    def key(self) -> tuple:
        return (self.statuses, self.holdings, self.state, self.digest)

    def to_lines(self) -> list[str]:
        lines = ["ORDER " + ",".join(str(i) for i in self.order)]
        for index, (status, reason) in enumerate(self.statuses):
            lines.append(f"INTENT {index} {status} {reason or '-'}")
        for actor, facts in self.holdings:
            rendered = " ".join(f"{k}={v}" for k, v in facts)
            lines.append(f"HOLDING {actor} {rendered}".rstrip())
        lines.append("STATE " + " ".join(f"{k}={v}" for k, v in self.state))
        lines.append(f"DIGEST {self.digest}")
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"


def _chip_label(chip) -> str:
    return f"{chip.symbol}:{chip.token}"


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _build_eutxo_intent(world: EutxoWorld, intent: Intent, chain: Chain, alloc: PositionAllocator):
    """Materialize one intent against the given chain snapshot.

    Returns (transaction, planned ada payment) or (None, refusal reason).
    """
    key = world.key_of(intent.actor)
    if intent.kind == "tx":
        if intent.prebuilt is None:
            raise ValueError("tx intent needs a prebuilt transaction")
        issuer_lock = pay_to_pubkey(world.cfg.issuer)
        paid = sum(out.value.get(ADA) for out in intent.prebuilt.outputs if out.validator == issuer_lock)
        return (intent.prebuilt, paid), ""
    if intent.kind == "buy":
        amount = intent.get("n")
        max_price = intent.get("max_price")
        try:
            tx = build_buy_tx(chain, world.cfg, key, amount, alloc, max_price)
        except (PriceRefused, InsufficientSupply, NoPortalError) as exc:
            return None, str(exc)
        issuer_lock = pay_to_pubkey(world.cfg.issuer)
        paid = sum(out.value.get(ADA) for out in tx.outputs if out.validator == issuer_lock)
        return (tx, paid), ""
    if intent.kind == "set_price":
        try:
            tx = build_set_price_tx(chain, world.cfg, intent.get("p"), alloc)
        except NoPortalError as exc:
            return None, str(exc)
        return (tx, 0), ""
    raise ValueError(f"unknown eutxo intent kind {intent.kind!r}")


def _eutxo_holdings(world: EutxoWorld, chain: Chain, paid: dict[str, int]) -> tuple:
    holdings = []
    for name, key in sorted(world.actors):
        lock = pay_to_pubkey(key)
        facts: dict[str, int] = {}
        for out in utxo(chain):
            if out.validator == lock:
                for chip, qty in out.value:
                    label = _chip_label(chip)
                    facts[label] = facts.get(label, 0) + qty
        facts["ada_paid"] = paid.get(name, 0)
        holdings.append((name, tuple(sorted(facts.items()))))
    return tuple(holdings)


def run_schedule(
    world: EutxoWorld | AccountWorld,
    intents: Sequence[Intent],
    order: Sequence[int],
    rebuild: bool = False,
) -> Outcome:
    """Execute the intents in the given order and report every status.

    The order must be a permutation of the intent indices.  All failures are
    recorded in the outcome, never raised.  ``rebuild`` enables the off-by-
    default retry mode on the UTxO ledger: an intent whose submit-time
    transaction no longer attaches is rebuilt once against the chain as it
    stands at its execution turn (builder guards still apply).
    """
    order = tuple(order)
    if sorted(order) != list(range(len(intents))):
        raise ValueError("order must be a permutation of the intent indices")
    if isinstance(world, EutxoWorld):
        return _run_eutxo(world, intents, order, rebuild)
    return _run_account(world, intents, order)


def _run_eutxo(world: EutxoWorld, intents: Sequence[Intent], order: tuple[int, ...], rebuild: bool) -> Outcome:
    positions: set[int] = set()
    for tx in world.chain.transactions:
        positions |= positions_of(tx)
    alloc = PositionAllocator.above(positions)
    built: list[tuple[Transaction, int] | None] = []
    refusals: list[str] = []
    for intent in intents:  # submit phase: build everything against the snapshot
        result, refusal = _build_eutxo_intent(world, intent, world.chain, alloc)
        built.append(result)
        refusals.append(refusal)
    chain = world.chain
    statuses: list[tuple[str, str]] = [("", "")] * len(intents)
    paid: dict[str, int] = {}
    for index in order:
        entry = built[index]
        reason = f"refused-at-build: {refusals[index]}" if entry is None else ""
        accepted_how = ""
        if entry is not None:
            tx, payment = entry
            result = append(chain, tx, None, world.policies)
            if isinstance(result, ValidationReport):
                first = result.first()
                reason = f"{first.condition}: {first.detail}"
                entry = None
        if entry is None and rebuild and intents[index].kind != "tx":
            retry, refusal = _build_eutxo_intent(world, intents[index], chain, alloc)
            if retry is None:
                reason = f"refused-at-rebuild: {refusal}"
            else:
                tx, payment = retry
                result = append(chain, tx, None, world.policies)
                if isinstance(result, ValidationReport):
                    first = result.first()
                    reason = f"{first.condition}: {first.detail}"
                else:
                    entry = retry
                    accepted_how = "rebuilt-at-execute"
        if entry is None:
            statuses[index] = ("rejected", reason)
            continue
        chain = result
        statuses[index] = ("accepted", accepted_how)
        if intents[index].kind == "buy":
            actor = intents[index].actor
            paid[actor] = paid.get(actor, 0) + payment
    try:
        portal = find_portal(chain, world.cfg)
        state = (
            ("portal_price", portal.datum),
            ("portal_supply", portal.value.get(world.cfg.traded_chip)),
        )
    except NoPortalError:
        state = (("portal_price", -1), ("portal_supply", -1))
    text = formats.chain_to_text(chain)
    return Outcome(order, tuple(statuses), _eutxo_holdings(world, chain, paid), state, _digest(text))


def _run_account(world: AccountWorld, intents: Sequence[Intent], order: tuple[int, ...]) -> Outcome:
    chain = world.chain
    statuses: list[tuple[str, str]] = [("", "")] * len(intents)
    paid: dict[str, int] = {}
    for index in order:
        intent = intents[index]
        if intent.kind != "call":
            raise ValueError(f"unknown account intent kind {intent.kind!r}")
        function = intent.get("function")
        sender = world.key_of(intent.actor)
        value = intent.get("value", 0)
        args = _call_args(function, intent)
        tx = CallTx(world.contract, function, sender, value, args)
        chain, result = call(chain, tx)
        statuses[index] = (result.status, result.reason)
        if result.ok and function in ("buy", "buyGuarded"):
            paid[intent.actor] = paid.get(intent.actor, 0) + value
    acct = chain.get(world.contract)
    holdings = []
    for name, key in sorted(world.actors):
        facts = {
            "tokens": acct.state.balance_of(key),
            "ada_paid": paid.get(name, 0),
        }
        holdings.append((name, tuple(sorted(facts.items()))))
    state = (
        ("contract_balance", acct.balance),
        ("price", acct.state.price),
    )
    digest_src = json.dumps(
        {
            "contracts": [
                [name, a.balance, a.state.issuer, a.state.price, list(a.state.balances)]
                for name, a in chain.contracts
            ],
            "calls": [[c.contract, c.function, c.sender, c.value, list(c.args), ok] for c, ok in chain.calls],
        },
        sort_keys=True,
    )
    return Outcome(order, tuple(statuses), tuple(holdings), state, _digest(digest_src))


def _call_args(function: str, intent: Intent) -> tuple[int, ...]:
    if function == "send":
        return (intent.get("to"), intent.get("amount"))
    if function == "setPrice":
        return (intent.get("p"),)
    if function == "buyGuarded":
        return (intent.get("expected"),)
    return ()


def enumerate_interleavings(count: int, limit: int, seed: int = 0) -> list[tuple[int, ...]]:
    """All permutations of ``count`` indices when count! <= limit, otherwise
    ``limit`` seeded uniform samples (reproducible per seed)."""
    if count < 0:
        raise ValueError("count must be a natural")
    if math.factorial(count) <= limit:
        return _all_permutations(count)
    rng = random.Random(seed)
    samples = []
    for _ in range(limit):
        order = list(range(count))
        rng.shuffle(order)
        samples.append(tuple(order))
    return samples


def _all_permutations(count: int) -> list[tuple[int, ...]]:
    import itertools

    return [tuple(p) for p in itertools.permutations(range(count))]


# ---------------------------------------------------------------------------
# Theorem fuzzing


@dataclass(frozen=True)
class Counterexample:
    kind: str
    detail: str
    payload: tuple[tuple[str, str], ...]  # name -> serialized text

    def to_dict(self) -> dict:
        return {"kind": self.kind, "detail": self.detail, "payload": dict(self.payload)}


@dataclass(frozen=True)
class FuzzReport:
    which: str
    seed: int
    cases: int
    attempts: int
    passes: int
    counterexamples: tuple[Counterexample, ...]

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "seed": self.seed,
            "cases": self.cases,
            "attempts": self.attempts,
            "passes": self.passes,
            "counterexamples": [c.to_dict() for c in self.counterexamples],
        }

    def to_text(self) -> str:
        lines = [
            f"FUZZ {self.which} seed={self.seed}",
            f"cases={self.cases} attempts={self.attempts} passes={self.passes} counterexamples={len(self.counterexamples)}",
        ]
        for c in self.counterexamples:
            lines.append(f"COUNTEREXAMPLE {c.kind}: {c.detail}")
            for name, text in c.payload:
                lines.append(f"--- {name} ---")
                lines.append(text.rstrip("\n"))
        return "\n".join(lines) + "\n"


THEOREMS = ("lemma15_1", "lemma15_2", "theorem17", "prop19", "lemma21", "remark18")


def _payload(**parts) -> tuple[tuple[str, str], ...]:
    rendered = []
    for name, part in parts.items():
        if isinstance(part, Chain):
            rendered.append((name, formats.chain_to_text(part)))
        elif isinstance(part, Transaction):
            rendered.append((name, formats.transactions_to_text((part,))))
        else:
            rendered.append((name, formats.transactions_to_text(tuple(part))))
    return tuple(rendered)


def _drop_tx(chain: Chain, index: int) -> Chain:
    txs = chain.transactions[:index] + chain.transactions[index + 1 :]
    slots = None
    if chain.slots is not None:
        slots = chain.slots[:index] + chain.slots[index + 1 :]
    return Chain(txs, slots)


def minimize_instance(instance: dict, fails: Callable[[dict], bool]) -> dict:
    """Greedy shrink: repeatedly drop one transaction from the base chain or
    the batch while the failure persists."""
    changed = True
    while changed:
        changed = False
        base = instance.get("base")
        if isinstance(base, Chain):
            for index in range(len(base)):
                candidate = dict(instance)
                candidate["base"] = _drop_tx(base, index)
                try:
                    if fails(candidate):
                        instance = candidate
                        changed = True
                        break
                except Exception:
                    continue
            if changed:
                continue
        batch = instance.get("txs")
        if batch:
            for index in range(len(batch)):
                candidate = dict(instance)
                candidate["txs"] = batch[:index] + batch[index + 1 :]
                try:
                    if fails(candidate):
                        instance = candidate
                        changed = True
                        break
                except Exception:
                    continue
    return instance


def fuzz_theorem(which: str, seed: int = 0, cases: int = 1000) -> FuzzReport:
    """Generate random instances satisfying the statement's hypotheses and
    check its conclusion.

    For the proved statements any counterexample is an implementation bug; for
    the slot-ranged defer refutation (``remark18``) counterexamples are the
    expected finding.  Counterexamples are shrunk by greedy transaction
    removal and serialized for replay.
    """
    if cases < 1:
        raise ValueError("cases must be >= 1")
    checker = _CHECKERS.get(which)
    if checker is None:
        raise ValueError(f"unknown theorem {which!r}; choose from {THEOREMS}")
    rng = random.Random(seed)
    attempts = 0
    done = 0
    passes = 0
    counterexamples: list[Counterexample] = []
    max_attempts = cases * 20
    while done < cases and attempts < max_attempts:
        attempts += 1
        found = checker(rng)
        if found is None:  # hypothesis not satisfied; resample
            continue
        done += 1
        ok, counterexample = found
        if ok:
            passes += 1
        elif len(counterexamples) < 5:
            counterexamples.append(counterexample)
    return FuzzReport(which, seed, done, attempts, passes, tuple(counterexamples))


def _check_lemma15_1(rng: random.Random):
    gen = ChainGen(rng)
    base, alloc = gen.chain()
    tx1, tx2 = gen.apart_pair(base, alloc)
    variant = rng.random()
    if variant < 0.15:
        # break apartness: tx2 spends one of tx1's outputs
        victims = sorted(tx1.outputs, key=lambda o: o.position)
        if victims:
            extra = spend(victims[0], rng)
            try:
                tx2 = Transaction(tx2.inputs | {extra}, tx2.outputs)
            except ValueError:
                pass
    elif variant < 0.3:
        # tx2 gets a dangling input at a never-used position
        tx2 = Transaction(tx2.inputs | {Input(alloc.fresh() + 1000, 0)}, tx2.outputs)
    report = check_commute(base, tx1, tx2)
    if not report.apart:
        return None
    ok = (report.valid_12 == report.valid_21) and report.equiv
    if ok:
        return True, None
    detail = f"apart pair: valid_12={report.valid_12} valid_21={report.valid_21} equiv={report.equiv}"
    instance = {"base": base, "tx1": tx1, "tx2": tx2}

    def fails(inst):
        r = check_commute(inst["base"], inst["tx1"], inst["tx2"])
        return apart(inst["tx1"], inst["tx2"]) and not ((r.valid_12 == r.valid_21) and r.equiv)

    instance = minimize_instance(instance, fails)
    return False, Counterexample("lemma15_1", detail, _payload(base=instance["base"], tx1=instance["tx1"], tx2=instance["tx2"]))


def _check_lemma15_2(rng: random.Random):
    gen = ChainGen(rng)
    base, alloc = gen.chain()
    extended, added = gen.grow(base, 1, alloc)
    tx_prime = added[0]
    tx = gen.transaction(extended, alloc)
    if not validate_chain(base.transactions + (tx_prime, tx)).valid:
        return None  # hypothesis valid(B;tx';tx) not satisfied
    lhs = validate_chain(base.transactions + (tx,)).valid
    rhs = apart(tx, tx_prime)
    if lhs == rhs:
        return True, None
    detail = f"valid(B;tx)={lhs} but apart={rhs}"
    instance = {"base": base, "tx_prime": tx_prime, "tx": tx}

    def fails(inst):
        b = inst["base"].transactions
        if not validate_chain(b + (inst["tx_prime"], inst["tx"])).valid:
            return False
        return validate_chain(b + (inst["tx"],)).valid != apart(inst["tx"], inst["tx_prime"])

    instance = minimize_instance(instance, fails)
    return False, Counterexample(
        "lemma15_2", detail, _payload(base=instance["base"], tx_prime=instance["tx_prime"], tx=instance["tx"])
    )


def _defer_instance(rng: random.Random, slotted: bool):
    cfg = GenConfig(slotted=slotted)
    gen = ChainGen(rng, cfg)
    base, alloc = gen.chain()
    extended, batch = gen.grow(base, rng.randrange(4), alloc)
    pool_base = {out.position for out in spendable(base)}
    pool_now = [out for out in spendable(extended) if out.position in pool_base]
    tx_slot = gen.next_slot(extended) if slotted else None
    tx = gen.transaction(base, alloc, pool=pool_now, slot=tx_slot)
    if rng.random() < 0.15 and batch:
        # adversarial: spend something created inside the batch so valid(B;tx) fails
        fresh = [out for out in spendable(extended) if out.position not in pool_base]
        if fresh:
            try:
                tx = Transaction(tx.inputs | {spend(fresh[0], rng)}, tx.outputs, tx.slot_range)
            except ValueError:
                pass
    return gen, base, tuple(batch), tx


def _check_theorem17(rng: random.Random):
    _, base, batch, tx = _defer_instance(rng, slotted=False)
    report = check_defer(base, batch, tx)
    if not report.hyp:
        return None
    if report.valid_tx_first and report.equiv:
        return True, None
    detail = f"hyp holds but valid_tx_first={report.valid_tx_first} equiv={report.equiv}"
    instance = {"base": base, "txs": batch, "tx": tx}

    def fails(inst):
        r = check_defer(inst["base"], inst["txs"], inst["tx"])
        return r.hyp and not (r.valid_tx_first and r.equiv)

    instance = minimize_instance(instance, fails)
    return False, Counterexample(
        "theorem17", detail, _payload(base=instance["base"], txs=instance["txs"], tx=instance["tx"])
    )


def _check_prop19(rng: random.Random):
    _, base, batch, tx = _defer_instance(rng, slotted=True)
    report = check_defer_slotted(base, batch, tx)
    if not (report.valid_txs_tx and report.valid_tx_txs):
        return None  # hypothesis: both orders must be appendable
    if report.equiv:
        return True, None
    detail = "both orders schedule but are not observationally equivalent"
    instance = {"base": base, "txs": batch, "tx": tx}

    def fails(inst):
        r = check_defer_slotted(inst["base"], inst["txs"], inst["tx"])
        return r.valid_txs_tx and r.valid_tx_txs and not r.equiv

    instance = minimize_instance(instance, fails)
    return False, Counterexample(
        "prop19", detail, _payload(base=instance["base"], txs=instance["txs"], tx=instance["tx"])
    )


def remark18_fails(instance: dict) -> bool:
    """True when the instance witnesses the slot-ranged failure of deferral:
    both hypotheses of the untimed statement hold, yet tx cannot go first."""
    report = check_defer_slotted(instance["base"], instance["txs"], instance["tx"])
    return report.valid_txs_tx and report.valid_tx and not report.valid_tx_txs


def _check_remark18(rng: random.Random):
    cfg = GenConfig(slotted=True, reject_all_prob=0.0)
    gen = ChainGen(rng, cfg)
    base, alloc = gen.chain(length=rng.randrange(1, 4))
    pool = spendable(base)
    if len(pool) < 2:
        out1 = gen.random_output(alloc)
        out2 = gen.random_output(alloc)
        seeded = append(base, Transaction(frozenset(), frozenset({out1, out2})), gen.next_slot(base))
        if isinstance(seeded, ValidationReport):
            return None
        base = seeded
        pool = spendable(base)
        if len(pool) < 2:
            return None
    tip = base.last_slot() or 0
    pinned = Transaction(
        frozenset({spend(pool[0], rng)}),
        frozenset({gen.random_output(alloc)}),
        SlotRange(tip, tip),  # time-sensitive: only valid right now
    )
    late = Transaction(
        frozenset({spend(pool[1], rng)}),
        frozenset({gen.random_output(alloc)}),
        SlotRange(tip + 1 + rng.randrange(3), None),  # opens after the pin closes
    )
    instance = {"base": base, "txs": (pinned,), "tx": late}
    if not remark18_fails(instance):
        return None  # hypotheses did not come out satisfied; resample
    instance = minimize_instance(instance, remark18_fails)
    detail = "txs is time-sensitive: B;txs;tx and B;tx are valid but B;tx;txs cannot be scheduled"
    return False, Counterexample(
        "remark18", detail, _payload(base=instance["base"], txs=instance["txs"], tx=instance["tx"])
    )


def _alpha_variant(rng: random.Random, base: Chain) -> Chain:
    """A random alpha-rename of some spent pairs to fresh positions."""
    edges = spent_edges(base)
    if not edges:
        return base
    top = 0
    for tx in base.transactions:
        for p in positions_of(tx):
            top = max(top, p)
    mapping = []
    next_fresh = top + 1
    for out_index, out, _, _ in sorted(edges, key=lambda e: (e[0], e[1].position)):
        if rng.random() < 0.5:
            mapping.append((out.position, next_fresh))
            next_fresh += 1
    return rename_positions(base, dict(mapping))


def _swap_variant(rng: random.Random, base: Chain) -> Chain:
    """Random adjacent swaps of apart transactions (validity preserved)."""
    txs = list(base.transactions)
    for _ in range(3):
        if len(txs) < 2:
            break
        i = rng.randrange(len(txs) - 1)
        if apart(txs[i], txs[i + 1]):
            candidate = txs[:i] + [txs[i + 1], txs[i]] + txs[i + 2 :]
            if validate_chain(candidate).valid:
                txs = candidate
    return Chain(tuple(txs))


def _check_lemma21(rng: random.Random):
    gen = ChainGen(rng, GenConfig(slotted=False))
    base, alloc = gen.chain()
    variant = _alpha_variant(rng, base)
    # part 2: alpha-variants are alpha-equivalent and observationally equivalent
    if not alpha_equiv(base, variant) or not obs_equiv(base, variant):
        instance = {"base": base}
        return False, Counterexample("lemma21_2", "alpha variant not equivalent", _payload(base=base, variant=variant))
    # part 1: appending the same valid tx to observationally equivalent chains
    swapped = _swap_variant(rng, variant)
    alloc2 = PositionAllocator.above(
        {p for tx in swapped.transactions for p in positions_of(tx)} | {alloc.peek()}
    )
    pool = spendable(base)
    tx = gen.transaction(base, alloc2, pool=pool)
    ok1 = True
    if validate_chain(base.transactions + (tx,)).valid and validate_chain(swapped.transactions + (tx,)).valid:
        ok1 = obs_equiv(base.transactions + (tx,), swapped.transactions + (tx,))
    if not ok1:
        return False, Counterexample(
            "lemma21_1", "equivalent chains diverge after the same append", _payload(base=base, variant=swapped, tx=tx)
        )
    # parts 3 and 4: a name-clash between tx and the variant's spent pairs is
    # repaired by alpha-converting the variant, after which validity and
    # equivalence transfer
    clash_candidates = sorted(
        {out.position for _, out, _, _ in spent_edges(swapped)}
        - {p for t in base.transactions for p in positions_of(t)}
    )
    clash_outputs = frozenset()
    if clash_candidates and tx.outputs:
        victim = sorted(tx.outputs, key=lambda o: o.position)[0]
        clash_outputs = (tx.outputs - {victim}) | {
            Output(clash_candidates[0], victim.validator, victim.datum, victim.value)
        }
        tx = Transaction(tx.inputs, clash_outputs, tx.slot_range)
    if not validate_chain(base.transactions + (tx,)).valid:
        return None  # construction failed to keep tx valid on B; resample
    fresh_variant = freshen_spent_clashes(swapped, positions_of(tx))
    ok3 = validate_chain(fresh_variant.transactions + (tx,)).valid
    ok4 = obs_equiv(base.transactions + (tx,), fresh_variant.transactions + (tx,))
    ok_alpha = alpha_equiv(swapped, fresh_variant)
    if ok3 and ok4 and ok_alpha:
        return True, None
    detail = f"freshened variant: valid={ok3} equiv={ok4} alpha={ok_alpha}"
    return False, Counterexample("lemma21_34", detail, _payload(base=base, variant=swapped, tx=tx))


_CHECKERS = {
    "lemma15_1": _check_lemma15_1,
    "lemma15_2": _check_lemma15_2,
    "theorem17": _check_theorem17,
    "prop19": _check_prop19,
    "lemma21": _check_lemma21,
    "remark18": _check_remark18,
}


# ---------------------------------------------------------------------------
# Scenarios


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario file: initial ledger configuration, actors, the
    intent list, and which schedules to run."""

    ledger: str
    actors: tuple[tuple[str, int], ...]
    intents: tuple[Intent, ...]
    schedules: tuple[tuple, ...]
    supply: int
    price: int
    cfg: TokenConfig | None = None
    policies: PolicyTable | None = None
    contract: int = 1
    deployer: str = ""

    def key_of(self, actor: str) -> int:
        for name, key in self.actors:
            if name == actor:
                return key
        raise KeyError(f"unknown actor {actor!r}")


def build_world(scenario: Scenario) -> EutxoWorld | AccountWorld:
    """Set up the initial ledger a scenario runs against."""
    if scenario.ledger == EUTXO:
        if scenario.cfg is None:
            raise ValueError("eutxo scenario needs a token config")
        policies = scenario.policies or PolicyTable()
        alloc = PositionAllocator()
        from .token_portal import init_portal

        genesis = init_portal(scenario.cfg, scenario.supply, scenario.price, alloc)
        chain = append(Chain(), genesis, None, policies)
        if isinstance(chain, ValidationReport):
            raise ValueError(f"portal initialization rejected: {chain.describe()}")
        return EutxoWorld(chain, scenario.cfg, policies, scenario.actors)
    if scenario.ledger == ACCOUNT:
        chain = deploy_changing(
            AccountChain(), scenario.contract, scenario.key_of(scenario.deployer), scenario.supply, scenario.price
        )
        return AccountWorld(chain, scenario.contract, scenario.actors)
    raise ValueError(f"unknown ledger kind {scenario.ledger!r}")


def expand_schedules(scenario: Scenario, override: Sequence[tuple] | None = None) -> list[tuple[int, ...]]:
    """Concrete permutations for every schedule clause."""
    count = len(scenario.intents)
    orders: list[tuple[int, ...]] = []
    for clause in override if override is not None else scenario.schedules:
        if clause[0] == "all":
            orders.extend(_all_permutations(count))
        elif clause[0] == "sample":
            _, n, seed = clause
            orders.extend(_sampled(count, n, seed))
        elif clause[0] == "explicit":
            order = tuple(clause[1])
            if sorted(order) != list(range(count)):
                raise ValueError(f"schedule {order} is not a permutation of 0..{count - 1}")
            orders.append(order)
        else:
            raise ValueError(f"unknown schedule clause {clause!r}")
    return orders


def _sampled(count: int, n: int, seed: int) -> list[tuple[int, ...]]:
    rng = random.Random(seed)
    samples = []
    for _ in range(n):
        order = list(range(count))
        rng.shuffle(order)
        samples.append(tuple(order))
    return samples


@dataclass(frozen=True)
class ScenarioReport:
    ledger: str
    outcomes: tuple[Outcome, ...]

    def distinct(self) -> list[tuple[Outcome, int]]:
        """Distinct outcomes (order ignored) with their multiplicities, in
        first-seen order."""
        buckets: dict[tuple, tuple[Outcome, int]] = {}
        for outcome in self.outcomes:
            key = outcome.key()
            if key in buckets:
                rep, count = buckets[key]
                buckets[key] = (rep, count + 1)
            else:
                buckets[key] = (outcome, 1)
        return list(buckets.values())

    def to_text(self) -> str:
        lines = [f"LEDGER {self.ledger}", f"SCHEDULES {len(self.outcomes)}"]
        for i, outcome in enumerate(self.outcomes):
            lines.append(f"BEGIN OUTCOME {i}")
            lines.extend(outcome.to_lines())
            lines.append("END OUTCOME")
        distinct = self.distinct()
        lines.append(f"SUMMARY distinct={len(distinct)}")
        for rep, count in distinct:
            lines.append("DISTINCT count=%d order=%s digest=%s" % (count, ",".join(map(str, rep.order)), rep.digest))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "ledger": self.ledger,
            "outcomes": [
                {
                    "order": list(o.order),
                    "statuses": [list(s) for s in o.statuses],
                    "holdings": {actor: dict(facts) for actor, facts in o.holdings},
                    "state": dict(o.state),
                    "digest": o.digest,
                }
                for o in self.outcomes
            ],
            "distinct": len(self.distinct()),
        }


def run_scenario(scenario: Scenario, override: Sequence[tuple] | None = None) -> ScenarioReport:
    """Run every schedule of the scenario against a fresh world."""
    world = build_world(scenario)
    orders = expand_schedules(scenario, override)
    outcomes = tuple(run_schedule(world, scenario.intents, order) for order in orders)
    return ScenarioReport(scenario.ledger, outcomes)


def bundled_race_scenario(ledger: str) -> Scenario:
    """The two-actor race: a buy built when the price is 1 versus the issuer
    pushing the price to 100.

    On the UTxO ledger whichever lands second goes stale and is rejected; on
    the account ledger both always land and the buyer's haul depends on the
    order.  Same shape as the corpus scenario files.
    """
    from .model import Chip
    from .policy import AFFINE_ONCE, Policy

    actors = (("buyer", 7), ("issuer", 1))
    if ledger == EUTXO:
        cfg = TokenConfig(issuer=1, traded_chip=Chip(1, 1), state_chip=Chip(2, 1))
        return Scenario(
            ledger=EUTXO,
            actors=actors,
            intents=(
                Intent.of("buyer", "buy", n=100, max_price=1),
                Intent.of("issuer", "set_price", p=100),
            ),
            schedules=(("all",),),
            supply=1000,
            price=1,
            cfg=cfg,
            policies=PolicyTable((Policy(2, AFFINE_ONCE),)),
        )
    if ledger == ACCOUNT:
        return Scenario(
            ledger=ACCOUNT,
            actors=actors,
            intents=(
                Intent.of("buyer", "call", function="buy", value=100),
                Intent.of("issuer", "call", function="setPrice", p=100),
            ),
            schedules=(("all",),),
            supply=1000,
            price=1,
            contract=1,
            deployer="issuer",
        )
    raise ValueError(f"unknown ledger kind {ledger!r}")
