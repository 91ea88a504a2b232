"""Chains of transactions: validity, appending, unspent outputs, classification.

A sequence of transactions is a valid chain when output positions are
chain-wide distinct, every input points at a unique strictly-earlier unspent
output whose validator accepts the spend, and (when the chain carries slot
assignments) every transaction's slot falls inside its slot range.  Failures
are reported, not thrown; see :class:`ValidationReport`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .model import Input, Output, Transaction, context_at
from .validators import run_validator

# Violation condition ids.
DUPLICATE_POSITION = "duplicate-position"
DANGLING_OR_FORWARD = "dangling-or-forward-input"
VALIDATOR_REJECTED = "validator-rejected"
SLOT_OUT_OF_RANGE = "slot-out-of-range"
POLICY_VIOLATION = "policy-violation"


class MalformedChainError(Exception):
    """The chain breaks a structural assumption (e.g. two outputs share a
    position) in a way that makes the requested query ill-posed."""


class InvalidChainError(Exception):
    """An operation requiring a valid chain was given an invalid one."""


@dataclass(frozen=True)
class Violation:
    index: int
    condition: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None

    def describe(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(f"tx {v.index}: {v.condition} ({v.detail})" for v in self.violations)


@dataclass(frozen=True)
class Chain:
    """An ordered sequence of transactions, optionally with one slot per
    transaction (monotone nondecreasing)."""

    transactions: tuple[Transaction, ...] = ()
    slots: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "transactions", tuple(self.transactions))
        if self.slots is not None:
            object.__setattr__(self, "slots", tuple(self.slots))
            if len(self.slots) != len(self.transactions):
                raise ValueError("slot sequence must match transaction count")
            if any(b < a for a, b in zip(self.slots, self.slots[1:])):
                raise ValueError("slots must be monotone nondecreasing")
            if any(s < 0 for s in self.slots):
                raise ValueError("slots must be naturals")
            if not self.transactions:
                object.__setattr__(self, "slots", None)  # empty chains are unslotted

    def __len__(self) -> int:
        return len(self.transactions)

    def __iter__(self) -> Iterator[Transaction]:
        return iter(self.transactions)

    @property
    def slotted(self) -> bool:
        return self.slots is not None

    def last_slot(self) -> int | None:
        if self.slots:
            return self.slots[-1]
        return None

    def prefix(self, upto: int) -> Chain:
        return Chain(self.transactions[:upto], self.slots[:upto] if self.slots is not None else None)


def as_transactions(chain: Chain | Sequence[Transaction]) -> tuple[Transaction, ...]:
    if isinstance(chain, Chain):
        return chain.transactions
    return tuple(chain)


def resolve_input(chain: Chain | Sequence[Transaction], inp: Input, upto: int) -> Output | None:
    """The unique output at ``inp.position`` among transactions strictly before
    index ``upto``, or None when no such output exists.

    Raises MalformedChainError when more than one earlier output carries the
    position (the chain breaks the distinct-positions condition).
    """
    txs = as_transactions(chain)
    if upto < 0 or upto > len(txs):
        raise ValueError(f"upto must lie in [0, {len(txs)}], got {upto}")
    found: Output | None = None
    for tx in txs[:upto]:
        for out in tx.outputs:
            if out.position == inp.position:
                if found is not None:
                    raise MalformedChainError(f"two outputs share position {inp.position}")
                found = out
    return found


class _ChainState:
    """Incremental accumulator used by validation and append."""

    __slots__ = ("out_at", "spent", "last_slot")

    def __init__(self) -> None:
        self.out_at: dict[int, tuple[int, Output]] = {}
        self.spent: set[int] = set()
        self.last_slot: int | None = None

    def absorb(self, index: int, tx: Transaction, slot: int | None) -> None:
        for out in tx.outputs:
            self.out_at.setdefault(out.position, (index, out))
        for inp in tx.inputs:
            self.spent.add(inp.position)
        if slot is not None:
            self.last_slot = slot


def _check_transaction(state: _ChainState, index: int, tx: Transaction, slot: int | None) -> list[Violation]:
    """All violations of appending ``tx`` (at ``index``/``slot``) to the chain
    summarized by ``state``."""
    violations: list[Violation] = []
    for out in tx.outputs:
        if out.position in state.out_at:
            violations.append(
                Violation(index, DUPLICATE_POSITION, f"output position {out.position} already used")
            )
    for inp in tx.inputs:
        hit = state.out_at.get(inp.position)
        if hit is None:
            violations.append(
                Violation(index, DANGLING_OR_FORWARD, f"input at {inp.position} resolves to no earlier output")
            )
            continue
        if inp.position in state.spent:
            violations.append(
                Violation(index, DANGLING_OR_FORWARD, f"output at {inp.position} is already spent")
            )
            continue
        _, out = hit
        if not run_validator(out.validator, inp.redeemer, out.datum, out.value, context_at(tx, inp)):
            violations.append(
                Violation(index, VALIDATOR_REJECTED, f"validator {out.validator.kind} rejected input at {inp.position}")
            )
    if slot is not None:
        if state.last_slot is not None and slot < state.last_slot:
            violations.append(
                Violation(index, SLOT_OUT_OF_RANGE, f"slot {slot} below chain tip {state.last_slot}")
            )
        if tx.slot_range is not None and not tx.slot_range.contains(slot):
            hi = "*" if tx.slot_range.hi is None else tx.slot_range.hi
            violations.append(
                Violation(index, SLOT_OUT_OF_RANGE, f"slot {slot} outside range [{tx.slot_range.lo}, {hi}]")
            )
    return violations


def validate_chain(chain: Chain | Sequence[Transaction], policies=None) -> ValidationReport:
    """Check the whole chain; the report lists every violation found.

    ``policies``, when given, is a monetary policy table checked per
    transaction against its prefix (a configuration extension on top of the
    base validity conditions).
    """
    if not isinstance(chain, Chain):
        chain = Chain(tuple(chain))
    state = _ChainState()
    violations: list[Violation] = []
    for index, tx in enumerate(chain.transactions):
        slot = chain.slots[index] if chain.slots is not None else None
        found = _check_transaction(state, index, tx, slot)
        violations.extend(found)
        if policies is not None and not found:  # policy deltas need resolvable inputs
            from .policy import policy_violation

            problem = policy_violation(policies, chain.prefix(index), tx)
            if problem is not None:
                violations.append(Violation(index, POLICY_VIOLATION, problem))
        state.absorb(index, tx, slot)
    return ValidationReport(tuple(violations))


def append(chain: Chain, tx: Transaction, slot: int | None = None, policies=None) -> Chain | ValidationReport:
    """Extend a valid chain by one transaction.

    Returns the extended chain when the incremental check passes, otherwise a
    report carrying the violations.  Only ``tx`` is examined against the
    existing chain; agreement with whole-chain revalidation is guaranteed by
    prefix closure.  Slot handling: a slotted chain requires a slot and an
    unslotted nonempty chain forbids one (ValueError on misuse).
    """
    if chain.slotted and slot is None:
        raise ValueError("appending to a slotted chain requires a slot")
    if len(chain) > 0 and not chain.slotted and slot is not None:
        raise ValueError("cannot attach a slot to an unslotted chain")
    if slot is not None and slot < 0:
        raise ValueError("slot must be a natural")
    state = _ChainState()
    for index, prior in enumerate(chain.transactions):
        state.absorb(index, prior, chain.slots[index] if chain.slots is not None else None)
    violations = _check_transaction(state, len(chain), tx, slot)
    if not violations and policies is not None:
        from .policy import policy_violation

        problem = policy_violation(policies, chain, tx)
        if problem is not None:
            violations.append(Violation(len(chain), POLICY_VIOLATION, problem))
    if violations:
        return ValidationReport(tuple(violations))
    if slot is not None:
        new_slots = (chain.slots or ()) + (slot,)
        return Chain(chain.transactions + (tx,), new_slots)
    return Chain(chain.transactions + (tx,), None)


def utxo(chain: Chain | Sequence[Transaction]) -> frozenset[Output]:
    """The set of unspent outputs: outputs no later input points to.

    Defined for arbitrary transaction sequences, valid or not.
    """
    txs = as_transactions(chain)
    later_inputs: set[int] = set()
    unspent: list[Output] = []
    for tx in reversed(txs):
        for out in tx.outputs:
            if out.position not in later_inputs:
                unspent.append(out)
        for inp in tx.inputs:
            later_inputs.add(inp.position)
    return frozenset(unspent)


BLOCKCHAIN = "blockchain"
CHUNK = "chunk"
NEITHER = "neither"


def classify(chain: Chain | Sequence[Transaction]) -> str:
    """Classify a transaction sequence as blockchain, chunk, or neither.

    A chunk satisfies the blockchain conditions except that inputs may dangle
    (point outside the sequence): positions stay chain-wide distinct, no input
    points at an output at its own or a later index, and every input that does
    resolve inside the sequence passes its validator.
    """
    if not isinstance(chain, Chain):
        chain = Chain(tuple(chain))
    if validate_chain(chain).valid:
        return BLOCKCHAIN
    txs = chain.transactions
    out_at: dict[int, tuple[int, Output]] = {}
    for index, tx in enumerate(txs):
        for out in tx.outputs:
            if out.position in out_at:
                return NEITHER
            out_at[out.position] = (index, out)
    seen_inputs: set[int] = set()
    for index, tx in enumerate(txs):
        for inp in tx.inputs:
            if inp.position in seen_inputs:
                return NEITHER
            seen_inputs.add(inp.position)
            hit = out_at.get(inp.position)
            if hit is None:
                continue  # dangling inputs are what chunks permit
            target_index, out = hit
            if target_index >= index:
                return NEITHER
            if not run_validator(out.validator, inp.redeemer, out.datum, out.value, context_at(tx, inp)):
                return NEITHER
    return CHUNK


def schedule_extension(chain: Chain, txs: Iterable[Transaction], policies=None) -> Chain | None:
    """Append ``txs`` in order, choosing for each the earliest admissible slot.

    Greedy earliest-slot assignment is complete: when any monotone assignment
    within the slot ranges exists, this one does.  Returns the extended chain,
    or None when some transaction cannot be appended (structurally or because
    no slot fits).  On an unslotted chain the transactions are appended
    without slots and ranges are ignored.
    """
    txs = tuple(txs)
    slotted = chain.slotted or (len(chain) == 0 and any(tx.slot_range is not None for tx in txs))
    current = chain
    for tx in txs:
        if slotted:
            floor = current.last_slot()
            floor = 0 if floor is None else floor
            slot = max(floor, tx.slot_range.lo) if tx.slot_range is not None else floor
            if tx.slot_range is not None and not tx.slot_range.contains(slot):
                return None
            result = append(current, tx, slot, policies)
        else:
            result = append(current, tx, None, policies)
        if isinstance(result, ValidationReport):
            return None
        current = result
    return current
