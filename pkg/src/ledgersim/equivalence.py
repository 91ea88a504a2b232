"""Equivalence notions on chains and the executable commute/defer checks.

Two transaction sequences are observationally equivalent when they have the
same unspent outputs.  Two valid chains are alpha-equivalent when they differ
only in the position names of spent output-input pairs; positions of unspent
outputs are observable and may not be renamed.  Alpha-equivalence is decided
by canonical form: every spent pair is renamed to an index determined by
traversal order, so equal canonical forms mean the chains were equal up to
renaming spent pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .ledger import Chain, InvalidChainError, as_transactions, schedule_extension, utxo, validate_chain
from .model import Input, Output, Position, Transaction, positions_of


def obs_equiv(a: Chain | Sequence[Transaction], b: Chain | Sequence[Transaction]) -> bool:
    """Observational equivalence: equal unspent-output sets."""
    return utxo(a) == utxo(b)


def apart(tx1: Transaction, tx2: Transaction) -> bool:
    """True when the two transactions mention disjoint sets of positions."""
    return not (positions_of(tx1) & positions_of(tx2))


def apart_seq(tx: Transaction, txs: Iterable[Transaction]) -> bool:
    """True when ``tx`` is apart from every transaction in the sequence."""
    return all(apart(tx, other) for other in txs)


@dataclass(frozen=True)
class PositionRenaming:
    """A finite injective renaming of positions that leaves a fixed set alone.

    The fixed set is meant to hold the unspent-output positions, which are
    observable and must not move.
    """

    mapping: tuple[tuple[Position, Position], ...]
    fixed: frozenset[Position] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", tuple(sorted(self.mapping)))
        object.__setattr__(self, "fixed", frozenset(self.fixed))
        sources = [a for a, _ in self.mapping]
        targets = [b for _, b in self.mapping]
        if len(set(sources)) != len(sources):
            raise ValueError("renaming maps some position twice")
        if len(set(targets)) != len(targets):
            raise ValueError("renaming is not injective")
        if self.fixed & set(sources) or self.fixed & set(targets):
            raise ValueError("renaming touches a fixed position")

    def apply(self, position: Position) -> Position:
        for a, b in self.mapping:
            if a == position:
                return b
        return position

    def as_dict(self) -> dict[Position, Position]:
        return dict(self.mapping)


def rename_positions(chain: Chain | Sequence[Transaction], renaming: PositionRenaming | dict) -> Chain:
    """Apply a position renaming uniformly to every input and output."""
    table = renaming.as_dict() if isinstance(renaming, PositionRenaming) else dict(renaming)
    txs = []
    for tx in as_transactions(chain):
        inputs = frozenset(Input(table.get(i.position, i.position), i.redeemer) for i in tx.inputs)
        outputs = frozenset(
            Output(table.get(o.position, o.position), o.validator, o.datum, o.value) for o in tx.outputs
        )
        txs.append(Transaction(inputs, outputs, tx.slot_range))
    slots = chain.slots if isinstance(chain, Chain) else None
    return Chain(tuple(txs), slots)


def spent_edges(chain: Chain | Sequence[Transaction]) -> list[tuple[int, Output, int, Input]]:
    """Every bound output-input pair of a valid chain, as
    (producer index, output, spender index, input)."""
    txs = as_transactions(chain)
    producer: dict[Position, tuple[int, Output]] = {}
    for index, tx in enumerate(txs):
        for out in tx.outputs:
            producer[out.position] = (index, out)
    edges = []
    for index, tx in enumerate(txs):
        for inp in tx.inputs:
            out_index, out = producer[inp.position]
            edges.append((out_index, out, index, inp))
    return edges


def _require_valid(chain: Chain) -> None:
    report = validate_chain(chain)
    if not report.valid:
        raise InvalidChainError(report.describe())


def canonical_renaming(chain: Chain) -> PositionRenaming:
    """The renaming taking a valid chain to its canonical form.

    Spent pairs are ordered by (producer index, output payload, spender index,
    redeemer) -- a key that never looks at the position being renamed, so all
    alpha-variants order their edges identically -- and then assigned the
    successive naturals that avoid the unspent positions.  Edges tied on the
    whole key are interchangeable, so the assignment is well defined on
    alpha-classes.
    """
    _require_valid(chain)
    unspent = frozenset(out.position for out in utxo(chain))

    def edge_key(edge: tuple[int, Output, int, Input]) -> tuple:
        out_index, out, in_index, inp = edge
        return (out_index, out.validator.sort_key(), out.datum, out.value.entries, in_index, inp.redeemer)

    edges = sorted(spent_edges(chain), key=edge_key)
    mapping: list[tuple[Position, Position]] = []
    candidate = 0
    for _, out, _, _ in edges:
        while candidate in unspent:
            candidate += 1
        if out.position != candidate:
            mapping.append((out.position, candidate))
        candidate += 1
    return PositionRenaming(tuple(mapping), unspent)


def canonicalize(chain: Chain) -> Chain:
    """The canonical representative of the chain's alpha-class.

    Idempotent; the result validates and is alpha-equivalent to the input.
    """
    return rename_positions(chain, canonical_renaming(chain))


def alpha_equiv(a: Chain, b: Chain) -> bool:
    """Decide alpha-equivalence of two valid chains via canonical forms."""
    return canonicalize(a) == canonicalize(b)


def freshen_spent_clashes(chain: Chain, avoid: Iterable[Position]) -> Chain:
    """Alpha-convert ``chain`` so its spent positions avoid ``avoid``.

    Each clashing spent pair is renamed to the least natural not occurring in
    the chain, in ``avoid``, or already assigned; deterministic.  Unspent
    positions are never touched (a clash there cannot be repaired by
    alpha-conversion).
    """
    _require_valid(chain)
    avoid = set(avoid)
    unspent = {out.position for out in utxo(chain)}
    occupied = set(avoid)
    for tx in chain.transactions:
        occupied |= positions_of(tx)
    mapping: list[tuple[Position, Position]] = []
    candidate = 0
    for out_index, out, _, _ in sorted(spent_edges(chain), key=lambda e: (e[0], e[1].position)):
        if out.position not in avoid:
            continue
        while candidate in occupied:
            candidate += 1
        mapping.append((out.position, candidate))
        occupied.add(candidate)
    return rename_positions(chain, PositionRenaming(tuple(mapping), frozenset(unspent)))


@dataclass(frozen=True)
class CommuteReport:
    """Facts about swapping two extension transactions on a common base."""

    apart: bool
    valid_12: bool
    valid_21: bool
    equiv: bool


def check_commute(base: Chain | Sequence[Transaction], tx1: Transaction, tx2: Transaction) -> CommuteReport:
    """Report apartness, validity of both append orders, and observational
    equivalence of the two extended sequences."""
    txs = as_transactions(base)
    order_12 = txs + (tx1, tx2)
    order_21 = txs + (tx2, tx1)
    return CommuteReport(
        apart=apart(tx1, tx2),
        valid_12=validate_chain(order_12).valid,
        valid_21=validate_chain(order_21).valid,
        equiv=obs_equiv(order_12, order_21),
    )


@dataclass(frozen=True)
class DeferReport:
    """Facts about deferring a transaction past an intervening batch."""

    hyp: bool
    valid_tx_first: bool
    equiv: bool


def check_defer(base: Chain | Sequence[Transaction], txs: Sequence[Transaction], tx: Transaction) -> DeferReport:
    """Check that a transaction valid on the base stays valid and equivalent
    when a batch of other transactions lands first.

    ``hyp`` holds when both base;txs;tx and base;tx are valid; the conclusion
    fields report validity of base;tx;txs and observational equivalence of the
    two full orders.
    """
    prior = as_transactions(base)
    batch = tuple(txs)
    txs_then_tx = prior + batch + (tx,)
    tx_then_txs = prior + (tx,) + batch
    hyp = validate_chain(txs_then_tx).valid and validate_chain(prior + (tx,)).valid
    return DeferReport(
        hyp=hyp,
        valid_tx_first=validate_chain(tx_then_txs).valid,
        equiv=obs_equiv(tx_then_txs, txs_then_tx),
    )


@dataclass(frozen=True)
class SlottedDeferReport:
    """Defer facts on a slotted chain, where validity means a monotone slot
    assignment inside every slot range exists."""

    valid_txs_tx: bool
    valid_tx: bool
    valid_tx_txs: bool
    equiv: bool


def check_defer_slotted(base: Chain, txs: Sequence[Transaction], tx: Transaction) -> SlottedDeferReport:
    """Slot-aware variant of :func:`check_defer`.

    Each ordering counts as valid when it can be scheduled: appended in order
    with some monotone slot assignment lying inside every slot range.
    Observational equivalence only looks at the transactions.
    """
    batch = tuple(txs)
    both = schedule_extension(base, batch + (tx,))
    alone = schedule_extension(base, (tx,))
    swapped = schedule_extension(base, (tx,) + batch)
    return SlottedDeferReport(
        valid_txs_tx=both is not None,
        valid_tx=alone is not None,
        valid_tx_txs=swapped is not None,
        equiv=obs_equiv(base.transactions + batch + (tx,), base.transactions + (tx,) + batch),
    )
