"""Seeded random generation of chains and theorem-check instances.

Chains grow by appending transactions that spend uniformly chosen unspent
outputs and create a few fresh ones, with genesis transactions (no inputs)
mixed in at a configurable rate; empty input and output sets both occur.
Everything is driven by a caller-supplied ``random.Random``, so campaigns are
reproducible from a seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .ledger import Chain, ValidationReport, append, utxo
from .model import ADA, Chip, Input, Output, PositionAllocator, SlotRange, Transaction, Value
from .validators import ACCEPT_ALL, REJECT_ALL, PAY_TO_PUBKEY_KIND, ACCEPT_ALL_KIND, pay_to_pubkey


@dataclass
class GenConfig:
    max_len: int = 8
    max_inputs: int = 4
    max_outputs: int = 4
    genesis_prob: float = 0.3
    empty_tx_prob: float = 0.04
    no_output_prob: float = 0.08
    reject_all_prob: float = 0.06
    p2pk_prob: float = 0.4
    key_count: int = 4
    max_datum: int = 9
    slotted: bool = False
    range_prob: float = 0.6
    max_slot_step: int = 3

    def chips(self) -> tuple[Chip, ...]:
        return (ADA, Chip(1, 1), Chip(2, 5), Chip(3, 1))


def spendable(chain: Chain | tuple) -> list[Output]:
    """Unspent outputs the generic generator knows how to spend, in a
    deterministic order."""
    outs = [o for o in utxo(chain) if o.validator.kind in (ACCEPT_ALL_KIND, PAY_TO_PUBKEY_KIND)]
    return sorted(outs, key=lambda o: o.position)


def spend(out: Output, rng: random.Random) -> Input:
    """An input consuming ``out`` with a redeemer its validator accepts."""
    if out.validator.kind == PAY_TO_PUBKEY_KIND:
        return Input(out.position, out.validator.params[0])
    return Input(out.position, rng.randrange(10))


class ChainGen:
    """Random chain builder over a shared RNG."""

    def __init__(self, rng: random.Random, cfg: GenConfig | None = None) -> None:
        self.rng = rng
        self.cfg = cfg or GenConfig()

    def random_validator(self):
        roll = self.rng.random()
        if roll < self.cfg.reject_all_prob:
            return REJECT_ALL
        if roll < self.cfg.reject_all_prob + self.cfg.p2pk_prob:
            return pay_to_pubkey(1 + self.rng.randrange(self.cfg.key_count))
        return ACCEPT_ALL

    def random_value(self) -> Value:
        chips = self.cfg.chips()
        picks = self.rng.randrange(3)
        entries = {}
        for _ in range(picks):
            chip = chips[self.rng.randrange(len(chips))]
            entries[chip] = entries.get(chip, 0) + 1 + self.rng.randrange(4)
        return Value.of(entries)

    def random_output(self, alloc: PositionAllocator) -> Output:
        return Output(alloc.fresh(), self.random_validator(), self.rng.randrange(self.cfg.max_datum + 1), self.random_value())

    def random_range(self, slot: int) -> SlotRange | None:
        if self.rng.random() >= self.cfg.range_prob:
            return None
        lo = max(0, slot - self.rng.randrange(3))
        hi = None if self.rng.random() < 0.3 else slot + self.rng.randrange(4)
        return SlotRange(lo, hi)

    def transaction(
        self,
        chain: Chain,
        alloc: PositionAllocator,
        pool: list[Output] | None = None,
        slot: int | None = None,
    ) -> Transaction:
        """A transaction valid to append to ``chain``, spending from ``pool``
        (default: every spendable unspent output)."""
        rng = self.rng
        if rng.random() < self.cfg.empty_tx_prob:
            return Transaction(frozenset(), frozenset(), self.random_range(slot) if slot is not None else None)
        pool = spendable(chain) if pool is None else list(pool)
        genesis = not pool or rng.random() < self.cfg.genesis_prob
        inputs: frozenset[Input] = frozenset()
        if not genesis:
            k = 1 + rng.randrange(min(self.cfg.max_inputs, len(pool)))
            inputs = frozenset(spend(out, rng) for out in rng.sample(pool, k))
        if rng.random() < self.cfg.no_output_prob and inputs:
            n_out = 0
        else:
            n_out = (1 if genesis else 0) + rng.randrange(self.cfg.max_outputs + (0 if genesis else 1))
        outputs = frozenset(self.random_output(alloc) for _ in range(n_out))
        slot_range = self.random_range(slot) if slot is not None else None
        return Transaction(inputs, outputs, slot_range)

    def next_slot(self, chain: Chain) -> int:
        last = chain.last_slot()
        return (0 if last is None else last) + self.rng.randrange(self.cfg.max_slot_step + 1)

    def grow(self, chain: Chain, steps: int, alloc: PositionAllocator) -> tuple[Chain, list[Transaction]]:
        """Append ``steps`` random valid transactions; returns the extended
        chain and the appended transactions."""
        added = []
        for _ in range(steps):
            if self.cfg.slotted:
                slot = self.next_slot(chain)
                tx = self.transaction(chain, alloc, slot=slot)
                result = append(chain, tx, slot)
            else:
                tx = self.transaction(chain, alloc)
                result = append(chain, tx, None)
            if isinstance(result, ValidationReport):  # generator bug guard
                raise AssertionError(f"generated transaction failed to append: {result.describe()}")
            chain = result
            added.append(tx)
        return chain, added

    def chain(self, length: int | None = None) -> tuple[Chain, PositionAllocator]:
        """A fresh random valid chain and the allocator that continues it."""
        length = self.rng.randrange(self.cfg.max_len + 1) if length is None else length
        alloc = PositionAllocator()
        start = Chain((), () if self.cfg.slotted else None)
        grown, _ = self.grow(start, length, alloc)
        return grown, alloc

    def apart_pair(self, chain: Chain, alloc: PositionAllocator) -> tuple[Transaction, Transaction]:
        """Two transactions, each valid on ``chain``, mentioning disjoint
        positions (inputs drawn from disjoint unspent pools, outputs fresh)."""
        pool = spendable(chain)
        self.rng.shuffle(pool)
        half = len(pool) // 2
        tx1 = self.transaction(chain, alloc, pool=pool[:half])
        tx2 = self.transaction(chain, alloc, pool=pool[half:])
        return tx1, tx2
