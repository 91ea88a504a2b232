"""Per-currency-symbol forging rules, checked at append time.

The table is an optional configuration extension to chain validity: the base
model stays untouched and callers pass a table into ``append``/``validate``
when they want forging constrained.  The affine rule is what makes a state
chip work: it can be minted once, never duplicated, never burned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .ledger import Chain, MalformedChainError, resolve_input, utxo
from .model import Transaction

FREE_FORGE = "FreeForge"
FORBID_FORGE = "ForbidForge"
AFFINE_ONCE = "AffineOnce"

RULES = (FREE_FORGE, FORBID_FORGE, AFFINE_ONCE)


@dataclass(frozen=True)
class Policy:
    symbol: int
    rule: str

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"unknown policy rule {self.rule!r}")
        if self.symbol < 0:
            raise ValueError("currency symbol must be a natural")


@dataclass(frozen=True)
class PolicyTable:
    """Finite map from currency symbol to policy; unlisted symbols follow the
    default rule (free forging, so genesis-style issuance works)."""

    policies: tuple[Policy, ...] = ()
    default_rule: str = FREE_FORGE

    def __post_init__(self) -> None:
        object.__setattr__(self, "policies", tuple(self.policies))
        if self.default_rule not in RULES:
            raise ValueError(f"unknown policy rule {self.default_rule!r}")
        symbols = [p.symbol for p in self.policies]
        if len(set(symbols)) != len(symbols):
            raise ValueError("at most one policy per currency symbol")

    @classmethod
    def of(cls, rules: Mapping[int, str], default_rule: str = FREE_FORGE) -> PolicyTable:
        return cls(tuple(Policy(s, r) for s, r in sorted(rules.items())), default_rule)

    def rule_for(self, symbol: int) -> str:
        for p in self.policies:
            if p.symbol == symbol:
                return p.rule
        return self.default_rule


def forged(chain: Chain | Sequence[Transaction], tx: Transaction, symbol: int) -> int:
    """Net quantity of the symbol created by ``tx`` on top of ``chain``.

    Output quantities minus the quantities carried by the outputs its inputs
    resolve to; negative means burning.  Every input must resolve.
    """
    txs = chain.transactions if isinstance(chain, Chain) else tuple(chain)
    created = sum(out.value.symbol_total(symbol) for out in tx.outputs)
    consumed = 0
    for inp in tx.inputs:
        out = resolve_input(txs, inp, len(txs))
        if out is None:
            raise MalformedChainError(f"input at {inp.position} does not resolve in the chain")
        consumed += out.value.symbol_total(symbol)
    return created - consumed


def circulating(chain: Chain | Sequence[Transaction], symbol: int) -> int:
    """Total quantity of the symbol over the chain's unspent outputs."""
    return sum(out.value.symbol_total(symbol) for out in utxo(chain))


def policy_violation(table: PolicyTable, chain: Chain | Sequence[Transaction], tx: Transaction) -> str | None:
    """First policy problem with appending ``tx``, or None when all pertinent
    policies are satisfied."""
    symbols: set[int] = set()
    for out in tx.outputs:
        symbols |= out.value.symbols()
    txs = chain.transactions if isinstance(chain, Chain) else tuple(chain)
    for inp in tx.inputs:
        out = resolve_input(txs, inp, len(txs))
        if out is None:
            raise MalformedChainError(f"input at {inp.position} does not resolve in the chain")
        symbols |= out.value.symbols()
    for symbol in sorted(symbols):
        delta = forged(chain, tx, symbol)
        if delta == 0:
            continue
        rule = table.rule_for(symbol)
        if rule == FREE_FORGE:
            continue
        if rule == FORBID_FORGE:
            return f"symbol {symbol} may not be forged or burned (delta {delta:+d})"
        if delta < 0:
            return f"symbol {symbol} is affine and may not be burned (delta {delta:+d})"
        if delta > 1:
            return f"symbol {symbol} is affine: at most one may ever exist (delta {delta:+d})"
        existing = circulating(chain, symbol)
        if existing != 0:
            return f"symbol {symbol} is affine and already circulates ({existing})"
    return None


def check_policies(table: PolicyTable, chain: Chain | Sequence[Transaction], tx: Transaction) -> bool:
    """True when every pertinent monetary policy admits the transaction."""
    return policy_violation(table, chain, tx) is None
