"""Dual-semantics ledger library.

One package, two ledgers: a UTxO-style chain whose validity, unspent-output
and equivalence machinery make submitted transactions order-independent up to
acceptance, and an account-style chain of named contracts where call effects
depend on execution order.  A tradable-token portal runs on both, and a
deterministic harness races the two under arbitrary interleavings.
"""

from .accounts import AccountChain, CallTx, ContractState, call, deploy_changing
from .equivalence import alpha_equiv, apart, apart_seq, canonicalize, check_commute, check_defer, obs_equiv
from .ledger import Chain, ValidationReport, append, classify, resolve_input, utxo, validate_chain
from .model import (
    ADA,
    Chip,
    Context,
    Input,
    Output,
    PositionAllocator,
    SlotRange,
    Transaction,
    Value,
    context_at,
    positions_of,
    singleton,
)
from .policy import Policy, PolicyTable, check_policies, forged
from .token_portal import TokenConfig, build_buy_tx, build_set_price_tx, init_portal, lookup_price, transition_check
from .validators import ACCEPT_ALL, REJECT_ALL, KeyId, ValidatorRef, pay_to_pubkey, run_validator

__all__ = [
    "ADA",
    "ACCEPT_ALL",
    "REJECT_ALL",
    "AccountChain",
    "CallTx",
    "Chain",
    "Chip",
    "Context",
    "ContractState",
    "Input",
    "KeyId",
    "Output",
    "Policy",
    "PolicyTable",
    "PositionAllocator",
    "SlotRange",
    "TokenConfig",
    "Transaction",
    "ValidationReport",
    "ValidatorRef",
    "Value",
    "alpha_equiv",
    "apart",
    "apart_seq",
    "append",
    "build_buy_tx",
    "build_set_price_tx",
    "call",
    "canonicalize",
    "check_commute",
    "check_defer",
    "check_policies",
    "classify",
    "context_at",
    "deploy_changing",
    "forged",
    "init_portal",
    "lookup_price",
    "obs_equiv",
    "pay_to_pubkey",
    "positions_of",
    "resolve_input",
    "run_validator",
    "singleton",
    "transition_check",
    "utxo",
    "validate_chain",
]
