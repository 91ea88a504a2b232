"""Forging deltas and the per-symbol policy rules."""

import pytest

from ledgersim.ledger import Chain, MalformedChainError, append
from ledgersim.model import Chip, Input, Output, Transaction, Value, singleton
from ledgersim.policy import (
    AFFINE_ONCE,
    FORBID_FORGE,
    FREE_FORGE,
    Policy,
    PolicyTable,
    check_policies,
    circulating,
    forged,
    policy_violation,
)
from ledgersim.validators import ACCEPT_ALL

STATE = Chip(5, 1)


def _genesis(value: Value, position: int = 1) -> Transaction:
    return Transaction(frozenset(), frozenset({Output(position, ACCEPT_ALL, 0, value)}))


def test_forged_genesis_mint():
    tx = _genesis(singleton(STATE, 100))
    assert forged(Chain(), tx, 5) == 100


def test_forged_conservation():
    chain = Chain((_genesis(singleton(STATE, 3)),))
    carry = Transaction(frozenset({Input(1, 0)}), frozenset({Output(2, ACCEPT_ALL, 0, singleton(STATE, 3))}))
    assert forged(chain, carry, 5) == 0


def test_forged_burn():
    chain = Chain((_genesis(singleton(STATE, 3)),))
    burn = Transaction(frozenset({Input(1, 0)}), frozenset({Output(2, ACCEPT_ALL, 0, singleton(STATE, 1))}))
    assert forged(chain, burn, 5) == -2


def test_forged_unresolved_input_raises():
    with pytest.raises(MalformedChainError):
        forged(Chain(), Transaction(frozenset({Input(9, 0)}), frozenset()), 5)


def test_affine_once_rules():
    table = PolicyTable((Policy(5, AFFINE_ONCE),))
    mint_one = _genesis(singleton(STATE, 1))
    assert check_policies(table, Chain(), mint_one)

    chain = append(Chain(), mint_one, policies=table)
    assert isinstance(chain, Chain)
    second = _genesis(singleton(STATE, 1), position=2)
    assert not check_policies(table, chain, second)

    burn = Transaction(frozenset({Input(1, 0)}), frozenset())
    assert not check_policies(table, chain, burn)
    assert "burn" in policy_violation(table, chain, burn)

    mint_two = _genesis(singleton(STATE, 2), position=3)
    assert not check_policies(table, Chain(), mint_two)


def test_affine_once_allows_carrying():
    table = PolicyTable((Policy(5, AFFINE_ONCE),))
    chain = append(Chain(), _genesis(singleton(STATE, 1)), policies=table)
    carry = Transaction(frozenset({Input(1, 0)}), frozenset({Output(2, ACCEPT_ALL, 7, singleton(STATE, 1))}))
    extended = append(chain, carry, policies=table)
    assert isinstance(extended, Chain)
    assert circulating(extended, 5) == 1


def test_forbid_forge():
    table = PolicyTable((Policy(5, FORBID_FORGE),))
    assert not check_policies(table, Chain(), _genesis(singleton(STATE, 1)))
    # moving existing quantity is not forging
    free = PolicyTable((Policy(5, FREE_FORGE),))
    chain = append(Chain(), _genesis(singleton(STATE, 4)), policies=free)
    carry = Transaction(frozenset({Input(1, 0)}), frozenset({Output(2, ACCEPT_ALL, 0, singleton(STATE, 4))}))
    assert check_policies(table, chain, carry)


def test_default_rule_free_forge():
    table = PolicyTable()
    assert check_policies(table, Chain(), _genesis(singleton(Chip(9, 9), 1000)))


def test_policy_table_unique_symbols():
    with pytest.raises(ValueError):
        PolicyTable((Policy(5, AFFINE_ONCE), Policy(5, FREE_FORGE)))


def test_batch_validation_reports_dangling_before_policy():
    """A structurally broken transaction is reported, not crashed on, even
    when a policy table is in force."""
    from ledgersim.ledger import DANGLING_OR_FORWARD, validate_chain

    table = PolicyTable((Policy(5, AFFINE_ONCE),))
    dangle = Transaction(frozenset({Input(9, 0)}), frozenset())
    report = validate_chain(Chain((dangle,)), table)
    assert not report.valid
    assert report.first().condition == DANGLING_OR_FORWARD


def test_policy_check_invariant_under_canonical_rename():
    """Policy verdicts only look at unspent totals, so they agree on
    alpha-equivalent prefixes."""
    from ledgersim.equivalence import canonicalize

    table = PolicyTable((Policy(5, AFFINE_ONCE),))
    chain = append(Chain(), _genesis(singleton(STATE, 1)), policies=table)
    carry = Transaction(frozenset({Input(1, 0)}), frozenset({Output(2, ACCEPT_ALL, 0, singleton(STATE, 1))}))
    chain = append(chain, carry, policies=table)
    assert isinstance(chain, Chain)
    renamed = canonicalize(chain)
    probe = _genesis(singleton(STATE, 1), position=50)
    assert check_policies(table, chain, probe) == check_policies(table, renamed, probe) == False
    free_probe = _genesis(singleton(Chip(6, 6), 5), position=51)
    assert check_policies(table, chain, free_probe) == check_policies(table, renamed, free_probe) == True
