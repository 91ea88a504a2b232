"""Scheduler behaviour, interleaving enumeration, fuzz engine plumbing."""

import math

import pytest

from ledgersim.harness import (
    Intent,
    Outcome,
    bundled_race_scenario,
    build_world,
    enumerate_interleavings,
    expand_schedules,
    fuzz_theorem,
    minimize_instance,
    remark18_fails,
    run_scenario,
    run_schedule,
)
from ledgersim.ledger import Chain


def _holding(outcome: Outcome, actor: str) -> dict:
    for name, facts in outcome.holdings:
        if name == actor:
            return dict(facts)
    raise AssertionError(f"no holdings for {actor}")


def test_single_buy_accepted():
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    intents = (Intent.of("buyer", "buy", n=5),)
    outcome = run_schedule(world, intents, (0,))
    assert outcome.statuses[0][0] == "accepted"
    assert _holding(outcome, "buyer")["1:1"] == 5
    assert _holding(outcome, "buyer")["ada_paid"] == 5


def test_eutxo_race_set_price_first():
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    outcome = run_schedule(world, scenario.intents, (1, 0))
    assert outcome.statuses[1][0] == "accepted"
    assert outcome.statuses[0][0] == "rejected"  # stale portal reference
    buyer = _holding(outcome, "buyer")
    assert buyer.get("1:1", 0) == 0 and buyer["ada_paid"] == 0
    assert dict(outcome.state)["portal_price"] == 100


def test_eutxo_race_buy_first():
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    outcome = run_schedule(world, scenario.intents, (0, 1))
    assert outcome.statuses[0][0] == "accepted"
    assert outcome.statuses[1][0] == "rejected"
    buyer = _holding(outcome, "buyer")
    assert buyer["1:1"] == 100 and buyer["ada_paid"] == 100  # price 1 each, as built


def test_account_race_set_price_first():
    scenario = bundled_race_scenario("account")
    world = build_world(scenario)
    outcome = run_schedule(world, scenario.intents, (1, 0))
    assert [s for s, _ in outcome.statuses] == ["accepted", "accepted"]
    buyer = _holding(outcome, "buyer")
    assert buyer["tokens"] == 1  # floor(100/100) after the front-run
    assert buyer["ada_paid"] == 100


def test_account_race_buy_first():
    scenario = bundled_race_scenario("account")
    world = build_world(scenario)
    outcome = run_schedule(world, scenario.intents, (0, 1))
    assert _holding(outcome, "buyer")["tokens"] == 100


def test_build_refusal_recorded():
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    intents = (Intent.of("buyer", "buy", n=1, max_price=0),)  # portal price is 1
    outcome = run_schedule(world, intents, (0,))
    status, reason = outcome.statuses[0]
    assert status == "rejected" and reason.startswith("refused-at-build")


def test_order_must_be_permutation():
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    with pytest.raises(ValueError):
        run_schedule(world, scenario.intents, (0, 0))


def test_run_schedule_deterministic():
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    a = run_schedule(world, scenario.intents, (1, 0))
    b = run_schedule(build_world(scenario), scenario.intents, (1, 0))
    assert a.to_text() == b.to_text()


def test_empty_intents():
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    outcome = run_schedule(world, (), ())
    assert outcome.statuses == ()
    assert dict(outcome.state)["portal_supply"] == 1000


def test_enumerate_interleavings_small():
    assert enumerate_interleavings(2, 10) == [(0, 1), (1, 0)]
    assert enumerate_interleavings(1, 10) == [(0,)]
    assert enumerate_interleavings(0, 10) == [()]


def test_enumerate_interleavings_sampled():
    sampled = enumerate_interleavings(5, 10, seed=42)
    assert len(sampled) == 10
    assert all(sorted(order) == [0, 1, 2, 3, 4] for order in sampled)
    assert sampled == enumerate_interleavings(5, 10, seed=42)
    assert sampled != enumerate_interleavings(5, 10, seed=43)
    assert math.factorial(5) > 10  # sampling branch really exercised


def test_expand_schedules_explicit_and_sample():
    scenario = bundled_race_scenario("eutxo")
    orders = expand_schedules(scenario, [("explicit", (1, 0)), ("sample", 3, 5)])
    assert orders[0] == (1, 0) and len(orders) == 4
    with pytest.raises(ValueError):
        expand_schedules(scenario, [("explicit", (0, 2))])


def test_run_scenario_distinct_outcomes():
    report = run_scenario(bundled_race_scenario("eutxo"))
    assert len(report.outcomes) == 2
    assert len(report.distinct()) == 2
    report2 = run_scenario(bundled_race_scenario("account"))
    assert len(report2.distinct()) == 2


def test_fuzz_reports_deterministic():
    a = fuzz_theorem("lemma15_1", seed=5, cases=100)
    b = fuzz_theorem("lemma15_1", seed=5, cases=100)
    assert a.to_text() == b.to_text()
    c = fuzz_theorem("lemma15_1", seed=6, cases=100)
    assert a.to_text() != c.to_text()  # different traffic


def test_fuzz_unknown_theorem():
    with pytest.raises(ValueError):
        fuzz_theorem("lemma99", seed=0, cases=1)


@pytest.mark.parametrize("which", ["lemma15_1", "lemma15_2", "theorem17", "prop19", "lemma21"])
def test_fuzz_proved_statements_smoke(which):
    report = fuzz_theorem(which, seed=2, cases=200)
    assert report.cases == 200
    assert report.passes == 200
    assert not report.counterexamples


def test_fuzz_remark18_finds_counterexamples():
    report = fuzz_theorem("remark18", seed=2, cases=50)
    assert report.counterexamples
    payload = dict(report.counterexamples[0].payload)
    assert set(payload) == {"base", "txs", "tx"}


def test_remark18_counterexamples_replay():
    """Serialized counterexamples parse back and still witness the failure."""
    from ledgersim import formats

    report = fuzz_theorem("remark18", seed=3, cases=5)
    payload = dict(report.counterexamples[0].payload)
    base = formats.parse_chain(payload["base"])
    txs, _ = formats.parse_transactions(payload["txs"])
    (tx,), _ = formats.parse_transactions(payload["tx"])
    assert remark18_fails({"base": base, "txs": txs, "tx": tx})


def test_intent_build_time():
    assert Intent.of("buyer", "buy", n=1).build_time == "at-submit"
    assert Intent.of("buyer", "call", function="buy", value=1).build_time == "at-execute"


def test_prebuilt_transaction_intent():
    from ledgersim.model import Output, Transaction, singleton, ADA
    from ledgersim.validators import ACCEPT_ALL

    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    extra = Transaction(frozenset(), frozenset({Output(900, ACCEPT_ALL, 0, singleton(ADA, 3))}))
    intents = (Intent.of("buyer", "tx", prebuilt=extra),)
    outcome = run_schedule(world, intents, (0,))
    assert outcome.statuses[0][0] == "accepted"


def test_rebuild_mode_retries_against_current_chain():
    """With rebuild on, a stale unguarded buy re-reads the new price; a
    guarded one still refuses."""
    scenario = bundled_race_scenario("eutxo")
    world = build_world(scenario)
    unguarded = (
        Intent.of("buyer", "buy", n=2),  # no max_price: willing to pay whatever
        Intent.of("issuer", "set_price", p=100),
    )
    outcome = run_schedule(world, unguarded, (1, 0), rebuild=True)
    assert outcome.statuses[0] == ("accepted", "rebuilt-at-execute")
    buyer = _holding(outcome, "buyer")
    assert buyer["1:1"] == 2 and buyer["ada_paid"] == 200  # price 100 at rebuild

    guarded = (
        Intent.of("buyer", "buy", n=2, max_price=1),
        Intent.of("issuer", "set_price", p=100),
    )
    outcome = run_schedule(build_world(scenario), guarded, (1, 0), rebuild=True)
    status, reason = outcome.statuses[0]
    assert status == "rejected" and reason.startswith("refused-at-rebuild")
    assert _holding(outcome, "buyer")["ada_paid"] == 0


def test_rebuild_off_by_default_matches_plain_run():
    scenario = bundled_race_scenario("eutxo")
    plain = run_schedule(build_world(scenario), scenario.intents, (1, 0))
    explicit = run_schedule(build_world(scenario), scenario.intents, (1, 0), rebuild=False)
    assert plain == explicit


def test_account_replay_log():
    from ledgersim.accounts import AccountChain, CallTx, call, deploy_changing, replay_calls

    initial = deploy_changing(AccountChain(), name=1, sender=1, supply=100, price=2)
    chain = initial
    for tx in (
        CallTx(1, "buy", sender=2, value=9),
        CallTx(1, "setPrice", sender=3, args=(5,)),  # guard-failed, still logged
        CallTx(1, "send", sender=2, args=(3, 1)),
    ):
        chain, _ = call(chain, tx)
    assert len(chain.calls) == 3
    assert replay_calls(initial, chain.calls) == chain


def test_minimize_instance_shrinks():
    """The greedy shrinker drops transactions irrelevant to the failure."""
    from ledgersim.ledger import append
    from ledgersim.model import Input, Output, SlotRange, Transaction, singleton, ADA
    from ledgersim.validators import ACCEPT_ALL

    def out(p):
        return Output(p, ACCEPT_ALL, 0, singleton(ADA, 1))

    base = append(Chain(), Transaction(frozenset(), frozenset({out(1), out(2)})), slot=0)
    base = append(base, Transaction(frozenset(), frozenset({out(3)})), slot=0)  # padding
    pinned = Transaction(frozenset({Input(1, 0)}), frozenset(), SlotRange(0, 0))
    late = Transaction(frozenset({Input(2, 0)}), frozenset(), SlotRange(5, None))
    instance = {"base": base, "txs": (pinned,), "tx": late}
    assert remark18_fails(instance)
    shrunk = minimize_instance(instance, remark18_fails)
    assert remark18_fails(shrunk)
    assert len(shrunk["base"]) < len(base)
