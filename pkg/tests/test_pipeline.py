import itertools
import random
from dataclasses import replace

import numpy as np
import pytest

from data_consortium.config import PipelineConfig
from data_consortium.domain import DataGrant, SignalRecord
from data_consortium.errors import PreconditionError
from data_consortium.game import GameHandle
from data_consortium.pipeline import (
    NO_TRADE,
    Action,
    CoalitionMask,
    TradeDecision,
    coalition_value,
    company_trends,
    decide,
    effective_sample_size,
    normalize_signals,
    panel_weights,
    realize_pnl,
    score,
)

from .conftest import RISING, make_dataset


def test_signal_is_relative_spend_growth():
    dataset = make_dataset([("m1", "a", 100.0, 110.0)])
    assert normalize_signals(dataset)["m1"] == pytest.approx(0.10)


def test_member_without_records_has_zero_signal():
    dataset = make_dataset([("m1", "a", 100.0, 110.0), ("m2", "a", 80.0, 60.0)],
                           grants={"m2": DataGrant()})
    assert normalize_signals(dataset)["m2"] == 0.0


def test_signal_is_clipped():
    dataset = make_dataset([("m1", "a", 10.0, 40.0)])
    assert normalize_signals(dataset, PipelineConfig(clip=1.0))["m1"] == 1.0


def test_nulled_amount_counts_as_zero():
    dataset = make_dataset([("m1", "a", 100.0, 110.0)])
    nulled = replace(dataset, records=(dataset.records[0], replace(dataset.records[1], amount=None)))
    assert normalize_signals(nulled)["m1"] == pytest.approx(-1.0)


def test_single_segment_weights_are_uniform():
    dataset = make_dataset([(f"m{i}", "a", 100.0, 100.0 + i) for i in range(5)])
    weights = panel_weights(dataset, CoalitionMask.of("m0", "m2", "m4"))

    assert weights == pytest.approx({"m0": 1 / 3, "m2": 1 / 3, "m4": 1 / 3})


def test_two_member_weights_match_targets():
    dataset = make_dataset([("a", "X", 100.0, 110.0), ("b", "Y", 100.0, 110.0)], {"X": 0.75, "Y": 0.25})
    assert panel_weights(dataset, CoalitionMask.of("a", "b")) == pytest.approx({"a": 0.75, "b": 0.25})


def test_weights_replay_formula_with_absent_segment():
    shares = {"X": 0.5, "Y": 0.3, "Z": 0.2}
    rows = [("m1", "X", 1, 1), ("m2", "X", 1, 1), ("m3", "X", 1, 1), ("m4", "Y", 1, 1),
            ("m5", "Y", 1, 1), ("m6", "Z", 1, 1), ("m7", "Z", 1, 1), ("m8", "X", 1, 1)]
    dataset = make_dataset([(m, s, 100.0, 100.0) for m, s, _, _ in rows], shares)
    coalition = ["m1", "m2", "m4", "m8", "m5"]
    segment = {m: s for m, s, _, _ in rows}

    present = {segment[m] for m in coalition}
    renormalized = {g: shares[g] / sum(shares[h] for h in present) for g in present}
    within = {g: sum(segment[m] == g for m in coalition) / len(coalition) for g in present}
    raw = {m: renormalized[segment[m]] / within[segment[m]] for m in coalition}
    expected = {m: u / sum(raw.values()) for m, u in raw.items()}

    weights = panel_weights(dataset, CoalitionMask.of(*coalition))

    assert weights == pytest.approx(expected, abs=1e-12)
    assert sum(weights.values()) == pytest.approx(1.0, abs=1e-12)


def test_empty_coalition_has_no_weights_or_score():
    dataset = make_dataset([("m1", "a", 100.0, 110.0)])
    with pytest.raises(PreconditionError):
        panel_weights(dataset, CoalitionMask.of())
    with pytest.raises(PreconditionError):
        score(dataset, CoalitionMask.of(), PipelineConfig())


def test_non_member_in_mask_is_rejected():
    dataset = make_dataset([("m1", "a", 100.0, 110.0)])
    with pytest.raises(PreconditionError):
        decide(dataset, CoalitionMask.of("m1", "ghost"))


@pytest.mark.parametrize("spends, coalition, expected", [
    ([("m1", 100.0, 100.0), ("m2", 50.0, 50.0)], ("m1", "m2"), 0.0),
    ([("m1", 100.0, 120.0), ("m2", 50.0, 0.0)], ("m1",), 0.2),
    ([("m1", 100.0, 110.0), ("m2", 100.0, 130.0)], ("m1", "m2"), 0.2),
])
def test_score_is_weighted_mean(spends, coalition, expected):
    dataset = make_dataset([(m, "a", e, x) for m, e, x in spends])
    assert score(dataset, CoalitionMask.of(*coalition), PipelineConfig()) == pytest.approx(expected)


def test_empty_coalition_does_not_trade(four_carriers):
    assert decide(four_carriers, CoalitionMask.of()) == NO_TRADE


def test_four_carriers_trade_long(four_carriers):
    decision = decide(four_carriers, CoalitionMask.grand(four_carriers))

    assert decision.action is Action.LONG
    assert decision.score == pytest.approx(0.5)
    assert decision.z == pytest.approx(20.0)


def test_two_members_fall_below_minimum_sample(four_carriers):
    decision = decide(four_carriers, CoalitionMask.of("c0", "c1"))
    assert decision.action is Action.NO_TRADE


def test_falling_signal_trades_short():
    dataset = make_dataset([(f"m{i}", "a", 100.0, 60.0) for i in range(4)])
    assert decide(dataset, CoalitionMask.grand(dataset)).action is Action.SHORT


@pytest.mark.parametrize("action, expected", [
    (Action.NO_TRADE, 0.0),
    (Action.LONG, 0.10),
    (Action.SHORT, -0.10),
])
def test_realized_pnl(action, expected):
    decision = TradeDecision(action, 5.0, 0.3)
    assert realize_pnl(decision, RISING, PipelineConfig(capital=1.0)) == pytest.approx(expected)


def test_pnl_scales_with_capital():
    decision = TradeDecision(Action.LONG, 5.0, 0.3)
    assert realize_pnl(decision, RISING, PipelineConfig(capital=250.0)) == pytest.approx(25.0)


def test_empty_coalition_value_is_zero(four_carriers):
    assert coalition_value(four_carriers, CoalitionMask.of()).value == 0.0


def test_grand_coalition_of_carriers(four_carriers):
    result = coalition_value(four_carriers, CoalitionMask.grand(four_carriers))

    assert result.decision.action is Action.LONG
    assert result.value == pytest.approx(0.10)


def test_value_ignores_row_order(seeded_dataset):
    rng = random.Random(3)
    members, records = list(seeded_dataset.members), list(seeded_dataset.records)
    rng.shuffle(members)
    rng.shuffle(records)
    shuffled = replace(seeded_dataset, members=tuple(members), records=tuple(records))

    ids = seeded_dataset.member_ids
    for size in range(len(ids) + 1):
        for coalition in itertools.combinations(ids, size):
            mask = CoalitionMask.of(*coalition)
            assert coalition_value(shuffled, mask) == coalition_value(seeded_dataset, mask)


def test_no_trade_is_worth_exactly_zero(seeded_game):
    for bits in range(1, 1 << seeded_game.n):
        result = seeded_game.value_bits(bits)
        if result.decision.action is Action.NO_TRADE:
            assert result.value == 0.0


def test_equal_decisions_have_equal_values(seeded_game):
    values_by_action = {}
    for bits in range(1, 1 << seeded_game.n):
        result = seeded_game.value_bits(bits)
        values_by_action.setdefault(result.decision.action, set()).add(result.value)

    assert all(len(values) == 1 for values in values_by_action.values())


def test_effective_sample_size_bounds(seeded_dataset):
    ids = seeded_dataset.member_ids
    for size in range(1, len(ids) + 1):
        weights = panel_weights(seeded_dataset, CoalitionMask.of(*ids[:size]))
        n_eff = effective_sample_size(weights.values())
        equal = np.allclose(list(weights.values()), 1.0 / size)
        assert n_eff <= size + 1e-9
        assert (abs(n_eff - size) < 1e-9) == equal


def test_more_data_never_loses_significance():
    dataset = make_dataset([(f"m{i}", "a", 100.0, 120.0) for i in range(8)])
    ids = dataset.member_ids
    decisions = [decide(dataset, CoalitionMask.of(*ids[:size])) for size in range(3, 9)]

    assert [d.z for d in decisions] == sorted(d.z for d in decisions)
    assert all(d.action is Action.LONG for d in decisions)


def test_company_trends_aggregate_spend():
    dataset = make_dataset([("m1", "a", 100.0, 110.0), ("m2", "a", 50.0, 70.0)])
    extra = (SignalRecord("m1", 1, 30.0, None),)
    dataset = replace(dataset, records=dataset.records + extra,
                      members=(replace(dataset.members[0], volume=3), dataset.members[1]))

    trends = {t.company: t for t in company_trends(dataset)}

    assert trends["Acme"].entry_spend == pytest.approx(150.0)
    assert trends["Acme"].exit_spend == pytest.approx(180.0)
    assert trends["Acme"].growth == pytest.approx(0.2)
    assert trends[""].entry_spend == 0.0
    assert trends[""].growth == pytest.approx(30.0)


def test_members_without_data_do_not_move_the_decision():
    grants = {"ghost": DataGrant()}
    rows = [(f"c{i}", "all", 100.0, 150.0) for i in range(4)] + [("ghost", "all", 100.0, 50.0)]
    dataset = make_dataset(rows, {"all": 1.0}, grants=grants)
    game = GameHandle.from_dataset(dataset)

    ghost = 1 << game.position["ghost"]
    for bits in range(1 << game.n):
        if not bits & ghost:
            assert game.value_bits(bits | ghost) == game.value_bits(bits)


def test_coalition_without_records_has_zero_weights_and_score():
    grants = {"g1": DataGrant(), "g2": DataGrant()}
    dataset = make_dataset([("m1", "a", 100.0, 110.0), ("g1", "a", 100.0, 120.0), ("g2", "b", 100.0, 90.0)],
                           grants=grants)
    mask = CoalitionMask.of("g1", "g2")

    assert panel_weights(dataset, mask) == {"g1": 0.0, "g2": 0.0}
    assert score(dataset, mask) == 0.0
    assert decide(dataset, mask) == NO_TRADE
    assert panel_weights(dataset, CoalitionMask.of("m1", "g1")) == {"m1": 1.0, "g1": 0.0}
