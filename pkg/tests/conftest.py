import itertools
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import pytest

from data_consortium.config import GenSpec, PipelineConfig
from data_consortium.domain import DataGrant, MemberDataset, MemberRecord, PriceSeries, SignalRecord
from data_consortium.game import GameHandle
from data_consortium.synthgen import ConsortiumGenerator

# Two spend periods: period 0 is entry-side, period 1 exit-side; the trade
# runs from period 1 (price 100) to period 2 (price 110).
RISING = PriceSeries(1, 2, {0: 100.0, 1: 100.0, 2: 110.0})
FALLING = PriceSeries(1, 2, {0: 100.0, 1: 100.0, 2: 95.0})


def make_dataset(spends: Iterable[Tuple[str, str, float, float]], target_shares: Optional[Dict[str, float]] = None,
                 prices: PriceSeries = RISING, grants: Optional[Dict[str, DataGrant]] = None) -> MemberDataset:
    """Build a dataset from (member_id, segment, entry_spend, exit_spend) rows."""
    members, records = [], []
    for member_id, segment, entry_spend, exit_spend in spends:
        grant = (grants or {}).get(member_id, DataGrant.full())
        members.append(MemberRecord(member_id, segment, False, grant))
        records.append(SignalRecord(member_id, 0, entry_spend, "Acme"))
        records.append(SignalRecord(member_id, 1, exit_spend, "Acme"))
    if target_shares is None:
        segments = sorted({row.segment for row in members})
        target_shares = {segment: 1.0 / len(segments) for segment in segments}
    return MemberDataset.from_raw(members, records, prices, target_shares)


def value_table(game: GameHandle) -> np.ndarray:
    return np.array([game.v(bits) for bits in range(1 << game.n)])


def shapley_by_orderings(game: GameHandle) -> Dict[str, float]:
    """Average marginal contribution over every ordering of the members."""
    table = value_table(game)
    totals = np.zeros(game.n)
    count = 0
    for order in itertools.permutations(range(game.n)):
        bits = 0
        for position in order:
            totals[position] += table[bits | 1 << position] - table[bits]
            bits |= 1 << position
        count += 1
    return {member_id: totals[i] / count for i, member_id in enumerate(game.member_ids)}


@pytest.fixture
def pipeline_config():
    return PipelineConfig()


@pytest.fixture
def four_carriers():
    """Four members in one segment, each growing spend 100 -> 150 (signal 0.5)."""
    return make_dataset([(f"c{i}", "all", 100.0, 150.0) for i in range(4)], {"all": 1.0})


@pytest.fixture
def seeded_dataset():
    spec = GenSpec(n_members=8, n_carriers=2, carrier_strength=0.5, noise_scale=0.2, seed=11)
    return ConsortiumGenerator(spec).generate()


@pytest.fixture
def seeded_game(seeded_dataset):
    return GameHandle.from_dataset(seeded_dataset)


@pytest.fixture
def planted():
    """Ten members, three planted carriers; returns (dataset, carrier ids)."""
    generator = ConsortiumGenerator(GenSpec(n_members=10, n_carriers=3, carrier_strength=0.5,
                                            noise_scale=0.1, seed=7))
    dataset = generator.generate()
    return dataset, generator.carriers
