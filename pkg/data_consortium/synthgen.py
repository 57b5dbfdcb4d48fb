"""
Deterministic synthetic consortium generator.

A chosen set of "carrier" members has its period-over-period spend growth
shifted by ``carrier_strength``; everyone else draws zero-mean noise. The
price series rises between entry and exit, so carriers point the right way.
Random draws come from numpy's PCG64 seeded through SeedSequence, and
company names from a seeded Faker instance, so a GenSpec fully determines
the output.
"""

from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from faker import Faker
from loguru import logger

from .config import GenSpec, PipelineConfig
from .domain import DataGrant, MemberDataset, MemberRecord, PriceSeries, SignalRecord
from .sampling import GENERATOR_STREAM
from .storage import CARRIERS_FILE, write_carriers, write_dataset

BASE_PRICE = 100.0
PRICE_RISE = 0.10
MIN_BASELINE = 50
MAX_BASELINE = 150


def apportion(n: int, shares: Dict[str, float]) -> Dict[str, int]:
    """Largest-remainder apportionment of ``n`` seats over ``shares`` (ties by label)."""
    labels = sorted(shares)
    quotas = {label: n * shares[label] for label in labels}
    counts = {label: int(np.floor(quotas[label])) for label in labels}
    remaining = n - sum(counts.values())
    by_remainder = sorted(labels, key=lambda label: (-(quotas[label] - counts[label]), label))
    for label in by_remainder[:remaining]:
        counts[label] += 1
    return counts


class ConsortiumGenerator:
    def __init__(self, spec: GenSpec):
        self.spec = spec
        self.rng = np.random.default_rng(np.random.SeedSequence([spec.seed, GENERATOR_STREAM]))
        self.fake = Faker()
        self.fake.seed_instance(spec.seed)
        width = max(3, len(str(spec.n_members)))
        self.member_ids = [f"m{i + 1:0{width}d}" for i in range(spec.n_members)]
        self.carriers: List[str] = []
        self.entry_period = spec.n_periods // 2
        self.exit_period = 2 * self.entry_period

    def _company_names(self) -> List[str]:
        names: List[str] = []
        attempts = 0
        while len(names) < self.spec.n_companies:
            name = self.fake.company()
            attempts += 1
            if name in names:
                if attempts > 10 * self.spec.n_companies:
                    name = f"{name} {len(names)}"
                else:
                    continue
            names.append(name)
        return names

    def _segments(self) -> List[str]:
        counts = apportion(self.spec.n_members, self.spec.segments)
        labels = [label for label in sorted(counts) for _ in range(counts[label])]
        return [labels[i] for i in self.rng.permutation(len(labels))]

    def _prices(self) -> PriceSeries:
        prices = {}
        span = self.exit_period - self.entry_period
        for period in range(self.exit_period + 1):
            rise = max(0, period - self.entry_period) / span
            prices[period] = BASE_PRICE * (1.0 + PRICE_RISE * rise)
        return PriceSeries(self.entry_period, self.exit_period, prices)

    def generate(self) -> MemberDataset:
        spec = self.spec
        n = spec.n_members
        segments = self._segments()
        carrier_idx = sorted(int(i) for i in self.rng.choice(n, size=spec.n_carriers, replace=False))
        others = [i for i in range(n) if i not in set(carrier_idx)]
        insider_idx = {int(i) for i in self.rng.choice(others, size=spec.n_insiders, replace=False)} if spec.n_insiders else set()
        self.carriers = [self.member_ids[i] for i in carrier_idx]

        companies = self._company_names()
        baselines = self.rng.integers(MIN_BASELINE, MAX_BASELINE + 1, size=n)
        noise = self.rng.standard_normal(n)
        is_carrier = np.zeros(n)
        is_carrier[carrier_idx] = 1.0
        growth = spec.carrier_strength * is_carrier + spec.noise_scale * noise

        members = []
        records = []
        for i, member_id in enumerate(self.member_ids):
            members.append(MemberRecord(member_id, segments[i], i in insider_idx, DataGrant.full()))
            picks = self.rng.integers(len(companies), size=self.exit_period)
            for period in range(self.exit_period):
                if period < self.entry_period:
                    amount = float(baselines[i])
                else:
                    amount = max(0.0, round(float(baselines[i]) * (1.0 + float(growth[i])), 2))
                records.append(SignalRecord(member_id, period, amount, companies[picks[period]]))

        dataset = MemberDataset.from_raw(members, records, self._prices(), spec.segments)
        logger.debug("generated {} members ({} carriers, {} insiders), {} records",
                     n, len(self.carriers), len(insider_idx), len(dataset.records))
        return dataset


def generate(spec: GenSpec) -> MemberDataset:
    return ConsortiumGenerator(spec).generate()


def write_consortium(spec: GenSpec, output_dir, pipeline: Optional[PipelineConfig] = None) -> List[Path]:
    """Generate and write members, signals, prices, carriers and a config snippet."""
    output_dir = Path(output_dir)
    generator = ConsortiumGenerator(spec)
    dataset = generator.generate()

    files = write_dataset(output_dir, dataset, pipeline)
    files.append(write_carriers(output_dir / CARRIERS_FILE, generator.carriers))
    logger.info("wrote consortium of {} members to {}", spec.n_members, output_dir)
    return files
