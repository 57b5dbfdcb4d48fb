"""
The characteristic function of the consortium game.

For a coalition S of members, run the investment process on S's data only:
normalize each member's spend signal, weight members into a panel matching
the target population, score, test significance, and realize the profit or
loss of the resulting trade. ``coalition_value`` is v(S).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

from .config import PipelineConfig
from .domain import MemberDataset, PriceSeries
from .errors import PreconditionError

# 1/sum(w^2) for equal weights can land a few ulps below the integer |S|.
N_EFF_TOLERANCE = 1e-9


class Action(Enum):
    NO_TRADE = "NoTrade"
    LONG = "Long"
    SHORT = "Short"


@dataclass(frozen=True)
class CoalitionMask:
    included: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "included", frozenset(self.included))

    @classmethod
    def of(cls, *member_ids: str) -> "CoalitionMask":
        return cls(frozenset(member_ids))

    @classmethod
    def grand(cls, dataset: MemberDataset) -> "CoalitionMask":
        return cls(frozenset(dataset.member_ids))

    def __len__(self):
        return len(self.included)

    def __contains__(self, member_id):
        return member_id in self.included

    def __iter__(self):
        return iter(sorted(self.included))


@dataclass(frozen=True)
class TradeDecision:
    action: Action
    z: float
    score: float


@dataclass(frozen=True)
class CoalitionValue:
    value: float
    decision: TradeDecision


@dataclass(frozen=True)
class CompanyTrend:
    company: str
    entry_spend: float
    exit_spend: float
    growth: float


NO_TRADE = TradeDecision(Action.NO_TRADE, 0.0, 0.0)


def _side_totals(dataset: MemberDataset, key) -> Dict[str, List[float]]:
    """Sum amounts per ``key(record)`` into [entry-side, exit-side] totals."""
    entry, exit_ = dataset.prices.entry_period, dataset.prices.exit_period
    totals: Dict[str, List[float]] = {}
    for record in dataset.records:
        bucket = totals.setdefault(key(record), [0.0, 0.0])
        if record.period is None or record.amount is None:
            continue
        if record.period < entry:
            bucket[0] += record.amount
        elif record.period < exit_:
            bucket[1] += record.amount
    return totals


def normalize_signals(dataset: MemberDataset, config: Optional[PipelineConfig] = None) -> Dict[str, float]:
    config = config or PipelineConfig()
    totals = _side_totals(dataset, lambda record: record.member_id)
    signals = {}
    for member_id in dataset.member_ids:
        entry_spend, exit_spend = totals.get(member_id, (0.0, 0.0))
        raw = (exit_spend - entry_spend) / max(entry_spend, config.eps)
        signals[member_id] = float(np.clip(raw, -config.clip, config.clip))
    return signals


def company_trends(dataset: MemberDataset, config: Optional[PipelineConfig] = None) -> List[CompanyTrend]:
    """Aggregate entry/exit spend per company across all members."""
    config = config or PipelineConfig()
    totals = _side_totals(dataset, lambda record: record.company or "")
    return [
        CompanyTrend(company, entry_spend, exit_spend, (exit_spend - entry_spend) / max(entry_spend, config.eps))
        for company, (entry_spend, exit_spend) in sorted(totals.items())
    ]


class CoalitionEvaluator:
    """Precomputed per-member inputs; evaluates coalitions given as sorted member indices."""

    def __init__(self, dataset: MemberDataset, config: Optional[PipelineConfig] = None):
        self.dataset = dataset
        self.config = config or PipelineConfig()
        self.member_ids = dataset.member_ids
        self.position = {member_id: i for i, member_id in enumerate(self.member_ids)}
        signals = normalize_signals(dataset, self.config)
        self.signals = np.array([signals[member_id] for member_id in self.member_ids])
        self.segments = [dataset.member(member_id).segment for member_id in self.member_ids]
        grouped = dataset.records_by_member()
        self.contributes = [bool(grouped.get(member_id)) for member_id in self.member_ids]
        self.target_shares = dataset.target_shares

    def indices(self, mask: CoalitionMask) -> List[int]:
        unknown = sorted(mask.included - set(self.position))
        if unknown:
            raise PreconditionError(f"coalition includes non-members {unknown}")
        return sorted(self.position[member_id] for member_id in mask.included)

    def contributors(self, indices: Sequence[int]) -> List[int]:
        """Members of the coalition with at least one record; the rest are as if absent."""
        return [i for i in indices if self.contributes[i]]

    def weights(self, indices: Sequence[int]) -> np.ndarray:
        if not indices:
            raise PreconditionError("panel weights need a coalition with at least one contributing member")
        segments = [self.segments[i] for i in indices]
        present = sorted(set(segments))
        missing = [segment for segment in present if segment not in self.target_shares]
        if missing:
            raise PreconditionError(f"segments {missing} have no target share")
        total_target = sum(self.target_shares[segment] for segment in present)
        size = len(indices)
        counts = {segment: segments.count(segment) for segment in present}
        raw = np.array([
            (self.target_shares[segment] / total_target) / (counts[segment] / size)
            for segment in segments
        ])
        return raw / raw.sum()

    def decide(self, indices: Sequence[int]) -> TradeDecision:
        indices = self.contributors(indices)
        if not indices:
            return NO_TRADE
        weights = self.weights(indices)
        signals = self.signals[list(indices)]
        score = float(np.dot(weights, signals))
        spread = float(np.sqrt(np.dot(weights, (signals - score) ** 2)))
        sigma = max(self.config.sigma_min, spread)
        n_eff = 1.0 / float(np.dot(weights, weights))
        z = score * np.sqrt(n_eff) / sigma
        if n_eff < self.config.n_min - N_EFF_TOLERANCE or abs(z) < self.config.tau:
            return TradeDecision(Action.NO_TRADE, float(z), score)
        action = Action.LONG if score > 0 else Action.SHORT
        return TradeDecision(action, float(z), score)

    def cannot_trade(self, indices: Sequence[int]) -> bool:
        """True when the coalition fails the sample-size gate whatever its signals are."""
        indices = self.contributors(indices)
        if not indices:
            return True
        weights = self.weights(indices)
        return 1.0 / float(np.dot(weights, weights)) < self.config.n_min - N_EFF_TOLERANCE

    def value(self, indices: Sequence[int]) -> CoalitionValue:
        decision = self.decide(indices)
        return CoalitionValue(realize_pnl(decision, self.dataset.prices, self.config), decision)


def panel_weights(dataset: MemberDataset, mask: CoalitionMask) -> Dict[str, float]:
    """Weights over the coalition; members without records get weight 0."""
    evaluator = CoalitionEvaluator(dataset)
    indices = evaluator.indices(mask)
    if not indices:
        raise PreconditionError("panel weights need a nonempty coalition")
    weighted = evaluator.contributors(indices)
    if not weighted:
        return {evaluator.member_ids[i]: 0.0 for i in indices}
    weights = dict(zip(weighted, evaluator.weights(weighted)))
    return {evaluator.member_ids[i]: float(weights.get(i, 0.0)) for i in indices}


def score(dataset: MemberDataset, mask: CoalitionMask, config: Optional[PipelineConfig] = None) -> float:
    evaluator = CoalitionEvaluator(dataset, config)
    indices = evaluator.indices(mask)
    if not indices:
        raise PreconditionError("score needs a nonempty coalition")
    weighted = evaluator.contributors(indices)
    if not weighted:
        return 0.0
    return float(np.dot(evaluator.weights(weighted), evaluator.signals[weighted]))


def decide(dataset: MemberDataset, mask: CoalitionMask, config: Optional[PipelineConfig] = None) -> TradeDecision:
    evaluator = CoalitionEvaluator(dataset, config)
    return evaluator.decide(evaluator.indices(mask))


def realize_pnl(decision: TradeDecision, prices: PriceSeries, config: Optional[PipelineConfig] = None) -> float:
    config = config or PipelineConfig()
    if decision.action is Action.NO_TRADE:
        return 0.0
    direction = 1.0 if decision.action is Action.LONG else -1.0
    return direction * config.capital * prices.relative_move


def coalition_value(dataset: MemberDataset, mask: CoalitionMask,
                    config: Optional[PipelineConfig] = None) -> CoalitionValue:
    evaluator = CoalitionEvaluator(dataset, config)
    return evaluator.value(evaluator.indices(mask))


def effective_sample_size(weights: Iterable[float]) -> float:
    weights = np.asarray(list(weights), dtype=float)
    return 1.0 / float(np.dot(weights, weights))
