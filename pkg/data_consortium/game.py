"""
GameHandle: the only interface estimators have to the characteristic function.

Coalitions are bitmasks over the sorted member list (bit i = i-th member).
Values are memoized per bitmask; ``eval_count`` counts every query for a
nonempty coalition whether or not it hits the cache, and ``pipeline_runs``
counts actual evaluations. v(empty) is 0 by definition and is never counted.
A game built from a dataset also carries a null certificate: the sample-size
gate, which tells a NoTrade coalition apart without a query.
"""

from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence

from .config import PipelineConfig
from .domain import MemberDataset
from .pipeline import NO_TRADE, Action, CoalitionEvaluator, CoalitionMask, CoalitionValue, TradeDecision

EMPTY_VALUE = CoalitionValue(0.0, NO_TRADE)


class GameHandle:
    def __init__(self, member_ids: Sequence[str], characteristic: Callable[[List[int]], CoalitionValue],
                 dataset: Optional[MemberDataset] = None, config: Optional[PipelineConfig] = None,
                 use_cache: bool = True, null_certificate: Optional[Callable[[List[int]], bool]] = None,
                 single_ascent: bool = False):
        self.member_ids = sorted(member_ids)
        self.n = len(self.member_ids)
        self.position = {member_id: i for i, member_id in enumerate(self.member_ids)}
        self.characteristic = characteristic
        self.dataset = dataset
        self.config = config
        self.use_cache = use_cache
        self.null_certificate = null_certificate
        self.single_ascent = single_ascent
        self.cache: Dict[int, CoalitionValue] = {}
        self.eval_count = 0
        self.pipeline_runs = 0

    @classmethod
    def from_dataset(cls, dataset: MemberDataset, config: Optional[PipelineConfig] = None,
                     use_cache: bool = True) -> "GameHandle":
        evaluator = CoalitionEvaluator(dataset, config)
        return cls(evaluator.member_ids, evaluator.value, dataset, evaluator.config, use_cache,
                   null_certificate=evaluator.cannot_trade)

    @classmethod
    def from_values(cls, member_ids: Sequence[str], value: Callable[[FrozenSet[str]], float],
                    use_cache: bool = True, single_ascent: bool = False) -> "GameHandle":
        """Wrap a plain set function; the outcome of a coalition is its value's sign.

        ``single_ascent`` promises that along any removal chain each member's
        outcome difference switches on at most once and then stays on.
        """
        ordered = sorted(member_ids)

        def characteristic(indices: List[int]) -> CoalitionValue:
            v = float(value(frozenset(ordered[i] for i in indices)))
            action = Action.LONG if v > 0 else Action.SHORT if v < 0 else Action.NO_TRADE
            return CoalitionValue(v, TradeDecision(action, v, v))

        return cls(ordered, characteristic, use_cache=use_cache, single_ascent=single_ascent)

    @property
    def full_bits(self) -> int:
        return (1 << self.n) - 1

    def bits(self, member_ids: Iterable[str]) -> int:
        bits = 0
        for member_id in member_ids:
            bits |= 1 << self.position[member_id]
        return bits

    def members_of(self, bits: int) -> List[str]:
        return [self.member_ids[i] for i in range(self.n) if bits >> i & 1]

    def value_bits(self, bits: int) -> CoalitionValue:
        if bits == 0:
            return EMPTY_VALUE
        self.eval_count += 1
        cached = self.cache.get(bits) if self.use_cache else None
        if cached is not None:
            return cached
        result = self.characteristic([i for i in range(self.n) if bits >> i & 1])
        self.pipeline_runs += 1
        if self.use_cache:
            self.cache[bits] = result
        return result

    def certainly_null(self, bits: int) -> bool:
        """True when the coalition is known to be NoTrade without running it; not a query."""
        if bits == 0:
            return True
        if self.null_certificate is None:
            return False
        return self.null_certificate([i for i in range(self.n) if bits >> i & 1])

    def value(self, mask) -> CoalitionValue:
        included = mask.included if isinstance(mask, CoalitionMask) else mask
        return self.value_bits(self.bits(included))

    def v(self, bits: int) -> float:
        return self.value_bits(bits).value

    def reset_counters(self):
        self.eval_count = 0
        self.pipeline_runs = 0


def outcomes_differ(a: CoalitionValue, b: CoalitionValue) -> bool:
    return a.decision.action is not b.decision.action or a.value != b.value
