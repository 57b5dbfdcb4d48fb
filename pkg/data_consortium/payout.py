"""
Turning member valuations into payments.

Policies:
  direct               pay each member its estimated value (may be negative)
  nonneg_proportional  split ``pot`` in proportion to positive values
  volume_blend         mix a volume share and the value share with weight ``alpha``
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence

from .config import PayoutPolicy
from .domain import MemberRecord
from .errors import PreconditionError
from .shapley import ValuationEstimate


@dataclass(frozen=True)
class SegmentValue:
    segment: str
    members: int
    consortium_share: float
    target_share: float
    total_value: float
    mean_value: float


def _check_coverage(estimates: Sequence[ValuationEstimate], members: Sequence[MemberRecord]):
    estimated = [estimate.member_id for estimate in estimates]
    known = [member.member_id for member in members]
    if len(set(estimated)) != len(estimated):
        raise PreconditionError("estimates list a member more than once")
    if set(estimated) != set(known):
        missing = sorted(set(known) - set(estimated))
        extra = sorted(set(estimated) - set(known))
        raise PreconditionError(f"estimates do not cover the member set (missing {missing}, unknown {extra})")


def value_shares(values: Mapping[str, float]) -> Dict[str, float]:
    """Shares of positive value; an equal split when no member has positive value."""
    positive = {member_id: max(value, 0.0) for member_id, value in values.items()}
    total = math.fsum(positive.values())
    if total <= 0:
        return {member_id: 1.0 / len(values) for member_id in values}
    return {member_id: amount / total for member_id, amount in positive.items()}


def volume_shares(members: Sequence[MemberRecord]) -> Dict[str, float]:
    total = sum(member.volume for member in members)
    if total <= 0:
        return {member.member_id: 1.0 / len(members) for member in members}
    return {member.member_id: member.volume / total for member in members}


def allocate(estimates: Sequence[ValuationEstimate], members: Sequence[MemberRecord],
             policy: PayoutPolicy) -> Dict[str, float]:
    _check_coverage(estimates, members)
    values = {estimate.member_id: estimate.value for estimate in sorted(estimates, key=lambda e: e.member_id)}
    if not values:
        return {}
    if policy.kind == "direct":
        return values

    shares = value_shares(values)
    if policy.kind == "nonneg_proportional":
        return {member_id: policy.pot * share for member_id, share in shares.items()}

    by_volume = volume_shares(members)
    return {
        member_id: policy.pot * (policy.alpha * by_volume[member_id] + (1.0 - policy.alpha) * shares[member_id])
        for member_id in values
    }


def segment_summary(estimates: Sequence[ValuationEstimate], members: Sequence[MemberRecord],
                    target_shares: Mapping[str, float]) -> List[SegmentValue]:
    """Value held by each demographic segment next to its consortium and target share."""
    _check_coverage(estimates, members)
    values = {estimate.member_id: estimate.value for estimate in estimates}
    segments = sorted(set(target_shares) | {member.segment for member in members})
    summary = []
    for segment in segments:
        group = [member.member_id for member in members if member.segment == segment]
        total = math.fsum(values[member_id] for member_id in group)
        summary.append(SegmentValue(
            segment=segment,
            members=len(group),
            consortium_share=len(group) / len(members) if members else 0.0,
            target_share=float(target_shares.get(segment, 0.0)),
            total_value=total,
            mean_value=total / len(group) if group else 0.0,
        ))
    return summary
