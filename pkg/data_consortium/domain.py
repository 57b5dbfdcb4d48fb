"""
Consortium domain types and the screening steps every valuation starts from:
grant filtering, insider exclusion and dataset validation.

All types are frozen; operations return new objects and never mutate input.
A field a member's grant withholds is nulled (None) rather than the record
being dropped, so volume counts records contributed, not fields.
"""

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .config import SHARE_TOLERANCE
from .errors import RecordRejected

DEFAULT_SOURCE = "receipts"
GRANT_FIELDS = ("amount", "company", "period")


@dataclass(frozen=True)
class DataGrant:
    allowed_sources: FrozenSet[str] = frozenset()
    allowed_fields: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "allowed_sources", frozenset(self.allowed_sources))
        object.__setattr__(self, "allowed_fields", frozenset(self.allowed_fields))

    @classmethod
    def full(cls, sources: Iterable[str] = (DEFAULT_SOURCE,)) -> "DataGrant":
        return cls(frozenset(sources), frozenset(GRANT_FIELDS))


@dataclass(frozen=True)
class MemberRecord:
    member_id: str
    segment: str
    insider: bool = False
    grant: DataGrant = field(default_factory=DataGrant.full)
    volume: int = 0


@dataclass(frozen=True)
class SignalRecord:
    member_id: str
    period: Optional[int]
    amount: Optional[float]
    company: Optional[str]
    source: str = DEFAULT_SOURCE


@dataclass(frozen=True)
class PriceSeries:
    entry_period: int
    exit_period: int
    prices: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "prices", dict(sorted(self.prices.items())))

    @property
    def entry_price(self) -> float:
        return self.prices[self.entry_period]

    @property
    def exit_price(self) -> float:
        return self.prices[self.exit_period]

    @property
    def relative_move(self) -> float:
        return (self.exit_price - self.entry_price) / self.entry_price


@dataclass(frozen=True)
class MemberDataset:
    members: Tuple[MemberRecord, ...]
    records: Tuple[SignalRecord, ...]
    prices: PriceSeries
    target_shares: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "target_shares", dict(self.target_shares))

    @classmethod
    def from_raw(cls, members: Iterable[MemberRecord], raw_records: Iterable[SignalRecord],
                 prices: PriceSeries, target_shares: Mapping[str, float]) -> "MemberDataset":
        """Filter raw records through each member's grant and recount volumes."""
        members = list(members)
        records = apply_grant_filters(list(raw_records), members)
        return cls(tuple(recount_volumes(members, records)), tuple(records), prices, target_shares)

    @property
    def member_ids(self) -> List[str]:
        return sorted(member.member_id for member in self.members)

    def member(self, member_id: str) -> MemberRecord:
        for member in self.members:
            if member.member_id == member_id:
                return member
        raise KeyError(member_id)

    def records_by_member(self) -> Dict[str, List[SignalRecord]]:
        grouped: Dict[str, List[SignalRecord]] = {member.member_id: [] for member in self.members}
        for record in self.records:
            grouped.setdefault(record.member_id, []).append(record)
        return grouped


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self):
        return f"{self.code}: {self.detail}"


def _filter_record(record: SignalRecord, grant: DataGrant) -> Optional[SignalRecord]:
    if record.source not in grant.allowed_sources:
        return None
    withheld = {name: None for name in GRANT_FIELDS if name not in grant.allowed_fields}
    return replace(record, **withheld) if withheld else record


def apply_grant_filters(raw_records: List[SignalRecord], members: List[MemberRecord]) -> List[SignalRecord]:
    grants = {member.member_id: member.grant for member in members}
    filtered = []
    for record in raw_records:
        if record.member_id not in grants:
            raise RecordRejected(record, f"record references unknown member {record.member_id!r}")
        kept = _filter_record(record, grants[record.member_id])
        if kept is not None:
            filtered.append(kept)
    return filtered


def recount_volumes(members: List[MemberRecord], records: Iterable[SignalRecord]) -> List[MemberRecord]:
    counts = Counter(record.member_id for record in records)
    return [replace(member, volume=counts.get(member.member_id, 0)) for member in members]


def exclude_insiders(dataset: MemberDataset) -> MemberDataset:
    insiders = {member.member_id for member in dataset.members if member.insider}
    if not insiders:
        return dataset
    return replace(
        dataset,
        members=tuple(member for member in dataset.members if member.member_id not in insiders),
        records=tuple(record for record in dataset.records if record.member_id not in insiders),
    )


def _member_violations(dataset: MemberDataset) -> List[Violation]:
    violations = []
    counts = Counter(record.member_id for record in dataset.records)
    seen = set()
    for member in dataset.members:
        mid = member.member_id
        if mid in seen:
            violations.append(Violation("DUPLICATE_MEMBER", f"member {mid!r} appears more than once"))
        seen.add(mid)
        grant = member.grant
        if grant.allowed_sources and not grant.allowed_fields:
            violations.append(Violation("GRANT_FIELDS_EMPTY", f"member {mid!r} allows sources but no fields"))
        unknown = sorted(grant.allowed_fields - set(GRANT_FIELDS))
        if unknown:
            violations.append(Violation("UNKNOWN_FIELD", f"member {mid!r} grants unknown fields {unknown}"))
        if member.segment not in dataset.target_shares:
            violations.append(Violation("UNKNOWN_SEGMENT", f"member {mid!r} has segment {member.segment!r} without a target share"))
        if member.volume < 0 or member.volume != counts.get(mid, 0):
            violations.append(Violation(
                "VOLUME_MISMATCH", f"member {mid!r} declares volume {member.volume}, has {counts.get(mid, 0)} records"))
    return violations


def _record_violations(dataset: MemberDataset) -> List[Violation]:
    violations = []
    known = {member.member_id for member in dataset.members}
    for index, record in enumerate(dataset.records):
        if record.member_id not in known:
            violations.append(Violation("ORPHAN_RECORD", f"record {index} references absent member {record.member_id!r}"))
        if record.period is not None and not 0 <= record.period < dataset.prices.exit_period:
            violations.append(Violation(
                "PERIOD_RANGE", f"record {index} has period {record.period} outside [0, {dataset.prices.exit_period})"))
        if record.amount is not None and record.amount < 0:
            violations.append(Violation("NEGATIVE_AMOUNT", f"record {index} has amount {record.amount!r}"))
    return violations


def _price_violations(prices: PriceSeries) -> List[Violation]:
    violations = []
    if prices.entry_period >= prices.exit_period:
        violations.append(Violation(
            "PRICE_WINDOW", f"entry_period {prices.entry_period} is not before exit_period {prices.exit_period}"))
    for period in (prices.entry_period, prices.exit_period):
        if period not in prices.prices:
            violations.append(Violation("PRICE_MISSING", f"no price at period {period}"))
    for period, price in prices.prices.items():
        if not price > 0:
            violations.append(Violation("PRICE_NONPOSITIVE", f"price {price!r} at period {period}"))
    return violations


def _share_violations(target_shares: Mapping[str, float]) -> List[Violation]:
    violations = []
    for segment, share in sorted(target_shares.items()):
        if not 0.0 < share <= 1.0:
            violations.append(Violation("TARGET_SHARE_RANGE", f"segment {segment!r} share {share!r} outside (0, 1]"))
    total = sum(target_shares.values())
    if abs(total - 1.0) > SHARE_TOLERANCE:
        violations.append(Violation("TARGET_SHARES_SUM", f"target shares sum to {total!r}"))
    return violations


def validate_dataset(dataset: MemberDataset) -> List[Violation]:
    return (
        _member_violations(dataset)
        + _record_violations(dataset)
        + _price_violations(dataset.prices)
        + _share_violations(dataset.target_shares)
    )
