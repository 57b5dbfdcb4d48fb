"""
CSV and text formats for consortium files.

Writers use a fixed column order, ``\\n`` line endings and ``repr`` floats,
so rerunning a command reproduces its files byte for byte.
"""

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .config import ConfigFile, PipelineConfig, load_config_file, write_config_file
from .domain import (
    DEFAULT_SOURCE,
    DataGrant,
    MemberDataset,
    MemberRecord,
    PriceSeries,
    SignalRecord,
)
from .errors import DataFileError
from .shapley import ValuationEstimate

MEMBERS_FILE = "members.csv"
SIGNALS_FILE = "signals.csv"
PRICES_FILE = "prices.csv"
CARRIERS_FILE = "carriers.txt"
CONFIG_FILE = "config.txt"

MEMBERS_HEADER = ["member_id", "segment", "insider", "sources", "fields"]
SIGNALS_HEADER = ["member_id", "period", "amount", "company"]
PRICES_HEADER = ["period", "price"]
REPORT_HEADER = ["member_id", "method", "value", "std_error", "samples", "evals"]
PAYOUT_HEADER = ["member_id", "payout"]


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _read_rows(path, required: Sequence[str]) -> List[Dict[str, str]]:
    path = Path(path)
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            missing = [name for name in required if name not in (reader.fieldnames or [])]
            if missing:
                raise DataFileError(path, f"missing columns {missing}")
            return list(reader)
    except OSError as exc:
        raise DataFileError(path, f"cannot read file ({exc.strerror})") from exc


def _float(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def _int(text: str) -> Optional[int]:
    return int(text) if text != "" else None


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _split(text: str) -> List[str]:
    return [part for part in text.split(";") if part]


def write_members(path, members: Iterable[MemberRecord]) -> Path:
    rows = (
        [m.member_id, m.segment, int(m.insider),
         ";".join(sorted(m.grant.allowed_sources)), ";".join(sorted(m.grant.allowed_fields))]
        for m in members
    )
    return _write_rows(path, MEMBERS_HEADER, rows)


def read_members(path) -> List[MemberRecord]:
    members = []
    for line, row in enumerate(_read_rows(path, MEMBERS_HEADER), start=2):
        if row["insider"] not in ("0", "1"):
            raise DataFileError(path, f"insider must be 0 or 1, got {row['insider']!r}", line=line)
        grant = DataGrant(frozenset(_split(row["sources"])), frozenset(_split(row["fields"])))
        members.append(MemberRecord(row["member_id"], row["segment"], row["insider"] == "1", grant))
    return members


def write_signals(path, records: Iterable[SignalRecord]) -> Path:
    records = list(records)
    with_source = any(record.source != DEFAULT_SOURCE for record in records)
    header = SIGNALS_HEADER + (["source"] if with_source else [])
    rows = []
    for r in records:
        row = [r.member_id, _cell(r.period), _cell(r.amount), _cell(r.company)]
        rows.append(row + [r.source] if with_source else row)
    return _write_rows(path, header, rows)


def read_signals(path) -> List[SignalRecord]:
    records = []
    for line, row in enumerate(_read_rows(path, SIGNALS_HEADER), start=2):
        try:
            records.append(SignalRecord(
                member_id=row["member_id"],
                period=_int(row["period"]),
                amount=_float(row["amount"]),
                company=row["company"] or None,
                source=row.get("source") or DEFAULT_SOURCE,
            ))
        except ValueError as exc:
            raise DataFileError(path, str(exc), line=line) from exc
    return records


def write_prices(path, prices: PriceSeries) -> Path:
    return _write_rows(path, PRICES_HEADER, ([period, repr(price)] for period, price in prices.prices.items()))


def read_prices(path, entry_period: int, exit_period: int) -> PriceSeries:
    prices = {}
    for line, row in enumerate(_read_rows(path, PRICES_HEADER), start=2):
        try:
            prices[int(row["period"])] = float(row["price"])
        except ValueError as exc:
            raise DataFileError(path, str(exc), line=line) from exc
    return PriceSeries(entry_period, exit_period, prices)


def write_carriers(path, member_ids: Iterable[str]) -> Path:
    path = Path(path)
    path.write_text("".join(f"{member_id}\n" for member_id in member_ids))
    return path


def read_carriers(path) -> List[str]:
    return [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]


def read_dataset(data_dir, config: Optional[ConfigFile] = None) -> MemberDataset:
    """Load a consortium directory; grant filters are applied and volumes recounted."""
    data_dir = Path(data_dir)
    if config is None:
        config = load_config_file(data_dir / CONFIG_FILE)
    entry_period, exit_period = config.window()
    members = read_members(data_dir / MEMBERS_FILE)
    records = read_signals(data_dir / SIGNALS_FILE)
    prices = read_prices(data_dir / PRICES_FILE, entry_period, exit_period)
    return MemberDataset.from_raw(members, records, prices, config.target_shares)


def write_dataset(data_dir, dataset: MemberDataset, pipeline: Optional[PipelineConfig] = None) -> List[Path]:
    """Write members, signals, prices and a config file that reads back as ``dataset``."""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    return [
        write_members(data_dir / MEMBERS_FILE, dataset.members),
        write_signals(data_dir / SIGNALS_FILE, dataset.records),
        write_prices(data_dir / PRICES_FILE, dataset.prices),
        write_config_file(data_dir / CONFIG_FILE, pipeline or PipelineConfig(), dataset.prices.entry_period,
                          dataset.prices.exit_period, dataset.target_shares),
    ]


def write_valuation_report(path, estimates) -> Path:
    rows = (
        [e.member_id, e.method, repr(float(e.value)), repr(float(e.std_error)), e.samples, e.evals]
        for e in estimates
    )
    return _write_rows(path, REPORT_HEADER, rows)


def read_valuation_report(path):
    estimates = []
    for line, row in enumerate(_read_rows(path, REPORT_HEADER), start=2):
        try:
            estimates.append(ValuationEstimate(
                member_id=row["member_id"],
                method=row["method"],
                value=float(row["value"]),
                std_error=float(row["std_error"]),
                samples=int(row["samples"]),
                evals=int(row["evals"]),
            ))
        except ValueError as exc:
            raise DataFileError(path, str(exc), line=line) from exc
    return estimates


def write_payouts(path, payouts: Dict[str, float]) -> Path:
    return _write_rows(path, PAYOUT_HEADER, ([mid, repr(float(amount))] for mid, amount in payouts.items()))
