"""
Command-line entry point: gen, value, payout, report, trends.

Exit codes: 0 success, 2 bad input or failed validation, 3 capacity.
Settings come from the flat config file in the data directory (or
``--config``); command-line flags override it.
"""

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from .config import (
    DEFAULT_SEGMENTS,
    METHOD_ALIASES,
    RUN_KEYS,
    GenSpec,
    PayoutPolicy,
    RunConfig,
    build,
    load_config_file,
)
from .domain import exclude_insiders, validate_dataset
from .errors import CapacityError, ConsortiumError, ConfigError
from .game import GameHandle
from .payout import allocate, segment_summary
from .pipeline import CoalitionMask, company_trends, coalition_value
from .shapley import clustered_shapley, exact_shapley, permutation_shapley, stratified_shapley
from .storage import CONFIG_FILE, read_dataset, read_valuation_report, write_payouts, write_valuation_report
from .synthgen import write_consortium

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3


def configure_logging(verbose: bool = False):
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO", format="{level}: {message}")


def parse_segments(text: str):
    shares = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError("segments", f"expected segment=share, got {item!r}")
        label, share = (part.strip() for part in item.split("=", 1))
        try:
            shares[label] = float(share)
        except ValueError as exc:
            raise ConfigError("segments", f"share for {label!r} is not a number") from exc
    return shares


def _load(args):
    config_path = Path(args.config) if args.config else Path(args.data) / CONFIG_FILE
    config = load_config_file(config_path)
    dataset = read_dataset(args.data, config)
    return config_path, config, dataset


def _validated(dataset) -> bool:
    violations = validate_dataset(dataset)
    for violation in violations:
        logger.error("{}", violation)
    return not violations


def cmd_gen(args) -> int:
    spec = build(
        GenSpec,
        n_members=args.members,
        n_periods=args.periods,
        n_carriers=args.carriers,
        carrier_strength=args.strength,
        noise_scale=args.noise,
        segments=parse_segments(args.segments) if args.segments else None,
        seed=args.seed,
        n_companies=args.companies,
        n_insiders=args.insiders,
    )
    for path in write_consortium(spec, args.out):
        print(path)
    return EXIT_OK


def _run_config(args, config_path, config) -> RunConfig:
    values = config.pick(RUN_KEYS)
    flags = {
        "seed": args.seed,
        "method": args.method,
        "samples": args.samples,
        "chains": args.chains,
        "k": args.k,
        "sample_per_cluster": args.sample_per_cluster,
        "use_bsearch": args.bsearch,
        "workers": args.workers,
    }
    merged = {key: value for key, value in values.items() if key in RunConfig.model_fields}
    merged.update({key: value for key, value in flags.items() if value is not None})
    if "method" in merged:
        merged["method"] = METHOD_ALIASES.get(merged["method"], merged["method"])
    return build(RunConfig, data_dir=Path(args.data), config_path=config_path, **merged)


def _estimate(run: RunConfig, game: GameHandle):
    if run.method == "exact":
        return exact_shapley(game)
    if run.method == "permutation":
        return permutation_shapley(game, run.samples, run.seed, run.workers)
    if run.method == "stratified":
        return stratified_shapley(game, run.chains, run.seed, run.use_bsearch, run.workers)
    return clustered_shapley(game, run.k, run.sample_per_cluster, run.chains, run.seed,
                             run.use_bsearch, run.workers)


def _write_segments(path, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["segment", "members", "consortium_share", "target_share", "total_value", "mean_value"])
        for row in rows:
            writer.writerow([row.segment, row.members, repr(row.consortium_share), repr(row.target_share),
                             repr(row.total_value), repr(row.mean_value)])


def _write_flips(path, histogram):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["removed", "chains"])
        writer.writerows(sorted(histogram.items()))


def cmd_value(args) -> int:
    config_path, config, dataset = _load(args)
    run = _run_config(args, config_path, config)
    if not _validated(dataset):
        return EXIT_INPUT
    dataset = exclude_insiders(dataset)
    game = GameHandle.from_dataset(dataset, config.pipeline())
    logger.info("valuing {} members with the {} method", game.n, run.method)

    report = _estimate(run, game)
    write_valuation_report(args.out, report.estimates)
    if args.segments_out:
        _write_segments(args.segments_out, segment_summary(report.estimates, dataset.members, dataset.target_shares))
    if args.flips_out:
        _write_flips(args.flips_out, report.flip_histogram)
    logger.info("{}", report.summary())
    return EXIT_OK


def cmd_payout(args) -> int:
    _, config, dataset = _load(args)
    values = config.pick(("policy", "pot", "alpha"))
    policy = build(
        PayoutPolicy,
        kind=args.policy if args.policy is not None else values.get("policy"),
        pot=args.pot if args.pot is not None else values.get("pot"),
        alpha=args.alpha if args.alpha is not None else values.get("alpha"),
    )
    members = exclude_insiders(dataset).members
    payouts = allocate(read_valuation_report(args.report), members, policy)
    write_payouts(args.out, payouts)
    logger.info("paid {} members under the {} policy, total {!r}", len(payouts), policy.kind, sum(payouts.values()))
    return EXIT_OK


def cmd_report(args) -> int:
    _, config, dataset = _load(args)
    if not _validated(dataset):
        return EXIT_INPUT
    dataset = exclude_insiders(dataset)
    result = coalition_value(dataset, CoalitionMask.grand(dataset), config.pipeline())
    print(json.dumps({
        "action": result.decision.action.value,
        "z": result.decision.z,
        "score": result.decision.score,
        "value": result.value,
    }))
    return EXIT_OK


def cmd_trends(args) -> int:
    _, config, dataset = _load(args)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["company", "entry_spend", "exit_spend", "growth"])
    for trend in company_trends(dataset, config.pipeline()):
        writer.writerow([trend.company, repr(trend.entry_spend), repr(trend.exit_spend), repr(trend.growth)])
    return EXIT_OK


def _data_arguments(parser):
    parser.add_argument("--data", type=str, required=True, help="Consortium data directory")
    parser.add_argument("--config", type=str, default=None, help="Config file (default: DATA/config.txt)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="value_consortium", description="Value consortium members' data")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generate a synthetic consortium")
    gen.add_argument("--members", type=int, default=8, help="Number of members")
    gen.add_argument("--periods", type=int, default=4, help="Number of spend periods")
    gen.add_argument("--carriers", type=int, default=2, help="Members carrying the planted signal")
    gen.add_argument("--strength", type=float, default=0.5, help="Carrier growth shift")
    gen.add_argument("--noise", type=float, default=0.1, help="Noise scale of member growth")
    gen.add_argument("--segments", type=str, default=None,
                     help="Target shares, e.g. " + ",".join(f"{k}={v}" for k, v in DEFAULT_SEGMENTS.items()))
    gen.add_argument("--companies", type=int, default=4, help="Number of companies on receipts")
    gen.add_argument("--insiders", type=int, default=0, help="Non-carrier members flagged as insiders")
    gen.add_argument("--seed", type=int, default=0, help="Random seed")
    gen.add_argument("--out", type=str, required=True, help="Output directory")
    gen.set_defaults(handler=cmd_gen)

    value = commands.add_parser("value", help="Estimate members' Shapley values")
    _data_arguments(value)
    value.add_argument("--method", type=str, default=None, help="exact, perm, strat or cluster")
    value.add_argument("--seed", type=int, default=None, help="Random seed (sampling methods)")
    value.add_argument("--samples", type=int, default=None, help="Permutations for perm")
    value.add_argument("--chains", type=int, default=None, help="Removal chains per member for strat/cluster")
    value.add_argument("--k", type=int, default=None, help="Clusters for cluster")
    value.add_argument("--sample-per-cluster", type=int, default=None, help="Members sampled per cluster")
    value.add_argument("--bsearch", action=argparse.BooleanOptionalAction, default=None,
                       help="Binary-search chain profiles (default on)")
    value.add_argument("--workers", type=int, default=None, help="Parallel workers; never changes output")
    value.add_argument("--out", type=str, required=True, help="Valuation report CSV")
    value.add_argument("--segments-out", type=str, default=None, help="Per-segment value CSV")
    value.add_argument("--flips-out", type=str, default=None, help="Flip histogram CSV")
    value.set_defaults(handler=cmd_value)

    payout = commands.add_parser("payout", help="Allocate payments from a valuation report")
    _data_arguments(payout)
    payout.add_argument("--report", type=str, required=True, help="Valuation report CSV")
    payout.add_argument("--policy", type=str, default=None, help="direct, nonneg_proportional or volume_blend")
    payout.add_argument("--pot", type=float, default=None, help="Amount to distribute")
    payout.add_argument("--alpha", type=float, default=None, help="Weight on volume share for volume_blend")
    payout.add_argument("--out", type=str, required=True, help="Payout CSV")
    payout.set_defaults(handler=cmd_payout)

    report = commands.add_parser("report", help="Grand-coalition decision and value as JSON")
    _data_arguments(report)
    report.set_defaults(handler=cmd_report)

    trends = commands.add_parser("trends", help="Per-company spend trends as CSV")
    _data_arguments(trends)
    trends.set_defaults(handler=cmd_trends)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except CapacityError as exc:
        logger.error("{}", exc)
        return EXIT_CAPACITY
    except (ConsortiumError, OSError) as exc:
        logger.error("{}", exc)
        return EXIT_INPUT
