#!/usr/bin/env python3
"""
Quick demo: generate a consortium, value its members two ways, pay them out.
"""

from pathlib import Path

from data_consortium import GameHandle, GenSpec, PayoutPolicy, exact_shapley, stratified_shapley
from data_consortium.domain import exclude_insiders
from data_consortium.payout import allocate
from data_consortium.storage import read_carriers, read_dataset
from data_consortium.synthgen import write_consortium


def main():
    print("=" * 60)
    print("Data Consortium Valuation Demo")
    print("=" * 60)

    print("\n1. Generating an 8-member consortium (2 signal carriers, 1 insider)...")
    spec = GenSpec(n_members=8, n_carriers=2, n_insiders=1, seed=42)
    write_consortium(spec, "./demo_output")

    data_dir = Path("./demo_output")
    dataset = exclude_insiders(read_dataset(data_dir))
    carriers = set(read_carriers(data_dir / "carriers.txt"))
    print(f"   {len(dataset.members)} members after insider exclusion, carriers: {sorted(carriers)}")

    print("\n2. Exact Shapley values vs. stratified estimates (500 chains):")
    game = GameHandle.from_dataset(dataset)
    exact = exact_shapley(game)
    estimated = stratified_shapley(game, n_chains=500, seed=42).values()
    for estimate in exact.estimates:
        tag = " (carrier)" if estimate.member_id in carriers else ""
        print(f"   - {estimate.member_id}: exact {estimate.value:+.4f}  "
              f"stratified {estimated[estimate.member_id]:+.4f}{tag}")
    print(f"   Grand coalition value: {exact.grand_value:+.4f}, exact queries: {exact.evals}")

    print("\n3. Paying out a pot of 100 (volume_blend, alpha=0.5):")
    payouts = allocate(exact.estimates, dataset.members, PayoutPolicy(kind="volume_blend", pot=100.0))
    for member_id, amount in payouts.items():
        print(f"   - {member_id}: {amount:.2f}")

    print("\n✓ Demo complete!")
    print(f"  Check ./demo_output/ for generated files")


if __name__ == "__main__":
    main()
