#!/usr/bin/env python3
"""
Data consortium valuation: generate a synthetic consortium, value each
member's data for a trading decision, and turn the values into payouts.

    python value_consortium.py gen --members 8 --carriers 2 --seed 7 --out ./data/consortium
    python value_consortium.py value --data ./data/consortium --method strat --chains 2000 --seed 42 --out report.csv
    python value_consortium.py payout --data ./data/consortium --report report.csv --policy direct --out payouts.csv
    python value_consortium.py report --data ./data/consortium
"""

import sys

from data_consortium.cli import main

if __name__ == "__main__":
    sys.exit(main())
