"""Document and verify a local copy of the BANKEX closing-price data.

The ten daily series are not redistributed here. Export them yourself from a
market data provider (daily OHLC, 2005-07-12 to 2017-11-03, one CSV per symbol
named ``<SYMBOL>.csv`` with ``Date`` and ``Close`` columns), then run

    python3 scripts/bankex.py verify DIR

to check every file parses, keep the last 3032 closes, and print SHA-256
digests of the raw files and of the truncated close vectors. Record those
digests alongside any results so others can confirm they hold the same data.
"""
import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from rnnforecast.dataprep import load_csv, truncate_tail
from rnnforecast.errors import RnnForecastError

SYMBOLS = (
    ("Axis Bank", "AXISBANK.BO"),
    ("Bank of Baroda", "BANKBARODA.BO"),
    ("Federal Bank", "FEDERALBNK.BO"),
    ("HDFC Bank", "HDFCBANK.BO"),
    ("ICICI Bank", "ICICIBANK.BO"),
    ("IndusInd Bank", "INDUSINDBK.BO"),
    ("Kotak Mahindra", "KOTAKBANK.BO"),
    ("PNB", "PNB.BO"),
    ("SBI", "SBIN.BO"),
    ("Yes Bank", "YESBANK.BO"),
)
START, END = "2005-07-12", "2017-11-03"
KEEP = 3032


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_values(values):
    # little-endian float64 bytes, independent of CSV formatting
    return hashlib.sha256(np.asarray(values, dtype="<f8").tobytes()).hexdigest()


def cmd_list(_args):
    print(f"date range {START} .. {END}, keep last {KEEP} closes")
    for i, (name, symbol) in enumerate(SYMBOLS, 1):
        print(f"{i:2d}  {symbol:<14} {name}")
    return 0


def cmd_verify(args):
    directory = Path(args.directory)
    failures = 0
    for _, symbol in SYMBOLS:
        path = directory / f"{symbol}.csv"
        if not path.exists():
            print(f"MISSING  {path}")
            failures += 1
            continue
        try:
            series = truncate_tail(load_csv(path, args.column), KEEP)
        except RnnForecastError as exc:
            print(f"INVALID  {path}: {exc}")
            failures += 1
            continue
        first = series.dates[0] if series.dates is not None else "?"
        last = series.dates[-1] if series.dates is not None else "?"
        print(f"OK       {symbol:<14} {first}..{last}  file {sha256_file(path)}"
              f"  close[{KEEP}] {sha256_values(series.values)}")
    print(f"{len(SYMBOLS) - failures}/{len(SYMBOLS)} files verified")
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(description="BANKEX symbol list and local data check")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="print the symbols and date range").set_defaults(fn=cmd_list)
    verify = sub.add_parser("verify", help="check a directory of exported CSV files")
    verify.add_argument("directory")
    verify.add_argument("--column", default="Close")
    verify.set_defaults(fn=cmd_verify)
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
