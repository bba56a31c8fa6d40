#!/usr/bin/env python3
"""Download the canonical UCI Adult files into a local directory.

Usage:
    python3 scripts/fetch_adult.py [--dest tests/data/adult]

Grabs ``adult.data`` and ``adult.test`` from the UCI repository, verifies the
expected data-row counts (32,561 and 16,281), and prints each file's SHA-256.
Needs network access; afterwards the test suite picks the files up from the
destination directory (or from ``PROXYAUDIT_ADULT_DIR``).
"""

import argparse
import hashlib
import sys
import urllib.request
from pathlib import Path

BASE_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/adult"
EXPECTED_ROWS = {"adult.data": 32561, "adult.test": 16281}


def data_row_count(path):
    with open(path, "r", encoding="utf-8") as fh:
        return sum(
            1 for line in fh if line.strip() and not line.startswith("|")
        )


def fetch(name, dest):
    target = dest / name
    url = f"{BASE_URL}/{name}"
    print(f"downloading {url}")
    with urllib.request.urlopen(url, timeout=60) as response:
        payload = response.read()
    target.write_bytes(payload)
    rows = data_row_count(target)
    digest = hashlib.sha256(payload).hexdigest()
    print(f"  wrote {target} ({len(payload)} bytes, {rows} data rows)")
    print(f"  sha256 {digest}")
    if rows != EXPECTED_ROWS[name]:
        print(
            f"  WARNING: expected {EXPECTED_ROWS[name]} data rows",
            file=sys.stderr,
        )
        return False
    return True


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--dest",
        type=Path,
        default=Path("tests/data/adult"),
        help="directory to place adult.data and adult.test in",
    )
    args = parser.parse_args(argv)
    args.dest.mkdir(parents=True, exist_ok=True)
    ok = all(fetch(name, args.dest) for name in ("adult.data", "adult.test"))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
