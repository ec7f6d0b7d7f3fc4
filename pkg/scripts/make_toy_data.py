#!/usr/bin/env python3
"""Regenerate the shipped toy benchmark data under data/.

The files are deterministic for a given seed; the test suite checks that the
committed copies match a fresh generation byte for byte.
"""

import argparse
from pathlib import Path

from swarmattack import synth


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--seed", type=int, default=synth.BENCH_SEED)
    args = ap.parse_args()
    files = synth.write_benchmark_files(args.out, seed=args.seed)
    for path in sorted(files):
        print(path)


if __name__ == "__main__":
    main()
