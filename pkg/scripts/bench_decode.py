#!/usr/bin/env python3
"""Decode-only throughput over synthetic corpora of growing size.

    python scripts/bench_decode.py --sizes 1000 10000 --repeats 3

Gold tag tables are turned into one-hot grids once; the timed part is
thresholding plus clique decoding (median of the repeats after a warm-up).
"""
from __future__ import annotations

import argparse
import json
import platform

from macgrid.cli import bench
from macgrid.synth import SynthSpec, generate_synthetic


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 10_000])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--max-length", type=int, default=20)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    print(f"# {platform.python_implementation()} {platform.python_version()} on {platform.machine()}")
    for n in args.sizes:
        corpus, _ = generate_synthetic(SynthSpec(sentences=n, seed=args.seed, max_length=args.max_length))
        res = bench(corpus, repeats=args.repeats)
        print(json.dumps({"sentences": n, **res["decode_only"]}))


if __name__ == "__main__":
    main()
