#!/usr/bin/env python3
"""Write the synthetic demo corpora to disk.

Produces a train/test pair for the coverage experiment plus a corpus whose
recorded packet lengths equal the idealized ones except for a configurable
fragmentation fraction.
"""

import argparse
from pathlib import Path

from sata.ingest import save_dataset
from sata.synth import make_coverage_corpus, make_overlap_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data", type=Path)
    parser.add_argument("--sites", default=10, type=int)
    parser.add_argument("--overlap-flows", default=10_000, type=int)
    parser.add_argument("--fragment-prob", default=0.30, type=float)
    parser.add_argument("--seed", default=7, type=int)
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    train, test = make_coverage_corpus(num_sites=args.sites, seed=args.seed)
    save_dataset(train, args.out_dir / "train.jsonl")
    save_dataset(test, args.out_dir / "test.jsonl")
    overlap = make_overlap_corpus(
        num_flows=args.overlap_flows,
        fragment_prob=args.fragment_prob,
        seed=args.seed + 4,
    )
    save_dataset(overlap, args.out_dir / "overlap.jsonl")
    print(
        f"wrote {len(train.traces)} train, {len(test.traces)} test traces and "
        f"{args.overlap_flows} overlap flows under {args.out_dir}/"
    )


if __name__ == "__main__":
    main()
