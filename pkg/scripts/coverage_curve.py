#!/usr/bin/env python3
"""Coverage-growth experiment: how pattern coverage of a held-out test set
rises with the number of augmented samples, at flow and trace granularity.
"""

import argparse

from sata.metrics import PatternLevel, pattern_coverage_detail
from sata.modelfile import fit_models
from sata.pipeline import AugmentOptions, augment_dataset
from sata.synth import make_coverage_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sites", default=10, type=int)
    parser.add_argument("--seed", default=7, type=int)
    parser.add_argument("--aug-seed", default=1, type=int)
    parser.add_argument("--p-coalesce", default=0.7, type=float)
    parser.add_argument(
        "--samples", default=[1, 2, 4, 7, 13], type=int, nargs="+",
        help="variants per training trace, one curve point each",
    )
    args = parser.parse_args()

    train, test = make_coverage_corpus(num_sites=args.sites, seed=args.seed)
    per_site = len(train.traces) // args.sites
    models = fit_models(train)

    def coverages(datasets):
        f = pattern_coverage_detail(datasets, test, PatternLevel.FLOW_COMPOSITION)
        t = pattern_coverage_detail(datasets, test, PatternLevel.TRACE_COMPOSITION)
        return f.value, t.value

    base_flow, base_trace = coverages(train)
    print(f"{'samples/site':>12}  {'flow':>6}  {'trace':>6}")
    print(f"{0:>12}  {base_flow:6.4f}  {base_trace:6.4f}")
    for samples in args.samples:
        aug = augment_dataset(
            train,
            models,
            AugmentOptions(
                samples=samples, seed=args.aug_seed, p_coalesce=args.p_coalesce
            ),
        )
        flow_cov, trace_cov = coverages([train, aug])
        print(f"{samples * per_site:>12}  {flow_cov:6.4f}  {trace_cov:6.4f}")


if __name__ == "__main__":
    main()
