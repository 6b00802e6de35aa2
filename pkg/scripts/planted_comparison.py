#!/usr/bin/env python3
"""Compare MV, Dawid-Skene, and MMCE on planted synthetic data.

Sweeps labels-per-item at a fixed worker accuracy and prints the mean error
rate of each aggregator over several seeds, e.g.:

    python3 scripts/planted_comparison.py --classes 3 --accuracy 0.7 --seeds 10
"""

import argparse

import numpy as np

from mmce import synthetic
from mmce.baselines import dawid_skene_em, majority_vote
from mmce.evaluation import error_rate
from mmce.selection import resolve_hyperparams
from mmce.solver import HyperParams, fit


def run(args):
    conf = np.stack([synthetic.diagonal_confusion(args.classes, args.accuracy)]
                    * args.workers)
    print(f"K={args.classes} workers={args.workers} items={args.items} "
          f"accuracy={args.accuracy} gamma={args.gamma} seeds={args.seeds}")
    print(f"{'labels/item':>11}  {'mv':>7}  {'ds':>7}  {'mmce':>7}")
    for lpi in args.labels_per_item:
        errs = {"mv": [], "ds": [], "mmce": []}
        for seed in range(args.seeds):
            lm, gold = synthetic.sample_labels(args.workers, args.items,
                                               args.classes, lpi, conf, seed)
            _, mv_pred = majority_vote(lm)
            errs["mv"].append(error_rate(mv_pred, gold))
            ds_post, _, _ = dawid_skene_em(lm)
            errs["ds"].append(error_rate(np.argmax(ds_post, axis=1), gold))
            alpha, beta = resolve_hyperparams(args.gamma, lm)
            result = fit(lm, HyperParams(alpha=alpha, beta=beta, mode=args.mode))
            errs["mmce"].append(error_rate(result.predicted, gold))
        print(f"{lpi:>11}  " + "  ".join(
            f"{100 * np.mean(errs[k]):6.2f}%" for k in ("mv", "ds", "mmce")))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--workers", type=int, default=30)
    ap.add_argument("--items", type=int, default=200)
    ap.add_argument("--accuracy", type=float, default=0.7)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--mode", choices=("multiclass", "ordinal"), default="multiclass")
    ap.add_argument("--labels-per-item", type=int, nargs="+", default=[1, 3, 5, 10])
    ap.add_argument("--seeds", type=int, default=10)
    run(ap.parse_args())


if __name__ == "__main__":
    main()
