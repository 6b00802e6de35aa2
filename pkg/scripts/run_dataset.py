#!/usr/bin/env python3
"""Full pipeline on a real dataset directory: CV selection, final fit, report.

Expects a directory containing labels.csv (worker,item,label) and optionally
gold.csv (item,label); labels are 1-based on disk by default:

    python3 scripts/run_dataset.py datasets/bluebirds --mode multiclass
"""

import argparse
import sys
from pathlib import Path

from mmce.data import load_gold, load_labels, summarize, write_posterior
from mmce.evaluation import evaluate
from mmce.selection import CVConfig, cross_validate
from mmce.solver import fit


def infer_num_classes(path: Path, label_base: int) -> int:
    top = 0
    for line in path.read_text().splitlines():
        parts = line.split(",")
        if len(parts) == 3 and parts[2].strip().lstrip("-").isdigit():
            top = max(top, int(parts[2]))
    return top + 1 - label_base


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dataset", type=Path, help="directory with labels.csv [gold.csv]")
    ap.add_argument("--mode", choices=("multiclass", "ordinal"), default="multiclass")
    ap.add_argument("--label-base", type=int, choices=(0, 1), default=1)
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", type=Path, help="posterior TSV (default <dataset>/posterior.tsv)")
    args = ap.parse_args()

    labels_path = args.dataset / "labels.csv"
    if not labels_path.exists():
        sys.exit(f"no labels.csv under {args.dataset}")
    num_classes = infer_num_classes(labels_path, args.label_base)
    labels = load_labels(labels_path, num_classes, args.label_base)
    gold_path = args.dataset / "gold.csv"
    gold = (load_gold(gold_path, labels.item_ids, num_classes, args.label_base)
            if gold_path.exists() else None)

    s = summarize(labels, gold)
    print(f"{s.num_workers} workers, {s.num_items} items, {s.num_labels} labels, "
          f"K={s.num_classes}")
    if s.avg_worker_error is not None:
        print(f"average worker error {100 * s.avg_worker_error:.2f}%")

    config = CVConfig(folds=args.folds, seed=args.seed, mode=args.mode)
    report = cross_validate(labels, config)
    print(f"selected gamma={report.selected_gamma:g} "
          f"alpha={report.alpha:g} beta={report.beta:g}")

    result = fit(labels, config.hyper(report.alpha, report.beta))
    if not result.converged:
        print(f"warning: solver stopped after {result.iterations} iterations "
              "without reaching the tolerance")
    out = args.out or args.dataset / "posterior.tsv"
    write_posterior(out, labels, result.posterior, result.predicted)
    print(f"posterior written to {out}")

    if gold is not None:
        ev = evaluate(result.predicted, gold, ordinal=args.mode == "ordinal",
                      posterior=result.posterior, with_bins=True)
        for line in ev.lines():
            print(line)


if __name__ == "__main__":
    main()
