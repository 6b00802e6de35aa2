"""Command-line entry point: dataset stats, aggregation, model selection,
and evaluation.

Exit codes: 0 success, 1 solver did not converge (outputs still written),
2 input or usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import baselines, data, selection, solver
from .confusion import Mode, RegularizerVariant, write_params
from .evaluation import evaluate

log = logging.getLogger("mmce")

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _load_labels(args) -> data.LabelMatrix:
    return data.load_labels(args.labels, args.classes, args.label_base)


def _add_common(p):
    p.add_argument("--labels", required=True, help="labels CSV (worker,item,label)")
    p.add_argument("--classes", type=int, required=True, help="number of classes K")
    p.add_argument("--label-base", type=int, choices=(0, 1), default=0)


def _add_solver_flags(p):
    p.add_argument("--mode", choices=[m.value for m in Mode], default="multiclass")
    p.add_argument("--variant", choices=[v.value for v in RegularizerVariant],
                   default="euclidean")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--inner-steps", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=42)


def cmd_stats(args) -> int:
    labels = _load_labels(args)
    gold = (data.load_gold(args.gold, labels.item_ids, labels.num_classes,
                           args.label_base) if args.gold else None)
    s = data.summarize(labels, gold)
    print(f"classes            {s.num_classes}")
    print(f"items              {s.num_items}")
    print(f"workers            {s.num_workers}")
    print(f"labels             {s.num_labels}")
    print(f"labels per worker  {s.labels_per_worker:.2f}")
    print(f"labels per item    {s.labels_per_item:.2f}")
    if s.avg_worker_error is not None:
        print(f"avg worker error   {100 * s.avg_worker_error:.2f}%")
    return EXIT_OK


def _resolve_aggregate_hyper(args, labels):
    have_ab = args.alpha is not None or args.beta is not None
    if args.gamma is not None and have_ab:
        raise UsageError("give either --gamma or --alpha/--beta, not both")
    if args.gamma is not None:
        alpha, beta = selection.resolve_hyperparams(args.gamma, labels)
        print(f"resolved alpha={alpha:g} beta={beta:g} from gamma={args.gamma:g}")
        return alpha, beta
    if args.alpha is None or args.beta is None:
        raise UsageError("mmce needs --gamma, or both --alpha and --beta")
    return args.alpha, args.beta


def cmd_aggregate(args) -> int:
    labels = _load_labels(args)
    unlabeled = labels.unlabeled_items()
    if len(unlabeled):
        ids = ", ".join(labels.item_ids[j] for j in unlabeled[:10])
        log.warning("%d items have no labels (uniform posterior emitted): %s",
                    len(unlabeled), ids)
    exit_code = EXIT_OK
    trace_rows = []
    if args.method == "mv":
        posterior, predicted = baselines.majority_vote(labels)
    elif args.method == "ds":
        posterior, params, trace = baselines.dawid_skene_em(labels)
        predicted = np.argmax(posterior, axis=1)
        trace_rows = [(i + 1, "em", v) for i, v in enumerate(trace)]
    elif args.method == "mmce":
        alpha, beta = _resolve_aggregate_hyper(args, labels)
        hyper = solver.HyperParams(
            alpha=alpha, beta=beta, mode=Mode(args.mode),
            variant=RegularizerVariant(args.variant),
            max_outer_iters=args.max_iters, inner_gradient_steps=args.inner_steps,
            tol=args.tol, seed=args.seed)
        result = solver.fit(labels, hyper)
        posterior, predicted = result.posterior, result.predicted
        trace_rows = [((i + 1) // 2, phase, v) for i, (phase, v) in
                      enumerate(zip(result.trace_phases, result.objective_trace))]
        if args.params_out:
            write_params(args.params_out, result.worker_params, result.item_params,
                         hyper.mode)
        if not result.converged:
            log.warning("solver did not converge in %d iterations", result.iterations)
            exit_code = EXIT_NOT_CONVERGED
    else:
        raise UsageError(f"unknown method {args.method!r}")
    data.write_posterior(args.out, labels, posterior, predicted)
    if args.trace and trace_rows:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("iter,phase,objective\n")
            for it, phase, v in trace_rows:
                fh.write(f"{it},{phase},{v:.9f}\n")
    return exit_code


def cmd_select(args) -> int:
    labels = _load_labels(args)
    grid = tuple(float(g) for g in args.grid.split(","))
    config = selection.CVConfig(
        folds=args.folds, gamma_grid=grid, seed=args.seed, mode=Mode(args.mode),
        variant=RegularizerVariant(args.variant), max_outer_iters=args.max_iters,
        inner_gradient_steps=args.inner_steps, tol=args.tol,
        heldout_scoring=args.heldout_scoring)
    if args.gold:
        gold = data.load_gold(args.gold, labels.item_ids, labels.num_classes,
                              args.label_base)
        report = selection.validation_select(labels, gold, config)
    else:
        report = selection.cross_validate(labels, config)
    if args.out:
        report.write_csv(args.out)
    print(f"selected gamma={report.selected_gamma:g} "
          f"alpha={report.alpha:g} beta={report.beta:g}")
    if args.fit_final:
        hyper = config.hyper(report.alpha, report.beta)
        result = solver.fit(labels, hyper)
        out = (args.out or "mmce") + ".posterior.tsv"
        data.write_posterior(out, labels, result.posterior, result.predicted)
        print(f"final posterior written to {out}")
        if not result.converged:
            return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_evaluate(args) -> int:
    item_ids, predicted, posterior = data.read_posterior(args.predictions)
    num_classes = posterior.shape[1]
    gold = data.load_gold(args.gold, item_ids, num_classes, args.label_base)
    report = evaluate(predicted, gold, ordinal=args.mode == "ordinal",
                      posterior=posterior, with_bins=args.bins)
    for line in report.lines():
        print(line)
    if args.out:
        report.write_csv(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmce",
        description="Aggregate noisy crowdsourced labels into per-item posteriors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset summary statistics")
    _add_common(p)
    p.add_argument("--gold", help="optional gold CSV (item,label)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("aggregate", help="aggregate labels into posteriors")
    _add_common(p)
    _add_solver_flags(p)
    p.add_argument("--method", choices=("mmce", "mv", "ds"), default="mmce")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--out", required=True, help="posterior TSV output path")
    p.add_argument("--params-out", help="fitted params sidecar TSV")
    p.add_argument("--trace", help="objective trace CSV output path")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("select", help="choose regularization strength")
    _add_common(p)
    _add_solver_flags(p)
    p.add_argument("--gold", help="use validation-set selection against this gold CSV")
    p.add_argument("--grid", default="0.25,0.5,1,2,4",
                   help="comma-separated gamma grid")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--heldout-scoring", choices=("marginal", "hard"),
                   default="marginal")
    p.add_argument("--out", help="CV report CSV output path")
    p.add_argument("--fit-final", action="store_true",
                   help="fit the selected model on all labels afterwards")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="score a posterior file against gold labels")
    p.add_argument("--predictions", required=True, help="posterior TSV")
    p.add_argument("--gold", required=True, help="gold CSV (item,label)")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="multiclass")
    p.add_argument("--label-base", type=int, choices=(0, 1), default=0)
    p.add_argument("--bins", action="store_true", help="add the calibration table")
    p.add_argument("--out", help="machine-readable report CSV")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
