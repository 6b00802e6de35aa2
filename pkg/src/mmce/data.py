"""Sparse (worker, item, label) observation store and dataset statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class LabelFileError(ValueError):
    """Raised on malformed label/gold files (carries the offending line number)."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class LabelMatrix:
    """Immutable sparse set of (worker, item, label) observations.

    Workers and items carry external string IDs interned to dense indices in
    first-appearance order. Labels are 0-based integers in [0, num_classes).
    """

    num_workers: int
    num_items: int
    num_classes: int
    workers: np.ndarray  # (L,) int worker index per observation
    items: np.ndarray    # (L,) int item index per observation
    labels: np.ndarray   # (L,) int label per observation
    worker_ids: tuple[str, ...]
    item_ids: tuple[str, ...]

    def __post_init__(self):
        for arr in (self.workers, self.items, self.labels):
            arr.setflags(write=False)

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def observations(self) -> list[tuple[int, int, int]]:
        return list(zip(self.workers.tolist(), self.items.tolist(), self.labels.tolist()))

    def worker_index(self, worker_id: str) -> int:
        return self.worker_ids.index(worker_id)

    def item_index(self, item_id: str) -> int:
        return self.item_ids.index(item_id)

    def unlabeled_items(self) -> np.ndarray:
        """Indices of items with zero observations (emitted with uniform posteriors)."""
        counts = np.bincount(self.items, minlength=self.num_items)
        return np.flatnonzero(counts == 0)

    def subset(self, mask: np.ndarray) -> "LabelMatrix":
        """Restrict to the observations selected by a boolean or index mask.

        ID maps and counts are preserved so indices stay comparable.
        """
        return LabelMatrix(
            num_workers=self.num_workers,
            num_items=self.num_items,
            num_classes=self.num_classes,
            workers=self.workers[mask].copy(),
            items=self.items[mask].copy(),
            labels=self.labels[mask].copy(),
            worker_ids=self.worker_ids,
            item_ids=self.item_ids,
        )


def from_triples(triples, num_classes, worker_ids=None, item_ids=None) -> LabelMatrix:
    """Build a LabelMatrix from (worker_id, item_id, label) triples.

    IDs are interned in first-appearance order; pre-seeded ID lists may be
    passed to register workers/items that have no observations.
    """
    w_map: dict[str, int] = {}
    i_map: dict[str, int] = {}
    if worker_ids:
        for wid in worker_ids:
            w_map.setdefault(str(wid), len(w_map))
    if item_ids:
        for iid in item_ids:
            i_map.setdefault(str(iid), len(i_map))
    ws, its, ls = [], [], []
    seen = set()
    for n, (wid, iid, lab) in enumerate(triples, start=1):
        wid, iid = str(wid), str(iid)
        if not wid or not iid:
            raise LabelFileError("empty worker or item id", n)
        lab = int(lab)
        if not 0 <= lab < num_classes:
            raise LabelFileError(
                f"label {lab} out of range (valid labels are 0..{num_classes - 1})", n)
        wi = w_map.setdefault(wid, len(w_map))
        ii = i_map.setdefault(iid, len(i_map))
        if (wi, ii) in seen:
            raise LabelFileError(f"duplicate observation for worker {wid!r}, item {iid!r}", n)
        seen.add((wi, ii))
        ws.append(wi)
        its.append(ii)
        ls.append(lab)
    return LabelMatrix(
        num_workers=len(w_map),
        num_items=len(i_map),
        num_classes=int(num_classes),
        workers=np.asarray(ws, dtype=np.int64),
        items=np.asarray(its, dtype=np.int64),
        labels=np.asarray(ls, dtype=np.int64),
        worker_ids=tuple(w_map),
        item_ids=tuple(i_map),
    )


def _parse_rows(path, expected_fields):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(",")
            if n == 1 and [p.strip().lower() for p in parts] == expected_fields:
                continue  # optional header
            if len(parts) != len(expected_fields):
                raise LabelFileError(
                    f"expected {len(expected_fields)} comma-separated fields, got {len(parts)}", n)
            rows.append((n, [p.strip() for p in parts]))
    return rows


def load_labels(path, num_classes, label_base=0) -> LabelMatrix:
    """Load a `worker_id,item_id,label` CSV file into a LabelMatrix.

    label_base 1 shifts incoming labels down by one for datasets encoded 1..K.
    """
    if label_base not in (0, 1):
        raise ValueError("label_base must be 0 or 1")
    triples = []
    for n, (wid, iid, lab) in _parse_rows(path, ["worker", "item", "label"]):
        try:
            lab = int(lab) - label_base
        except ValueError:
            raise LabelFileError(f"label {lab!r} is not an integer", n) from None
        if not 0 <= lab < num_classes:
            raise LabelFileError(
                f"label {lab + label_base} out of range "
                f"(valid labels are {label_base}..{num_classes - 1 + label_base})", n)
        triples.append((wid, iid, lab))
    return from_triples(triples, num_classes)


def write_labels(labels: LabelMatrix, path, label_base=0) -> None:
    """Write the canonical labels file (inverse of load_labels)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("worker,item,label\n")
        for w, i, lab in zip(labels.workers, labels.items, labels.labels):
            fh.write(f"{labels.worker_ids[w]},{labels.item_ids[i]},{lab + label_base}\n")


@dataclass(frozen=True)
class GoldLabels:
    """Partial map item_index -> true class, for evaluation."""

    by_item: dict[int, int] = field(default_factory=dict)

    def __len__(self):
        return len(self.by_item)


def load_gold(path, item_ids, num_classes, label_base=0) -> GoldLabels:
    """Load an `item_id,label` CSV keyed against a known item-ID order."""
    by_item: dict[int, int] = {}
    item_index = {iid: i for i, iid in enumerate(item_ids)}
    for n, (iid, lab) in _parse_rows(path, ["item", "label"]):
        if iid not in item_index:
            raise LabelFileError(f"unknown item id {iid!r}", n)
        try:
            lab = int(lab) - label_base
        except ValueError:
            raise LabelFileError(f"gold label {lab!r} is not an integer", n) from None
        if not 0 <= lab < num_classes:
            raise LabelFileError(f"gold label {lab + label_base} out of range", n)
        by_item[item_index[iid]] = lab
    return GoldLabels(by_item)


@dataclass(frozen=True)
class DatasetSummary:
    num_classes: int
    num_items: int
    num_workers: int
    num_labels: int
    labels_per_worker: float
    labels_per_item: float
    avg_worker_error: float | None = None


def summarize(labels: LabelMatrix, gold: GoldLabels | None = None) -> DatasetSummary:
    """Dataset counts, mean labels per worker/item, optional worker error vs gold."""
    avg_err = None
    if gold is not None and len(gold) > 0:
        gold_items = np.asarray(sorted(gold.by_item), dtype=np.int64)
        gold_vals = np.asarray([gold.by_item[i] for i in gold_items], dtype=np.int64)
        lut = np.full(labels.num_items, -1, dtype=np.int64)
        lut[gold_items] = gold_vals
        on_gold = lut[labels.items] >= 0
        if on_gold.any():
            avg_err = float(np.mean(labels.labels[on_gold] != lut[labels.items[on_gold]]))
    return DatasetSummary(
        num_classes=labels.num_classes,
        num_items=labels.num_items,
        num_workers=labels.num_workers,
        num_labels=labels.num_labels,
        labels_per_worker=labels.num_labels / labels.num_workers if labels.num_workers else 0.0,
        labels_per_item=labels.num_labels / labels.num_items if labels.num_items else 0.0,
        avg_worker_error=avg_err,
    )


def empirical_confusion(labels: LabelMatrix, posterior: np.ndarray):
    """Posterior-weighted observed confusion counts.

    Returns (worker_tensor, item_tensor): worker entry (i, c, k) is the
    posterior mass of class c over items that worker i labeled k; the item
    tensor swaps the roles of workers and items.
    """
    n, K = posterior.shape
    if n != labels.num_items or K != labels.num_classes:
        raise ValueError("posterior shape does not match the label matrix")
    if not np.allclose(posterior.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("posterior rows must sum to 1")
    worker = np.zeros((labels.num_workers, K, K))
    item = np.zeros((labels.num_items, K, K))
    q = posterior[labels.items]  # (L, K)
    np.add.at(worker, (labels.workers, slice(None), labels.labels), q)
    np.add.at(item, (labels.items, slice(None), labels.labels), q)
    return worker, item


POSTERIOR_HEADER_PREFIX = ("item", "predicted")


def write_posterior(path, labels: LabelMatrix, posterior: np.ndarray,
                    predicted: np.ndarray) -> None:
    """Write the posterior TSV: item, argmax label, then 6-decimal probabilities."""
    K = labels.num_classes
    header = "item\tpredicted\t" + "\t".join(f"p{k}" for k in range(K))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for j in range(labels.num_items):
            probs = "\t".join(f"{p:.6f}" for p in posterior[j])
            fh.write(f"{labels.item_ids[j]}\t{predicted[j]}\t{probs}\n")


def read_posterior(path):
    """Read a posterior TSV back as (item_ids, predicted, posterior)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header[:2]) != POSTERIOR_HEADER_PREFIX:
            raise LabelFileError("not a posterior file: bad header", 1)
        K = len(header) - 2
        ids, preds, rows = [], [], []
        for n, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != K + 2:
                raise LabelFileError("wrong number of columns", n)
            ids.append(parts[0])
            preds.append(int(parts[1]))
            rows.append([float(p) for p in parts[2:]])
    return ids, np.asarray(preds, dtype=np.int64), np.asarray(rows)
