import numpy as np
import pytest

from mmce.data import GoldLabels, from_triples

# Three workers labeling six items on a 3-point scale (stored 1-based in
# files, 0-based internally). True classes: items 0-1 -> 0, 2-3 -> 1, 4-5 -> 2.
THREE_WORKER_ROWS = [
    ("w1", [1, 2, 2, 1, 3, 2]),
    ("w2", [2, 1, 2, 2, 1, 3]),
    ("w3", [1, 1, 1, 2, 2, 3]),
]
THREE_WORKER_TRUTH = [0, 0, 1, 1, 2, 2]


@pytest.fixture
def three_worker_labels():
    triples = [(w, f"i{j + 1}", lab - 1)
               for w, row in THREE_WORKER_ROWS for j, lab in enumerate(row)]
    return from_triples(triples, 3)


@pytest.fixture
def three_worker_gold():
    return GoldLabels(dict(enumerate(THREE_WORKER_TRUTH)))


@pytest.fixture
def three_worker_posterior():
    q = np.zeros((6, 3))
    q[np.arange(6), THREE_WORKER_TRUTH] = 1.0
    return q


def write_csv(path, rows, header=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")
    return path
