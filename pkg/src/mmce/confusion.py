"""Worker/item confusion parameterizations, the labeling model, and regularizers.

Two parameterizations are supported: dense (entity, c, k) score tensors, and
a structured ordinal form with one score per (threshold s, relation pair).
The ordinal form expands linearly to a dense tensor, so the labeling model
itself is shared.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.special import logsumexp

# Relation pairs (true-label relation, observed-label relation) against a
# threshold s, in the fixed order used throughout storage and serialization.
REL_PAIRS = ((">=", ">="), (">=", "<"), ("<", ">="), ("<", "<"))


class Mode(str, enum.Enum):
    MULTICLASS = "multiclass"
    ORDINAL = "ordinal"


class RegularizerVariant(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    CENTERED = "centered"


def ordinal_basis(K: int) -> np.ndarray:
    """Indicator basis B[s-1, r, c, k] = I(c rel_true s) * I(k rel_obs s).

    The dense expansion of ordinal parameters is linear in this basis.
    """
    if K < 2:
        raise ValueError("ordinal parameterization needs K >= 2")
    c = np.arange(K)
    basis = np.zeros((K - 1, len(REL_PAIRS), K, K))
    for si, s in enumerate(range(1, K)):
        ge, lt = c >= s, c < s
        rels = {">=": ge, "<": lt}
        for ri, (rt, ro) in enumerate(REL_PAIRS):
            basis[si, ri] = np.outer(rels[rt], rels[ro])
    return basis


def expand_ordinal(params: np.ndarray, K: int) -> np.ndarray:
    """Expand ordinal scores (entity, K-1, 4) to dense (entity, K, K) tensors."""
    params = np.asarray(params)
    if params.shape[-2:] != (K - 1, len(REL_PAIRS)):
        raise ValueError(f"ordinal params must have trailing shape ({K - 1}, 4)")
    return np.einsum("...sr,srck->...ck", params, ordinal_basis(K))


def project_ordinal(dense_grad: np.ndarray, K: int) -> np.ndarray:
    """Adjoint of expand_ordinal: pool a dense (c, k) gradient onto ordinal scores."""
    return np.einsum("...ck,srck->...sr", dense_grad, ordinal_basis(K))


def log_label_distribution(sigma_row: np.ndarray, tau_row: np.ndarray) -> np.ndarray:
    """Row-wise log P(k | c) for one worker/item pair.

    Entry (c, k) is the score sigma(c, k) + tau(c, k) log-softmaxed over k.
    Shifted by the row max, so large scores cannot overflow.
    """
    scores = np.asarray(sigma_row) + np.asarray(tau_row)
    return scores - logsumexp(scores, axis=-1, keepdims=True)


def label_distribution(sigma_row, tau_row, c: int) -> np.ndarray:
    """P(observed label | true class c) under the exponential-score model."""
    return np.exp(log_label_distribution(sigma_row, tau_row)[c])


def center(params: np.ndarray) -> np.ndarray:
    """Subtract per-entity group means: one mean over the diagonal entries and
    one over the off-diagonal entries. A symmetric idempotent linear map."""
    ent, K, K2 = params.shape
    if K != K2:
        raise ValueError("centered regularizer applies to dense square tensors only")
    eye = np.eye(K, dtype=bool)
    diag_mean = params[:, eye].mean(axis=1)
    off_mean = params[:, ~eye].mean(axis=1) if K > 1 else np.zeros(ent)
    out = params.copy()
    out[:, eye] -= diag_mean[:, None]
    out[:, ~eye] -= off_mean[:, None]
    return out


def regularizer_value_and_gradient(params: np.ndarray, variant: RegularizerVariant,
                                   weight: float):
    """Quadratic penalty value and gradient for either parameterization.

    Euclidean: (weight/2) * sum of squares. Centered: squares of deviations
    from the per-entity diagonal and off-diagonal means (dense multiclass only).
    """
    if weight < 0:
        raise ValueError("regularizer weight must be >= 0")
    params = np.asarray(params, dtype=float)
    if variant == RegularizerVariant.EUCLIDEAN:
        return 0.5 * weight * float(np.sum(params ** 2)), weight * params
    if variant == RegularizerVariant.CENTERED:
        if params.ndim != 3 or params.shape[1] != params.shape[2]:
            raise ValueError("centered variant applies to multiclass (dense) mode only")
        centered = center(params)
        return 0.5 * weight * float(np.sum(centered ** 2)), weight * centered
    raise ValueError(f"unknown variant {variant!r}")


def init_params(mode: Mode, num_entities: int, K: int) -> np.ndarray:
    """All-zero scores: the uniform labeling model."""
    if mode == Mode.ORDINAL:
        return np.zeros((num_entities, K - 1, len(REL_PAIRS)))
    return np.zeros((num_entities, K, K))


def write_params(path, worker_params: np.ndarray, item_params: np.ndarray,
                 mode: Mode) -> None:
    """Serialize fitted scores to a TSV sidecar, one line per score."""
    def rows(kind, tensor):
        if mode == Mode.ORDINAL:
            for e in range(tensor.shape[0]):
                for si in range(tensor.shape[1]):
                    for ri, (rt, ro) in enumerate(REL_PAIRS):
                        yield (kind, e, si + 1, f"{rt}{ro}", tensor[e, si, ri])
        else:
            for e in range(tensor.shape[0]):
                for c in range(tensor.shape[1]):
                    for k in range(tensor.shape[2]):
                        yield (kind, e, c, k, tensor[e, c, k])

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# mode={mode.value}\n")
        fh.write("kind\tentity\trow\tcol\tscore\n")
        for tensor, kind in ((worker_params, "worker"), (item_params, "item")):
            for kind_, e, r, c, v in rows(kind, tensor):
                fh.write(f"{kind_}\t{e}\t{r}\t{c}\t{v:.9f}\n")


def read_params(path):
    """Load a params sidecar written by write_params.

    Returns (worker_params, item_params, mode).
    """
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# mode="):
            raise ValueError("not a params sidecar: missing mode line")
        mode = Mode(first.removeprefix("# mode="))
        fh.readline()  # header
        entries = {"worker": [], "item": []}
        for line in fh:
            if not line.strip():
                continue
            kind, e, r, c, v = line.rstrip("\n").split("\t")
            entries[kind].append((int(e), r, c, float(v)))

    def build(rows):
        n_ent = max(e for e, *_ in rows) + 1
        if mode == Mode.ORDINAL:
            n_s = max(int(r) for _, r, _, _ in rows)
            rel_index = {f"{rt}{ro}": i for i, (rt, ro) in enumerate(REL_PAIRS)}
            out = np.zeros((n_ent, n_s, len(REL_PAIRS)))
            for e, r, c, v in rows:
                out[e, int(r) - 1, rel_index[c]] = v
        else:
            K = max(int(r) for _, r, _, _ in rows) + 1
            out = np.zeros((n_ent, K, K))
            for e, r, c, v in rows:
                out[e, int(r), int(c)] = v
        return out

    return build(entries["worker"]), build(entries["item"]), mode
