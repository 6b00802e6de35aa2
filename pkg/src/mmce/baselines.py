"""Majority voting and Dawid-Skene EM reference aggregators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import LabelMatrix
from .solver import PROB_FLOOR, initialize_posterior


@dataclass
class DSParams:
    """Per-worker row-stochastic confusion matrices plus a class prior."""

    confusion: np.ndarray  # (m, K, K), rows sum to 1
    prior: np.ndarray      # (K,), sums to 1


def majority_vote(labels: LabelMatrix):
    """Vote-count posterior and argmax labels (lowest index on ties).

    Items with no labels get the uniform row and label 0.
    """
    posterior = initialize_posterior(labels)
    return posterior, np.argmax(posterior, axis=1)


def _ds_m_step(labels: LabelMatrix, posterior, smoothing: float, uniform_prior: bool):
    m, K = labels.num_workers, labels.num_classes
    counts = np.zeros((m, K, K))
    q = posterior[labels.items]
    np.add.at(counts, (labels.workers, slice(None), labels.labels), q)
    counts += smoothing
    totals = counts.sum(axis=2, keepdims=True)
    confusion = np.where(totals > 0, counts / np.maximum(totals, PROB_FLOOR), 1.0 / K)
    if uniform_prior:
        prior = np.full(K, 1.0 / K)
    else:
        prior = posterior.sum(axis=0)
        prior /= prior.sum()
    return confusion, prior


def _ds_e_step(labels: LabelMatrix, confusion, prior):
    n, K = labels.num_items, labels.num_classes
    log_p = np.log(np.maximum(confusion, PROB_FLOOR))
    log_q = np.tile(np.log(np.maximum(prior, PROB_FLOOR)), (n, 1))
    np.add.at(log_q, labels.items, log_p[labels.workers, :, labels.labels])
    log_q -= logsumexp(log_q, axis=1, keepdims=True)
    return np.exp(log_q), log_q


def ds_marginal_loglik(labels: LabelMatrix, params: DSParams) -> float:
    """Marginal log-likelihood of the observed labels under a DS model."""
    n, K = labels.num_items, labels.num_classes
    log_p = np.log(np.maximum(params.confusion, PROB_FLOOR))
    acc = np.tile(np.log(np.maximum(params.prior, PROB_FLOOR)), (n, 1))
    np.add.at(acc, labels.items, log_p[labels.workers, :, labels.labels])
    # Items without labels contribute log sum_c prior(c) = 0.
    return float(np.sum(logsumexp(acc, axis=1)))


def dawid_skene_em(labels: LabelMatrix, max_iters: int = 100, tol: float = 1e-8,
                   smoothing: float = 0.01, uniform_prior: bool = False):
    """Standard Dawid-Skene EM, initialized from the majority-vote posterior.

    Laplace smoothing in the M-step avoids zero-probability lock-in; rows that
    receive no mass fall back to uniform. Returns (posterior, DSParams, trace).
    """
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    posterior, _ = majority_vote(labels)
    trace = []
    for _ in range(max_iters):
        confusion, prior = _ds_m_step(labels, posterior, smoothing, uniform_prior)
        posterior, _ = _ds_e_step(labels, confusion, prior)
        trace.append(ds_marginal_loglik(labels, DSParams(confusion, prior)))
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < tol * max(1.0, abs(trace[-2])):
            break
    return posterior, DSParams(confusion, prior), trace
