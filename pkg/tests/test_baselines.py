import numpy as np
import pytest

from mmce import synthetic
from mmce.baselines import (
    DSParams,
    _ds_e_step,
    dawid_skene_em,
    ds_marginal_loglik,
    majority_vote,
)
from mmce.data import from_triples
from mmce.solver import HyperParams, e_step, initialize_posterior


class TestMajorityVote:
    def test_three_worker_table(self, three_worker_labels):
        posterior, pred = majority_vote(three_worker_labels)
        # items 0 and 1 have a 2-1 majority for class 0
        assert pred[0] == 0 and pred[1] == 0
        np.testing.assert_allclose(posterior[0], [2 / 3, 1 / 3, 0.0])

    def test_tie_breaks_to_lowest_label(self):
        lm = from_triples([("a", "i", 1), ("b", "i", 0)], 2)
        posterior, pred = majority_vote(lm)
        np.testing.assert_allclose(posterior[0], [0.5, 0.5])
        assert pred[0] == 0

    def test_unlabeled_item_gets_uniform_row(self):
        lm = from_triples([("a", "i", 1)], 2, item_ids=["i", "ghost"])
        posterior, pred = majority_vote(lm)
        np.testing.assert_allclose(posterior[1], [0.5, 0.5])
        assert pred[1] == 0

    def test_equals_initial_posterior(self, three_worker_labels):
        posterior, _ = majority_vote(three_worker_labels)
        np.testing.assert_array_equal(posterior, initialize_posterior(three_worker_labels))


class TestDawidSkene:
    def test_perfect_agreement_is_a_fixed_point(self):
        # every worker gives the same label per item: the MV posterior is
        # already one-hot and unsmoothed EM cannot move it
        truth = [0, 1, 2, 1, 0, 2]
        triples = [(f"w{i}", f"i{j}", t) for i in range(4) for j, t in enumerate(truth)]
        lm = from_triples(triples, 3)
        posterior, params, _ = dawid_skene_em(lm, smoothing=0.0)
        expected = np.eye(3)[truth]
        np.testing.assert_allclose(posterior, expected, atol=1e-12)

    def test_recovers_planted_accuracy(self):
        m, n, K = 30, 200, 2
        conf = np.stack([synthetic.diagonal_confusion(K, 0.8)] * m)
        lm, gold = synthetic.sample_labels(m, n, K, 5, conf, seed=11)
        posterior, params, _ = dawid_skene_em(lm)
        diag = np.einsum("ikk->ik", params.confusion).mean()
        assert diag == pytest.approx(0.8, abs=0.02)
        pred = np.argmax(posterior, axis=1)
        truth = np.array([gold.by_item[j] for j in range(n)])
        # five labels per item at 0.8 accuracy leaves an irreducible ~6% error
        assert np.mean(pred != truth) < 0.08

    def test_loglik_trace_non_decreasing_unsmoothed(self):
        # EM monotonicity holds when the M-step is the exact MLE (no smoothing);
        # dense instances keep every confusion row populated
        for seed in range(10):
            rng = np.random.default_rng(seed)
            m, n, K = 4, 12, 3
            triples = [(f"w{i}", f"i{j}", int(rng.integers(K)))
                       for i in range(m) for j in range(n)]
            lm = from_triples(triples, K)
            _, _, trace = dawid_skene_em(lm, smoothing=0.0, max_iters=40)
            assert np.all(np.diff(trace) >= -1e-9)

    def test_e_step_matches_mmce_e_step(self):
        # with worker scores set to log confusion rows, zero item scores, and a
        # uniform prior, both models assign identical posteriors
        lm = synthetic.random_instance(23)
        m, K = lm.num_workers, lm.num_classes
        rng = np.random.default_rng(5)
        conf = rng.dirichlet(np.ones(K) * 3, size=(m, K))
        ds_posterior, _ = _ds_e_step(lm, conf, np.full(K, 1.0 / K))
        sigma = np.log(conf)
        tau = np.zeros((lm.num_items, K, K))
        q = e_step(lm, sigma, tau, HyperParams(alpha=1.0, beta=1.0))
        np.testing.assert_allclose(q, ds_posterior, atol=1e-10)

    def test_marginal_loglik_closed_form(self):
        # one worker, one item, known prior: log sum_c pi(c) p(x | c)
        lm = from_triples([("w", "i", 1)], 2)
        conf = np.array([[[0.7, 0.3], [0.2, 0.8]]])
        prior = np.array([0.6, 0.4])
        ll = ds_marginal_loglik(lm, DSParams(conf, prior))
        assert ll == pytest.approx(np.log(0.6 * 0.3 + 0.4 * 0.8))

    def test_negative_smoothing_rejected(self):
        lm = from_triples([("w", "i", 0)], 2)
        with pytest.raises(ValueError):
            dawid_skene_em(lm, smoothing=-0.1)
