"""Tests for evaluation metrics and random networks."""

import unittest

import numpy as np

from affordance_words.bayesnet import learn_cpts
from affordance_words.domain import ACTION
from affordance_words.evaluation import (
    accuracy,
    confusion_matrix,
    oracle_max_error,
    random_evidence,
    random_network,
)
from affordance_words.simgen import UtteranceGrammar, WorldTable, generate_records


class TestMetrics(unittest.TestCase):
    """Tests for accuracy and confusion_matrix."""

    def test_accuracy(self):
        """Fraction of matching labels."""
        truth, predicted = ["tap", "tap", "grasp"], ["tap", "touch", "grasp"]
        self.assertEqual(accuracy(truth, predicted), 2 / 3)
        self.assertEqual(accuracy([], []), 0.0)

    def test_accuracy_length_mismatch(self):
        """Both lists must line up."""
        with self.assertRaises(ValueError):
            accuracy(["tap"], [])

    def test_confusion_rows_are_truth(self):
        """Rows index the true label, columns the prediction."""
        matrix = confusion_matrix(
            ACTION, ["grasp", "tap", "tap", "touch"], ["grasp", "touch", "tap", "tap"]
        )
        self.assertEqual(matrix, [[1, 0, 0], [0, 1, 1], [0, 1, 0]])


class TestRandomNetworks(unittest.TestCase):
    """Tests for the random networks used to check inference."""

    def test_networks_are_valid(self):
        """Parents precede children and rows are distributions."""
        rng = np.random.default_rng(1)
        for _ in range(20):
            net = random_network(rng)
            names = [d.name for d in net.domains]
            for i, name in enumerate(names):
                parents = net.cpts[name].parents
                self.assertTrue(all(names.index(p) < i for p in parents))
            for cpt in net.cpts.values():
                np.testing.assert_allclose(cpt.table.sum(axis=-1), 1.0)

    def test_evidence_skips_query(self):
        """The query is never clamped."""
        rng = np.random.default_rng(2)
        net = random_network(rng)
        query = net.variables[0]
        for _ in range(20):
            self.assertNotIn(query, random_evidence(rng, net, query).hard)

    def test_oracle_agreement(self):
        """Inference matches enumeration on random networks."""
        rng = np.random.default_rng(3)
        for _ in range(10):
            self.assertLessEqual(oracle_max_error(random_network(rng), rng, 20), 1e-9)

    def test_oracle_without_smoothing(self):
        """Evidence impossible under unsmoothed counts is skipped, not fatal."""
        records = generate_records(30000, WorldTable(), UtteranceGrammar(), seed=3)
        net = learn_cpts(records, alpha=0.0)
        error = oracle_max_error(net, np.random.default_rng(0), 200)
        self.assertLessEqual(error, 1e-9)


if __name__ == "__main__":
    unittest.main()
