"""Tests for the affordance-words Bayesian network."""

import os
import tempfile
import unittest

import numpy as np

from affordance_words.bayesnet import (
    DEFAULT_STRUCTURE,
    AffordanceNetwork,
    Cpt,
    Evidence,
    LabelDistribution,
    NetworkStructure,
    enumerate_posterior,
    learn_cpts,
    load_network,
    most_probable_description,
    posterior,
    save_network,
    word_delta,
    word_posterior,
    word_posteriors,
)
from affordance_words.domain import (
    ACTION,
    OBJVEL,
    SHAPE,
    SIZE,
    ExperimentRecord,
    Vocabulary,
)
from affordance_words.errors import (
    ConfigError,
    EmptyRow,
    InvalidEvidence,
    UnknownLabel,
    UnknownWord,
    ZeroProbabilityEvidence,
)
from affordance_words.evaluation import random_evidence, random_network

ROOTS_ONLY = NetworkStructure(
    parents={"Action": (), "Shape": (), "Size": (), "ObjVel": ()},
    word_parents=(),
)


def _record(action, shape="sphere", size="small", objvel="fast", words=("ball",)):
    return ExperimentRecord(action, shape, size, objvel, frozenset(words))


def _rolling_network() -> AffordanceNetwork:
    """Two variables; 'rolls' is said exactly when a tap makes the object fast."""
    rolls = np.zeros((3, 3, 2))
    rolls[..., 0] = 1.0
    rolls[ACTION.index("tap"), OBJVEL.index("fast")] = (0.0, 1.0)
    cpts = {
        "Action": Cpt("Action", (), np.full(3, 1 / 3)),
        "ObjVel": Cpt("ObjVel", (), np.full(3, 1 / 3)),
        "rolls": Cpt("rolls", ("Action", "ObjVel"), rolls),
        "the": Cpt("the", (), np.array([0.2, 0.8])),
    }
    return AffordanceNetwork((ACTION, OBJVEL), Vocabulary(("rolls", "the")), cpts)


def _sample_records():
    return [
        _record("tap", "sphere", "small", "fast", ("rolls", "ball", "tap")),
        _record("tap", "box", "big", "slow", ("slides", "box", "push")),
        _record("grasp", "sphere", "big", "slow", ("lifts", "ball")),
        _record("touch", "box", "small", "slow", ("still", "box", "touch")),
        _record("tap", "sphere", "big", "fast", ("rolls", "ball")),
    ]


class TestLabelDistribution(unittest.TestCase):
    """Tests for LabelDistribution."""

    def test_from_weights_normalizes(self):
        """Weights are scaled to sum to one."""
        dist = LabelDistribution.from_weights(ACTION, [2, 1, 1])
        self.assertEqual(dist.probs, (0.5, 0.25, 0.25))

    def test_rejects_bad_weights(self):
        """Negative or all-zero weights are rejected."""
        with self.assertRaises(ValueError):
            LabelDistribution.from_weights(ACTION, [1, -1, 1])
        with self.assertRaises(ValueError):
            LabelDistribution.from_weights(ACTION, [0, 0, 0])

    def test_rejects_unnormalized(self):
        """Direct construction requires a distribution."""
        with self.assertRaises(ValueError):
            LabelDistribution(ACTION, (0.5, 0.5, 0.5))

    def test_argmax_tie_goes_to_first(self):
        """Ties resolve to the earliest canonical value."""
        self.assertEqual(LabelDistribution.uniform(ACTION).argmax(), "grasp")

    def test_one_hot(self):
        """one_hot puts all mass on one label."""
        dist = LabelDistribution.one_hot(ACTION, "touch")
        self.assertEqual(dist.probs, (0.0, 0.0, 1.0))
        self.assertEqual(dist.prob("touch"), 1.0)


class TestEvidence(unittest.TestCase):
    """Tests for Evidence."""

    def test_hard_and_soft_on_same_variable(self):
        """A variable cannot carry both kinds of evidence."""
        with self.assertRaises(InvalidEvidence):
            Evidence(hard={"Action": "tap"}, soft={"Action": (0.2, 0.5, 0.3)})

    def test_soft_needs_positive_entry(self):
        """An all-zero likelihood is not evidence."""
        with self.assertRaises(InvalidEvidence):
            Evidence(soft={"Action": (0.0, 0.0, 0.0)})

    def test_with_hard_replaces_soft(self):
        """with_hard drops soft evidence on the same variable."""
        ev = Evidence(soft={"Action": (1.0, 0.0, 0.0)}).with_hard("Action", "tap")
        self.assertEqual(ev.hard, {"Action": "tap"})
        self.assertEqual(ev.soft, {})
        self.assertIn("Action", ev)


class TestNetworkStructure(unittest.TestCase):
    """Tests for NetworkStructure."""

    def test_default_is_valid(self):
        """The default structure validates against the default domains."""
        DEFAULT_STRUCTURE.validate((ACTION, SHAPE, SIZE, OBJVEL))

    def test_cycle_rejected(self):
        """Cycles between symbolic variables are configuration errors."""
        structure = NetworkStructure(
            parents={
                "Action": ("ObjVel",),
                "Shape": (),
                "Size": (),
                "ObjVel": ("Action",),
            },
            word_parents=(),
        )
        with self.assertRaises(ConfigError):
            structure.validate((ACTION, SHAPE, SIZE, OBJVEL))

    def test_unknown_parent_rejected(self):
        """Word parents must be symbolic variables."""
        structure = NetworkStructure(
            parents=DEFAULT_STRUCTURE.parents, word_parents=("Colour",)
        )
        with self.assertRaises(ConfigError):
            structure.validate((ACTION, SHAPE, SIZE, OBJVEL))

    def test_missing_variable_rejected(self):
        """Every variable must appear in the structure."""
        structure = NetworkStructure(parents={"Action": ()}, word_parents=())
        with self.assertRaises(ConfigError):
            structure.validate((ACTION, SHAPE, SIZE, OBJVEL))

    def test_dict_round_trip(self):
        """to_dict/from_dict preserve parents and overrides."""
        structure = NetworkStructure(
            parents=DEFAULT_STRUCTURE.parents,
            word_parents=("Action",),
            word_overrides={"ball": ("Shape",)},
        )
        self.assertEqual(NetworkStructure.from_dict(structure.to_dict()), structure)

    def test_from_dict_missing_keys(self):
        """A structure without nodes is a configuration error."""
        with self.assertRaises(ConfigError):
            NetworkStructure.from_dict({"words": []})


class TestLearnCpts(unittest.TestCase):
    """Tests for learn_cpts."""

    def test_maximum_likelihood_prior(self):
        """alpha=0 gives relative frequencies."""
        records = [_record("grasp"), _record("grasp"), _record("tap"), _record("touch")]
        net = learn_cpts(records, ROOTS_ONLY, alpha=0.0)
        np.testing.assert_allclose(net.cpts["Action"].table, [0.5, 0.25, 0.25])

    def test_laplace_smoothing(self):
        """One tap record with alpha=1 gives (1, 2, 1) / 4."""
        net = learn_cpts([_record("tap")], DEFAULT_STRUCTURE, alpha=1.0)
        np.testing.assert_allclose(net.cpts["Action"].table, [0.25, 0.5, 0.25])

    def test_no_records_gives_uniform_rows(self):
        """Without data every smoothed row is uniform."""
        net = learn_cpts([], alpha=1.0, vocabulary=Vocabulary(("ball",)))
        for cpt in net.cpts.values():
            rows = cpt.rows
            np.testing.assert_allclose(rows, np.full_like(rows, 1.0 / rows.shape[1]))

    def test_rows_sum_to_one(self):
        """Every learned row is a distribution."""
        net = learn_cpts(_sample_records(), alpha=0.5)
        for cpt in net.cpts.values():
            np.testing.assert_allclose(cpt.rows.sum(axis=1), 1.0, atol=1e-12)

    def test_record_order_does_not_matter(self):
        """Shuffled records learn identical tables."""
        records = _sample_records() * 3
        order = np.random.default_rng(8).permutation(len(records))
        shuffled = [records[i] for i in order]
        net = learn_cpts(records, alpha=0.5)
        other = learn_cpts(shuffled, alpha=0.5)
        self.assertEqual(net.vocabulary, other.vocabulary)
        self.assertEqual(list(net.cpts), list(other.cpts))
        for name, cpt in net.cpts.items():
            self.assertEqual(cpt.parents, other.cpts[name].parents)
            np.testing.assert_array_equal(cpt.table, other.cpts[name].table)

    def test_empty_row_without_smoothing(self):
        """alpha=0 and an unseen parent configuration raise EmptyRow."""
        with self.assertRaises(EmptyRow) as ctx:
            learn_cpts([_record("tap")], DEFAULT_STRUCTURE, alpha=0.0)
        self.assertEqual(ctx.exception.child, "ObjVel")

    def test_negative_alpha(self):
        """alpha must be non-negative."""
        with self.assertRaises(ValueError):
            learn_cpts(_sample_records(), alpha=-1.0)

    def test_unknown_label(self):
        """Out-of-domain records are rejected."""
        with self.assertRaises(UnknownLabel):
            learn_cpts([_record("push")])

    def test_words_outside_vocabulary_ignored(self):
        """Only vocabulary tokens become nodes."""
        net = learn_cpts(_sample_records(), vocabulary=Vocabulary(("ball", "box")))
        expected = {"Action", "Shape", "Size", "ObjVel", "ball", "box"}
        self.assertEqual(set(net.cpts), expected)

    def test_word_override_parents(self):
        """Overridden words get their own parents."""
        structure = NetworkStructure(
            parents=DEFAULT_STRUCTURE.parents,
            word_parents=DEFAULT_STRUCTURE.word_parents,
            word_overrides={"ball": ("Shape",)},
        )
        net = learn_cpts(_sample_records(), structure)
        self.assertEqual(net.cpts["ball"].parents, ("Shape",))
        self.assertEqual(net.cpts["box"].parents, DEFAULT_STRUCTURE.word_parents)


class TestPosterior(unittest.TestCase):
    """Tests for exact inference."""

    def setUp(self):
        self.net = learn_cpts(_sample_records(), alpha=1.0)

    def test_fully_observed_parents_give_cpt_row(self):
        """Clamping every parent of ObjVel returns its CPT row."""
        evidence = Evidence(hard={"Action": "tap", "Shape": "sphere", "Size": "small"})
        dist = posterior(self.net, evidence, "ObjVel")
        row = self.net.cpts["ObjVel"].table[
            ACTION.index("tap"), SHAPE.index("sphere"), SIZE.index("small")
        ]
        np.testing.assert_allclose(dist.vector, row, atol=1e-12)

    def test_no_evidence_root_is_prior(self):
        """A root with no evidence below it keeps its prior."""
        dist = posterior(self.net, Evidence(), "Action")
        np.testing.assert_allclose(dist.vector, self.net.cpts["Action"].table)

    def test_one_hot_soft_equals_hard(self):
        """One-hot virtual evidence is the same as clamping."""
        base = Evidence(hard={"Shape": "box", "Size": "big"})
        hard = posterior(self.net, base.with_hard("Action", "tap"), "ObjVel")
        soft = posterior(self.net, base.with_soft("Action", (0, 1, 0)), "ObjVel")
        np.testing.assert_allclose(hard.vector, soft.vector, atol=1e-12)

    def test_word_evidence_shifts_action(self):
        """Hearing 'rolls' makes tap more likely."""
        prior = posterior(self.net, Evidence(), "Action").prob("tap")
        heard = posterior(self.net, Evidence(hard={"rolls": "present"}), "Action")
        self.assertGreater(heard.prob("tap"), prior)

    def test_consistent_evidence_keeps_certain_posterior(self):
        """Evidence agreeing with a certain posterior leaves it unchanged."""
        net = _rolling_network()
        heard = Evidence(hard={"rolls": "present"})
        certain = posterior(net, heard, "Action")
        np.testing.assert_allclose(certain.vector, [0.0, 1.0, 0.0], atol=1e-12)
        for variable, label in (("ObjVel", "fast"), ("the", "present")):
            more = posterior(net, heard.with_hard(variable, label), "Action")
            np.testing.assert_allclose(more.vector, certain.vector, atol=1e-12)

    def test_query_with_hard_evidence(self):
        """Querying a clamped variable is invalid."""
        with self.assertRaises(InvalidEvidence):
            posterior(self.net, Evidence(hard={"Action": "tap"}), "Action")

    def test_unknown_query(self):
        """Unknown nodes raise UnknownWord."""
        with self.assertRaises(UnknownWord):
            posterior(self.net, Evidence(), "Colour")

    def test_unknown_evidence_label(self):
        """Evidence values must be in their domain."""
        with self.assertRaises(UnknownLabel):
            posterior(self.net, Evidence(hard={"Size": "huge"}), "Action")

    def test_soft_evidence_length(self):
        """Soft evidence must match the variable's domain size."""
        with self.assertRaises(InvalidEvidence):
            posterior(self.net, Evidence(soft={"Size": (1.0, 0.5)}), "Action")

    def test_matches_enumeration_on_random_networks(self):
        """Posteriors agree with brute-force enumeration to 1e-9."""
        rng = np.random.default_rng(1234)
        worst = 0.0
        for _ in range(1000):
            net = random_network(rng)
            nodes = list(net.variables) + list(net.vocabulary)
            query = nodes[int(rng.integers(len(nodes)))]
            evidence = random_evidence(rng, net, query)
            fast = posterior(net, evidence, query).vector
            slow = enumerate_posterior(net, evidence, query).vector
            worst = max(worst, float(np.max(np.abs(fast - slow))))
        self.assertLessEqual(worst, 1e-9)


class TestWordPosterior(unittest.TestCase):
    """Tests for word occurrence probabilities."""

    def setUp(self):
        self.net = _rolling_network()

    def test_deterministic_word(self):
        """'rolls' is certain after a fast tap and impossible after a grasp."""
        fast_tap = Evidence(hard={"Action": "tap", "ObjVel": "fast"})
        self.assertEqual(word_posterior(self.net, fast_tap, "rolls"), 1.0)
        grasp = Evidence(hard={"Action": "grasp"})
        self.assertEqual(word_posterior(self.net, grasp, "rolls"), 0.0)

    def test_constant_word(self):
        """A parentless word keeps its rate under any evidence."""
        for evidence in (
            Evidence(),
            Evidence(hard={"Action": "touch"}),
            Evidence(hard={"Action": "tap", "ObjVel": "fast"}),
        ):
            self.assertAlmostEqual(word_posterior(self.net, evidence, "the"), 0.8)

    def test_impossible_evidence(self):
        """Hearing 'rolls' after a grasp has probability zero."""
        evidence = Evidence(hard={"Action": "grasp", "rolls": "present"})
        with self.assertRaises(ZeroProbabilityEvidence):
            posterior(self.net, evidence, "ObjVel")

    def test_word_posteriors_matches_single_queries(self):
        """The batch query agrees with per-word queries."""
        evidence = Evidence(hard={"ObjVel": "fast"}, soft={"the": (0.3, 1.0)})
        batch = word_posteriors(self.net, evidence)
        self.assertEqual(list(batch), ["rolls", "the"])
        for token, p in batch.items():
            self.assertAlmostEqual(p, word_posterior(self.net, evidence, token))

    def test_unknown_word(self):
        """Tokens outside the vocabulary raise UnknownWord."""
        with self.assertRaises(UnknownWord):
            word_posterior(self.net, Evidence(), "slides")

    def test_most_probable_description(self):
        """Observed words are left out of the description."""
        evidence = Evidence(hard={"Action": "tap", "ObjVel": "fast"})
        self.assertEqual(
            [t for t, _ in most_probable_description(self.net, evidence, k=2)],
            ["rolls", "the"],
        )
        evidence = evidence.with_hard("rolls", "present")
        ((token, p),) = most_probable_description(self.net, evidence)
        self.assertEqual(token, "the")
        self.assertAlmostEqual(p, 0.8)


class TestWordDelta(unittest.TestCase):
    """Tests for word_delta."""

    def setUp(self):
        structure = NetworkStructure(
            parents=DEFAULT_STRUCTURE.parents,
            word_parents=DEFAULT_STRUCTURE.word_parents,
            word_overrides={"ball": ("Shape",)},
        )
        self.net = learn_cpts(_sample_records(), structure, alpha=1.0)
        self.features = {"Size": "big", "Shape": "sphere"}
        self.effects = {"ObjVel": "fast"}

    def test_independent_word_unchanged(self):
        """A word that does not depend on Action has zero delta."""
        deltas = word_delta(self.net, self.features, self.effects, "tap")
        self.assertAlmostEqual(deltas["ball"], 0.0, places=12)

    def test_sorted_by_magnitude(self):
        """Deltas come back by decreasing absolute value."""
        deltas = word_delta(self.net, self.features, self.effects, "tap")
        magnitudes = [abs(d) for d in deltas.values()]
        self.assertEqual(magnitudes, sorted(magnitudes, reverse=True))
        self.assertEqual(set(deltas), set(self.net.vocabulary))

    def test_matches_posterior_difference(self):
        """Each delta is the difference of two word posteriors."""
        deltas = word_delta(self.net, self.features, self.effects, "tap")
        base = Evidence(hard={**self.features, **self.effects})
        before = word_posterior(self.net, base, "rolls")
        after = word_posterior(self.net, base.with_hard("Action", "tap"), "rolls")
        self.assertAlmostEqual(deltas["rolls"], after - before, places=12)

    def test_action_in_features(self):
        """Action may not already be part of the evidence."""
        with self.assertRaises(InvalidEvidence):
            word_delta(self.net, {"Action": "tap"}, self.effects, "tap")

    def test_unknown_action(self):
        """The added action must be a valid label."""
        with self.assertRaises(UnknownLabel):
            word_delta(self.net, self.features, self.effects, "push")


class TestSaveLoad(unittest.TestCase):
    """Tests for network persistence."""

    def test_round_trip(self):
        """A saved network answers queries exactly like the original."""
        net = learn_cpts(_sample_records(), alpha=1.0)
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "net.json")
            save_network(path, net)
            loaded = load_network(path)
        self.assertEqual(loaded.vocabulary, net.vocabulary)
        self.assertEqual(loaded.alpha, 1.0)
        for node, cpt in net.cpts.items():
            np.testing.assert_array_equal(loaded.cpts[node].table, cpt.table)
        evidence = Evidence(hard={"rolls": "present"})
        np.testing.assert_allclose(
            posterior(loaded, evidence, "Action").vector,
            posterior(net, evidence, "Action").vector,
            atol=1e-12,
        )


if __name__ == "__main__":
    unittest.main()
