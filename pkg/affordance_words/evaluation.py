"""Metrics and experiments run by ``eval``."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bayesnet import (
    AffordanceNetwork,
    Cpt,
    Evidence,
    LabelDistribution,
    enumerate_posterior,
    posterior,
    word_delta,
)
from .domain import ACTION, OBJVEL, SHAPE, SIZE, WORD, SymbolicDomain, Vocabulary
from .errors import ZeroFusion, ZeroProbabilityEvidence
from .fusion import FusionStrategy, fuse_action, fusion_consistency, predict_downstream
from .gesture import GestureModelSet, classify
from .logging_setup import get_logger
from .trajectory import FeatureSequence

logger = get_logger("evaluation")


def accuracy(truth: Sequence[str], predicted: Sequence[str]) -> float:
    if len(truth) != len(predicted):
        raise ValueError("truth and predicted differ in length")
    if not truth:
        return 0.0
    return sum(t == p for t, p in zip(truth, predicted)) / len(truth)


def confusion_matrix(
    domain: SymbolicDomain, truth: Sequence[str], predicted: Sequence[str]
) -> list[list[int]]:
    """Counts with true labels as rows and predictions as columns."""
    matrix = np.zeros((len(domain), len(domain)), dtype=int)
    for t, p in zip(truth, predicted):
        matrix[domain.index(t), domain.index(p)] += 1
    return matrix.tolist()


# ---------------------------------------------------------------------------
# Random networks for checking inference against enumeration


def random_network(
    rng: np.random.Generator, max_variables: int = 4, max_words: int = 20
) -> AffordanceNetwork:
    """Random DAG over 1-``max_variables`` variables plus up to ``max_words`` leaves.

    Variable ``Vi`` may only have parents ``Vj`` with ``j < i``; CPT rows are
    Dirichlet(1) draws, so every configuration has positive probability.
    """
    n_vars = int(rng.integers(1, max_variables + 1))
    domains = tuple(
        SymbolicDomain(f"V{i}", tuple(f"v{k}" for k in range(int(rng.integers(2, 4)))))
        for i in range(n_vars)
    )
    n_words = int(rng.integers(0, max_words + 1))
    vocabulary = Vocabulary(tuple(f"w{j}" for j in range(n_words)))
    cpts = {}
    for i, domain in enumerate(domains):
        parents = tuple(d.name for d in domains[:i] if rng.random() < 0.5)
        cpts[domain.name] = _random_cpt(rng, domain.name, parents, domains, len(domain))
    for token in vocabulary:
        parents = tuple(d.name for d in domains if rng.random() < 0.5)
        cpts[token] = _random_cpt(rng, token, parents, domains, len(WORD))
    return AffordanceNetwork(domains, vocabulary, cpts)


def _random_cpt(rng, child, parents, domains, size) -> Cpt:
    sizes = {d.name: len(d) for d in domains}
    shape = tuple(sizes[p] for p in parents)
    rows = rng.dirichlet(np.ones(size), size=int(np.prod(shape, dtype=int)))
    return Cpt(child, parents, rows.reshape(shape + (size,)))


def random_evidence(
    rng: np.random.Generator, net: AffordanceNetwork, query: str
) -> Evidence:
    """Random hard and soft evidence on nodes other than ``query``."""
    hard, soft = {}, {}
    for node in list(net.variables) + list(net.vocabulary):
        if node == query:
            continue
        domain = net.node_domain(node)
        draw = rng.random()
        if draw < 0.3:
            hard[node] = domain.values[int(rng.integers(len(domain)))]
        elif draw < 0.5:
            lik = rng.uniform(0.0, 1.0, len(domain))
            lik[int(rng.integers(len(domain)))] = 1.0
            soft[node] = tuple(lik.tolist())
    if query in net.vocabulary and rng.random() < 0.3:
        soft[query] = tuple(rng.uniform(0.1, 1.0, len(WORD)).tolist())
    return Evidence(hard, soft)


def _posterior_or_none(infer, net, evidence, query) -> Optional[np.ndarray]:
    try:
        return infer(net, evidence, query).vector
    except ZeroProbabilityEvidence:
        return None


def oracle_max_error(
    net: AffordanceNetwork, rng: np.random.Generator, cases: int = 100
) -> float:
    """Largest gap between ``posterior`` and ``enumerate_posterior``.

    Evidence both engines reject as impossible is skipped; a case only one of
    them rejects counts as a gap of 1.
    """
    nodes = list(net.variables) + list(net.vocabulary)
    worst = 0.0
    skipped = 0
    for _ in range(cases):
        query = nodes[int(rng.integers(len(nodes)))]
        evidence = random_evidence(rng, net, query)
        fast = _posterior_or_none(posterior, net, evidence, query)
        slow = _posterior_or_none(enumerate_posterior, net, evidence, query)
        if fast is None and slow is None:
            skipped += 1
        elif fast is None or slow is None:
            logger.warning("Only one inference engine rejected evidence on %s", query)
            worst = 1.0
        else:
            worst = max(worst, float(np.max(np.abs(fast - slow))))
    if skipped:
        logger.debug("Skipped %d impossible evidence draw(s) of %d", skipped, cases)
    return worst


# ---------------------------------------------------------------------------
# Experiments


def effect_prediction(
    net: AffordanceNetwork,
    hmm_posterior: LabelDistribution,
    shape: str,
    size: str,
    strategy: FusionStrategy,
) -> LabelDistribution:
    """p(ObjVel | Shape, Size, gesture evidence)."""
    evidence = Evidence(hard={SHAPE.name: shape, SIZE.name: size})
    return predict_downstream(hmm_posterior, net, evidence, OBJVEL.name, strategy)


@dataclass(frozen=True)
class HeldoutGesture:
    """A held-out gesture with the object context it was generated in."""

    action: str
    sequence: FeatureSequence
    context: Optional[dict] = None


@dataclass
class EvaluationReport:
    labels: tuple[str, ...]
    accuracy: float
    confusion: list[list[int]]
    oracle_max_error: float
    fusion_max_gap: float
    fused_accuracy: dict[str, float] = field(default_factory=dict)
    effect_predictions: dict[str, dict] = field(default_factory=dict)
    word_deltas: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "accuracy": self.accuracy,
            "confusion": self.confusion,
            "oracle_max_error": self.oracle_max_error,
            "fusion_max_gap": self.fusion_max_gap,
            "fused_accuracy": self.fused_accuracy,
            "effect_predictions": self.effect_predictions,
            "word_deltas": self.word_deltas,
        }


EFFECT_CASES = (("sphere", "small"), ("box", "big"))
DELTA_FEATURES = {SIZE.name: "big", SHAPE.name: "sphere"}
DELTA_EFFECTS = {OBJVEL.name: "fast"}


def evaluate(
    models: GestureModelSet,
    net: AffordanceNetwork,
    heldout: Sequence[HeldoutGesture],
    seed: int = 0,
    oracle_cases: int = 200,
) -> EvaluationReport:
    """Gesture accuracy, inference and fusion checks, and both experiments."""
    domain = models.domain
    posteriors = [classify(models, g.sequence) for g in heldout]
    truth = [g.action for g in heldout]
    predicted = [p.argmax() for p in posteriors]
    acc = accuracy(truth, predicted)
    logger.info("Gesture accuracy %.4f on %d held-out sequences", acc, len(heldout))

    rng = np.random.default_rng(seed)
    oracle_error = oracle_max_error(net, rng, oracle_cases)
    logger.debug("Network vs enumeration max error %.3g", oracle_error)

    gap = 0.0
    for action in domain.values:
        for shape, size in EFFECT_CASES:
            evidence = Evidence(hard={SHAPE.name: shape, SIZE.name: size})
            gap = max(gap, fusion_consistency(net, evidence, OBJVEL.name, action))

    fused = {}
    with_context = [(g, p) for g, p in zip(heldout, posteriors) if g.context]
    if with_context:
        for strategy in FusionStrategy:
            hits = []
            for gesture, p_hmm in with_context:
                evidence = Evidence(
                    hard={
                        SHAPE.name: gesture.context["shape"],
                        SIZE.name: gesture.context["size"],
                        OBJVEL.name: gesture.context["objvel"],
                    }
                )
                try:
                    guess = fuse_action(p_hmm, net, evidence, strategy).argmax()
                except (ZeroFusion, ZeroProbabilityEvidence):
                    # counted as a miss
                    guess = None
                hits.append(guess == gesture.action)
            fused[strategy.value] = sum(hits) / len(hits)

    tap = LabelDistribution.one_hot(net.domain(ACTION.name), "tap")
    effects = {
        f"{shape}/{size}": effect_prediction(
            net, tap, shape, size, FusionStrategy.HARD
        ).as_dict()
        for shape, size in EFFECT_CASES
    }
    deltas = word_delta(net, DELTA_FEATURES, DELTA_EFFECTS, "tap")

    return EvaluationReport(
        labels=domain.values,
        accuracy=acc,
        confusion=confusion_matrix(domain, truth, predicted),
        oracle_max_error=oracle_error,
        fusion_max_gap=gap,
        fused_accuracy=fused,
        effect_predictions=effects,
        word_deltas=deltas,
    )
