"""Combining the gesture posterior with the affordance-words network.

Three strategies:

* ``hard``: the recognizer's most probable action is clamped in the network.
* ``soft``: the gesture posterior enters the network as virtual evidence on
  Action.
* ``product``: the gesture posterior and the network's own Action posterior
  are treated as independent opinions and multiplied (Action queries only).
"""

import enum
from typing import Union

import numpy as np

from .bayesnet import AffordanceNetwork, Evidence, LabelDistribution, posterior
from .domain import ACTION
from .errors import (
    ConfigError,
    InvalidEvidence,
    InvalidStrategy,
    ZeroFusion,
    ZeroProbabilityEvidence,
)


class FusionStrategy(enum.Enum):
    HARD = "hard"
    SOFT = "soft"
    PRODUCT = "product"

    def __str__(self) -> str:
        return self.value


STRATEGY_CHOICES = tuple(s.value for s in FusionStrategy)


def parse_strategy(text: Union[str, FusionStrategy]) -> FusionStrategy:
    if isinstance(text, FusionStrategy):
        return text
    try:
        return FusionStrategy(text.strip().lower())
    except ValueError:
        raise ConfigError(
            f"Unknown fusion strategy '{text}' "
            f"(expected one of: {', '.join(STRATEGY_CHOICES)})"
        ) from None


def combine_independent(
    p_hmm: LabelDistribution, p_bn: LabelDistribution
) -> LabelDistribution:
    """Normalized elementwise product of two distributions over one domain.

    Raises:
        ZeroFusion: if the two distributions share no mass.
    """
    if p_hmm.domain != p_bn.domain:
        raise ValueError(
            f"Cannot combine {p_hmm.domain.name} with {p_bn.domain.name} distributions"
        )
    product = p_hmm.vector * p_bn.vector
    total = product.sum()
    if not total > 0.0:
        raise ZeroFusion(
            f"Gesture posterior {p_hmm.as_dict()} and network posterior "
            f"{p_bn.as_dict()} have no {p_hmm.domain.name} value in common"
        )
    return LabelDistribution(p_hmm.domain, tuple((product / total).tolist()))


def _action_evidence(
    hmm_posterior: LabelDistribution, evidence: Evidence, strategy: FusionStrategy
) -> Evidence:
    if strategy is FusionStrategy.HARD:
        return evidence.with_hard(ACTION.name, hmm_posterior.argmax())
    return evidence.with_soft(ACTION.name, hmm_posterior.probs)


def _check_action_free(evidence: Evidence):
    if ACTION.name in evidence:
        raise InvalidEvidence(
            "Evidence must not mention Action; it comes from the gesture posterior"
        )


def fuse_action(
    hmm_posterior: LabelDistribution,
    net: AffordanceNetwork,
    evidence: Evidence,
    strategy: FusionStrategy,
) -> LabelDistribution:
    """Distribution over Action combining the recognizer with the network."""
    _check_action_free(evidence)
    if strategy is FusionStrategy.HARD:
        return LabelDistribution.one_hot(hmm_posterior.domain, hmm_posterior.argmax())
    if strategy is FusionStrategy.PRODUCT:
        return combine_independent(hmm_posterior, posterior(net, evidence, ACTION.name))
    fused = _action_evidence(hmm_posterior, evidence, strategy)
    try:
        return posterior(net, fused, ACTION.name)
    except ZeroProbabilityEvidence as e:
        raise ZeroFusion(
            f"Gesture posterior {hmm_posterior.as_dict()} is incompatible with "
            f"the evidence"
        ) from e


def predict_downstream(
    hmm_posterior: LabelDistribution,
    net: AffordanceNetwork,
    evidence: Evidence,
    query: str,
    strategy: FusionStrategy,
) -> LabelDistribution:
    """Posterior of ``query`` (symbolic variable or word) after fusing Action.

    Raises:
        InvalidStrategy: for the product strategy, defined for Action only.
        InvalidEvidence: if ``query`` is Action or already in the evidence.
    """
    if strategy is FusionStrategy.PRODUCT:
        raise InvalidStrategy(strategy.value, query)
    if query == ACTION.name:
        raise InvalidEvidence("Use fuse_action to query Action")
    _check_action_free(evidence)
    if query in evidence:
        raise InvalidEvidence(f"Query {query} already has evidence")
    return posterior(net, _action_evidence(hmm_posterior, evidence, strategy), query)


def fusion_consistency(
    net: AffordanceNetwork, evidence: Evidence, query: str, label: str
) -> float:
    """Largest gap between hard and one-hot soft fusion on ``query``.

    Both clamp Action to ``label``, so the gap should be rounding noise.
    """
    one_hot = LabelDistribution.one_hot(net.domain(ACTION.name), label)
    hard = predict_downstream(one_hot, net, evidence, query, FusionStrategy.HARD)
    soft = predict_downstream(one_hot, net, evidence, query, FusionStrategy.SOFT)
    return float(np.max(np.abs(hard.vector - soft.vector)))
