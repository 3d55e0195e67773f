"""Gesture recognition: one HMM per action, combined into p_HMM(Action)."""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .bayesnet import LabelDistribution
from .domain import ACTION, SymbolicDomain
from .errors import EmptyTrainingSet, MalformedData
from .hmm import GestureHmm, TrainingResult, forward_log_likelihood, train_hmm
from .logging_setup import get_logger
from .trajectory import (
    DEFAULT_RATE,
    FeatureSequence,
    ManifestEntry,
    preprocess,
    read_trajectory_csv,
)

logger = get_logger("gesture")

MODELS_FORMAT = "gesture-models/1"
PRIOR_CHOICES = ("uniform", "empirical")

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class GestureModelSet:
    """One trained HMM per Action value plus class priors.

    ``rate`` is the sample rate the models were trained at; trajectories must
    be preprocessed at the same rate before scoring.
    """

    models: Mapping[str, GestureHmm]
    priors: LabelDistribution
    rate: float = DEFAULT_RATE

    def __post_init__(self):
        object.__setattr__(self, "models", dict(self.models))
        labels = set(self.priors.domain.values)
        if set(self.models) != labels:
            raise ValueError(
                f"Need exactly one model per {self.domain.name} value "
                f"{sorted(labels)}, got {sorted(self.models)}"
            )
        for label, hmm in self.models.items():
            if hmm.label != label:
                raise ValueError(
                    f"Model stored under '{label}' is labelled '{hmm.label}'"
                )
        if len({hmm.dim for hmm in self.models.values()}) != 1:
            raise ValueError("All gesture models must share one feature dimension")

    @property
    def domain(self) -> SymbolicDomain:
        return self.priors.domain

    def __iter__(self):
        return (self.models[label] for label in self.domain.values)


def log_likelihoods(models: GestureModelSet, seq: FeatureSequence) -> np.ndarray:
    """Forward log-likelihood of ``seq`` under each model, in domain order."""
    return np.array([forward_log_likelihood(hmm, seq) for hmm in models])


def posterior_from_log_likelihoods(
    domain: SymbolicDomain,
    log_liks: Sequence[float],
    priors: Optional[LabelDistribution] = None,
) -> LabelDistribution:
    """Bayes rule in log space; zero-prior classes get exactly zero."""
    scores = np.asarray(log_liks, dtype=float)
    if priors is not None:
        with np.errstate(divide="ignore"):
            scores = scores + np.log(priors.vector)
    scores = scores - logsumexp(scores)
    return LabelDistribution(domain, tuple(np.exp(scores).tolist()))


def classify(models: GestureModelSet, seq: FeatureSequence) -> LabelDistribution:
    """p_HMM(Action | seq)."""
    return posterior_from_log_likelihoods(
        models.domain, log_likelihoods(models, seq), models.priors
    )


def load_sequences(
    entries: Iterable[ManifestEntry],
    rate: float = DEFAULT_RATE,
    domain: SymbolicDomain = ACTION,
) -> dict[str, list[FeatureSequence]]:
    """Read and preprocess every manifest entry, grouped by action label."""
    grouped: dict[str, list[FeatureSequence]] = {label: [] for label in domain.values}
    for entry in entries:
        domain.index(entry.action)
        grouped[entry.action].append(preprocess(read_trajectory_csv(entry.file), rate))
    logger.debug(
        "Loaded gestures: %s",
        ", ".join(f"{label}={len(seqs)}" for label, seqs in grouped.items()),
    )
    return grouped


def train_model_set(
    sequences_by_label: Mapping[str, Sequence[FeatureSequence]],
    n_states: int = 5,
    n_mixtures: int = 2,
    max_iters: int = 100,
    tol: float = 1e-6,
    workers: int = 1,
    priors: str = "uniform",
    rate: float = DEFAULT_RATE,
    domain: SymbolicDomain = ACTION,
) -> tuple[GestureModelSet, dict[str, TrainingResult]]:
    """Train one HMM per label, optionally on ``workers`` threads.

    Returns the model set and the per-label training results (for traces).

    Raises:
        EmptyTrainingSet: if any label has no sequences.
        ValueError: for an unknown ``priors`` choice.
    """
    if priors not in PRIOR_CHOICES:
        raise ValueError(f"priors must be one of {PRIOR_CHOICES}, got '{priors}'")
    for label in domain.values:
        if not sequences_by_label.get(label):
            raise EmptyTrainingSet(f"No training gestures for '{label}'")

    def fit(label: str) -> TrainingResult:
        return train_hmm(
            sequences_by_label[label],
            n_states=n_states,
            n_mixtures=n_mixtures,
            max_iters=max_iters,
            tol=tol,
            label=label,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(domain.values, pool.map(fit, domain.values)))
    else:
        results = {label: fit(label) for label in domain.values}

    if priors == "empirical":
        prior = LabelDistribution.from_weights(
            domain, [len(sequences_by_label[label]) for label in domain.values]
        )
    else:
        prior = LabelDistribution.uniform(domain)
    models = GestureModelSet(
        {label: result.hmm for label, result in results.items()}, prior, rate
    )
    return models, results


def models_to_dict(models: GestureModelSet) -> dict:
    return {
        "format": MODELS_FORMAT,
        "rate": models.rate,
        "domain": models.domain.to_dict(),
        "priors": list(models.priors.probs),
        "models": {hmm.label: hmm.to_dict() for hmm in models},
    }


def models_from_dict(data: Mapping, source: str = "<models>") -> GestureModelSet:
    if data.get("format") != MODELS_FORMAT:
        raise MalformedData(source, f"expected format {MODELS_FORMAT!r}")
    try:
        domain = SymbolicDomain.from_dict(data["domain"])
        return GestureModelSet(
            {label: GestureHmm.from_dict(m) for label, m in data["models"].items()},
            LabelDistribution(domain, tuple(data["priors"])),
            float(data["rate"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedData(source, f"invalid gesture models ({e})") from e


def save_models(path: PathLike, models: GestureModelSet):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(models_to_dict(models), f, sort_keys=True, indent=2)
        f.write("\n")


def load_models(path: PathLike) -> GestureModelSet:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise MalformedData(str(path), f"not JSON ({e})") from e
    return models_from_dict(data, str(path))
