"""Left-right HMMs with diagonal Gaussian-mixture emissions.

Each state may only loop or advance to the next state (no skips), the chain
always starts in the first state and the last state is absorbing. Training is
multi-sequence Baum-Welch; the transition mask and the initial distribution
are never changed by it.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import CollapsedState, EmptyTrainingSet
from .logging_setup import get_logger
from .trajectory import FeatureSequence

logger = get_logger("hmm")

VARIANCE_FLOOR = 1e-6
MIN_STATE_OCCUPANCY = 1e-12
ROW_TOLERANCE = 1e-12
LOG_2PI = float(np.log(2.0 * np.pi))


def bakis_mask(n_states: int) -> np.ndarray:
    """Boolean mask of allowed transitions: self-loops and i -> i + 1."""
    return np.eye(n_states, dtype=bool) | np.eye(n_states, k=1, dtype=bool)


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


@dataclass(frozen=True, eq=False)
class GestureHmm:
    """Parameters of one gesture class: transitions, start and GMM emissions.

    Shapes: ``trans`` (Q, Q), ``pi`` (Q,), ``weights`` (Q, M), ``means`` and
    ``variances`` (Q, M, D).
    """

    label: str
    trans: np.ndarray
    pi: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        for name in ("trans", "pi", "weights", "means", "variances"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._check()

    def _check(self):
        q = len(self.pi)
        if q < 1 or self.trans.shape != (q, q):
            raise ValueError(f"trans must be {q}x{q}, got {self.trans.shape}")
        if self.weights.ndim != 2 or self.weights.shape[0] != q:
            raise ValueError(f"weights must have {q} rows, got {self.weights.shape}")
        m = self.weights.shape[1]
        if self.means.ndim != 3 or self.means.shape[:2] != (q, m):
            raise ValueError(f"means must be ({q}, {m}, D), got {self.means.shape}")
        if self.variances.shape != self.means.shape:
            raise ValueError("variances and means must have the same shape")
        if np.any(self.trans[~bakis_mask(q)] != 0.0) or np.any(self.trans < 0.0):
            raise ValueError("trans must be left-right without skips")
        if np.any(np.abs(self.trans.sum(axis=1) - 1.0) > ROW_TOLERANCE):
            raise ValueError("trans rows must sum to 1")
        if self.trans[-1, -1] != 1.0:
            raise ValueError("the last state must be absorbing")
        start = np.zeros(q)
        start[0] = 1.0
        if not np.array_equal(self.pi, start):
            raise ValueError("pi must put all mass on the first state")
        if np.any(self.weights < 0.0) or np.any(
            np.abs(self.weights.sum(axis=1) - 1.0) > ROW_TOLERANCE
        ):
            raise ValueError("mixture weights must be distributions")
        if np.any(~(self.variances >= VARIANCE_FLOOR)):
            raise ValueError(f"variances must be >= {VARIANCE_FLOOR}")
        if not np.all(np.isfinite(self.means)):
            raise ValueError("means must be finite")

    @property
    def n_states(self) -> int:
        return len(self.pi)

    @property
    def n_mixtures(self) -> int:
        return self.weights.shape[1]

    @property
    def dim(self) -> int:
        return self.means.shape[2]

    def component_log_densities(self, samples: np.ndarray) -> np.ndarray:
        """log(w_jm N(o_t; mu_jm, diag var_jm)), shape (T, Q, M)."""
        diff = samples[:, None, None, :] - self.means[None]
        log_norm = -0.5 * (
            self.dim * LOG_2PI + np.log(self.variances).sum(axis=-1)
        )
        mahalanobis = (diff * diff / self.variances[None]).sum(axis=-1)
        return log_norm[None] - 0.5 * mahalanobis + _log(self.weights)[None]

    def log_emissions(self, samples: np.ndarray) -> np.ndarray:
        """log b_j(o_t), shape (T, Q)."""
        return logsumexp(self.component_log_densities(samples), axis=2)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "trans": self.trans.tolist(),
            "pi": self.pi.tolist(),
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GestureHmm":
        return cls(
            label=data["label"],
            trans=np.asarray(data["trans"], dtype=float),
            pi=np.asarray(data["pi"], dtype=float),
            weights=np.asarray(data["weights"], dtype=float),
            means=np.asarray(data["means"], dtype=float),
            variances=np.asarray(data["variances"], dtype=float),
        )


def forward_log_likelihood(hmm: GestureHmm, seq: FeatureSequence) -> float:
    """log p(seq | model) by the log-space forward recursion."""
    log_b = hmm.log_emissions(seq.samples)
    log_a = _log(hmm.trans)
    log_alpha = _log(hmm.pi) + log_b[0]
    for t in range(1, len(log_b)):
        log_alpha = logsumexp(log_alpha[:, None] + log_a, axis=0) + log_b[t]
    return float(logsumexp(log_alpha))


def viterbi_path(hmm: GestureHmm, seq: FeatureSequence) -> np.ndarray:
    """Most likely state index per sample."""
    log_b = hmm.log_emissions(seq.samples)
    log_a = _log(hmm.trans)
    n = len(log_b)
    delta = _log(hmm.pi) + log_b[0]
    back = np.zeros((n, hmm.n_states), dtype=np.intp)
    for t in range(1, n):
        scores = delta[:, None] + log_a
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(hmm.n_states)] + log_b[t]
    path = np.zeros(n, dtype=np.intp)
    path[-1] = int(np.argmax(delta))
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


@dataclass
class TrainingResult:
    """Trained model plus the total log-likelihood before each M-step."""

    hmm: GestureHmm
    trace: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace)


def initial_hmm(
    label: str,
    sequences: Sequence[FeatureSequence],
    n_states: int,
    n_mixtures: int,
    variance_floor: float = VARIANCE_FLOOR,
) -> GestureHmm:
    """Deterministic starting point from equal-length segmentation.

    Sequence k is cut into ``n_states`` consecutive chunks; state i pools chunk
    i of every sequence. Its components sit at the pooled mean shifted by up to
    one standard deviation along the axis of largest variance, with uniform
    weights and the pooled (floored) diagonal variance.
    """
    dim = sequences[0].dim
    chunks: list[list[np.ndarray]] = [[] for _ in range(n_states)]
    for seq in sequences:
        for i, chunk in enumerate(np.array_split(seq.samples, n_states)):
            if len(chunk):
                chunks[i].append(chunk)

    offsets = np.linspace(-1.0, 1.0, n_mixtures) if n_mixtures > 1 else np.zeros(1)
    means = np.zeros((n_states, n_mixtures, dim))
    variances = np.zeros((n_states, n_mixtures, dim))
    for i in range(n_states):
        if not chunks[i]:
            raise CollapsedState(label, i, 0.0)
        pooled = np.vstack(chunks[i])
        mu = pooled.mean(axis=0)
        var = pooled.var(axis=0)
        axis = int(np.argmax(var))
        means[i] = mu
        means[i, :, axis] += offsets * np.sqrt(var[axis])
        variances[i] = np.maximum(var, variance_floor)

    frames = sum(len(seq) for seq in sequences)
    per_state = frames / (len(sequences) * n_states)
    stay = 1.0 - 1.0 / per_state if per_state > 2.0 else 0.5
    trans = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        trans[i, i] = stay
        trans[i, i + 1] = 1.0 - stay
    trans[-1, -1] = 1.0
    pi = np.zeros(n_states)
    pi[0] = 1.0
    weights = np.full((n_states, n_mixtures), 1.0 / n_mixtures)
    return GestureHmm(label, trans, pi, weights, means, variances)


@dataclass
class _Statistics:
    """Expected counts gathered by one E-step over all sequences."""

    log_likelihood: float
    occupancy: np.ndarray
    transitions: np.ndarray
    responsibilities: list[np.ndarray]
    observations: list[np.ndarray]


def _expectations(hmm: GestureHmm, sequences: Sequence[FeatureSequence]) -> _Statistics:
    """Scaled forward-backward for every sequence.

    Forward variables are renormalized every frame and ``log_c[t]`` keeps the
    log of each normalizer, so the sequence log-likelihood is ``log_c.sum()``.
    Emissions are shifted by the frame's largest reachable term before
    exponentiating; states with a zero scaled forward variable are left out
    of the backward pass.
    """
    q = hmm.n_states
    trans = hmm.trans
    total = 0.0
    occupancy = np.zeros(q)
    transitions = np.zeros((q, q))
    responsibilities = []
    observations = []
    for seq in sequences:
        obs = seq.samples
        log_comp = hmm.component_log_densities(obs)
        log_b = logsumexp(log_comp, axis=2)
        n = len(obs)

        alpha = np.empty((n, q))
        log_c = np.empty(n)
        predicted = hmm.pi
        for t in range(n):
            if t:
                predicted = alpha[t - 1] @ trans
            log_u = _log(predicted) + log_b[t]
            shift = log_u.max()
            u = np.exp(log_u - shift)
            s = u.sum()
            alpha[t] = u / s
            log_c[t] = shift + np.log(s)
        log_lik = float(log_c.sum())

        # b_j(t) / c_t, zero where the scaled forward variable vanished
        ratio = np.exp(np.where(alpha > 0.0, log_b - log_c[:, None], -np.inf))
        beta = np.ones((n, q))
        for t in range(n - 2, -1, -1):
            beta[t] = trans @ (ratio[t + 1] * beta[t + 1])

        gamma = alpha * beta
        if n > 1:
            xi = (
                alpha[:-1, :, None]
                * trans[None]
                * (ratio[1:] * beta[1:])[:, None, :]
            )
            transitions += xi.sum(axis=0)
        # split each state's occupancy across its mixture components
        with np.errstate(invalid="ignore"):
            share = np.exp(log_comp - log_b[:, :, None])
        share = np.nan_to_num(share)
        responsibilities.append(gamma[:, :, None] * share)
        observations.append(obs)
        occupancy += gamma.sum(axis=0)
        total += log_lik
    return _Statistics(total, occupancy, transitions, responsibilities, observations)


def _maximize(
    hmm: GestureHmm, stats: _Statistics, variance_floor: float
) -> GestureHmm:
    q, m, dim = hmm.means.shape
    for state, occ in enumerate(stats.occupancy):
        if occ < MIN_STATE_OCCUPANCY:
            raise CollapsedState(hmm.label, state, float(occ))

    trans = np.array(hmm.trans)
    mask = bakis_mask(q)
    for i in range(q - 1):
        row = np.where(mask[i], stats.transitions[i], 0.0)
        mass = row.sum()
        if mass > 0.0:
            trans[i] = row / mass
    trans[-1] = 0.0
    trans[-1, -1] = 1.0

    comp_occ = sum(r.sum(axis=0) for r in stats.responsibilities)
    first = sum(
        np.einsum("tqm,td->qmd", r, o)
        for r, o in zip(stats.responsibilities, stats.observations)
    )
    alive = comp_occ > MIN_STATE_OCCUPANCY
    means = np.array(hmm.means)
    means[alive] = first[alive] / comp_occ[alive][:, None]
    second = sum(
        np.einsum("tqm,tqmd->qmd", r, (o[:, None, None, :] - means[None]) ** 2)
        for r, o in zip(stats.responsibilities, stats.observations)
    )
    variances = np.array(hmm.variances)
    variances[alive] = np.maximum(
        second[alive] / comp_occ[alive][:, None], variance_floor
    )
    if not np.all(alive):
        logger.warning(
            "%s: %d empty mixture component(s) keep their parameters",
            hmm.label,
            int((~alive).sum()),
        )
    weights = comp_occ / comp_occ.sum(axis=1, keepdims=True)
    return GestureHmm(hmm.label, trans, hmm.pi, weights, means, variances)


def train_hmm(
    sequences: Sequence[FeatureSequence],
    n_states: int = 5,
    n_mixtures: int = 2,
    max_iters: int = 100,
    tol: float = 1e-6,
    label: str = "gesture",
    variance_floor: float = VARIANCE_FLOOR,
    initial: Optional[GestureHmm] = None,
) -> TrainingResult:
    """Baum-Welch for one gesture class.

    Stops after ``max_iters`` E-steps or once the total log-likelihood improves
    by less than ``tol`` relative to the previous iteration. The returned model
    is the one whose log-likelihood is the last trace entry.

    Raises:
        EmptyTrainingSet: if there are no sequences.
        CollapsedState: if a state's total occupancy drops below 1e-12.
    """
    if not sequences:
        raise EmptyTrainingSet(f"No training sequences for '{label}'")
    if n_states < 1 or n_mixtures < 1 or max_iters < 1:
        raise ValueError("n_states, n_mixtures and max_iters must be >= 1")
    dims = {seq.dim for seq in sequences}
    if len(dims) != 1:
        raise ValueError(f"Sequences of mixed dimension {sorted(dims)}")

    hmm = initial or initial_hmm(label, sequences, n_states, n_mixtures, variance_floor)
    result = TrainingResult(hmm)
    for iteration in range(max_iters):
        stats = _expectations(hmm, sequences)
        ll = stats.log_likelihood
        logger.debug("%s: iteration %d log-likelihood %.6f", label, iteration, ll)
        if result.trace:
            previous = result.trace[-1]
            result.trace.append(ll)
            if ll - previous < tol * abs(previous):
                result.converged = True
                break
        else:
            result.trace.append(ll)
        if iteration == max_iters - 1:
            break
        hmm = _maximize(hmm, stats, variance_floor)
        result.hmm = hmm
    logger.info(
        "Trained '%s' (%d states, %d mixtures) on %d sequences: "
        "%d iterations, log-likelihood %.3f%s",
        label,
        hmm.n_states,
        hmm.n_mixtures,
        len(sequences),
        result.iterations,
        result.trace[-1],
        "" if result.converged else " (not converged)",
    )
    return result
