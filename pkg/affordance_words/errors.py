"""Exception hierarchy shared by the library and the command line.

Every user-facing failure derives from :class:`AffordanceError` and carries
the process exit code the CLI returns for it.
"""

from typing import Optional, Sequence


class AffordanceError(Exception):
    """Base class for all affordance-words failures."""

    exit_code = 1


# Exit 2 - invalid arguments or configuration


class ConfigError(AffordanceError):
    """Invalid configuration value or argument combination."""

    exit_code = 2


class InvalidStrategy(ConfigError):
    """Fusion strategy that is not defined for the requested query."""

    def __init__(self, strategy: str, query: str):
        self.strategy = strategy
        self.query = query
        super().__init__(
            f"Fusion strategy '{strategy}' is only defined for Action queries, "
            f"not '{query}'"
        )


# Exit 3 - training failures


class TrainingError(AffordanceError):
    """Model estimation could not complete."""

    exit_code = 3


class EmptyVocabulary(TrainingError):
    """No token reached the vocabulary count threshold."""

    def __init__(self, min_count: int):
        self.min_count = min_count
        super().__init__(f"No word appears in at least {min_count} record(s)")


class EmptyTrainingSet(TrainingError):
    """Nothing to learn from."""


class EmptyRow(TrainingError):
    """A CPT row has no counts and no smoothing mass."""

    def __init__(self, child: str, configuration: dict[str, str]):
        self.child = child
        self.configuration = dict(configuration)
        desc = ", ".join(f"{k}={v}" for k, v in configuration.items()) or "(root)"
        super().__init__(
            f"No observations for {child} under parent configuration {desc} "
            f"and alpha = 0"
        )


class CollapsedState(TrainingError):
    """An HMM state lost all of its occupancy during Baum-Welch."""

    def __init__(self, label: str, state: int, occupancy: float):
        self.label = label
        self.state = state
        self.occupancy = occupancy
        super().__init__(
            f"State {state} of the '{label}' model collapsed "
            f"(total occupancy {occupancy:.3g})"
        )


# Exit 4 - bad input data


class InputDataError(AffordanceError):
    """Input data exists but cannot be used."""

    exit_code = 4


class DegenerateTrajectory(InputDataError):
    """Hand never leaves the torso, so amplitude cannot be normalized."""


class TooShort(InputDataError):
    """Trajectory spans fewer than two samples at the target rate."""


class MalformedData(InputDataError):
    """A records, trajectory, manifest or model file could not be parsed."""

    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


# Exit 5 - labels outside their domain


class LabelError(AffordanceError):
    """Symbolic value or word that the model does not know."""

    exit_code = 5


class UnknownLabel(LabelError):
    """Value outside the domain of a symbolic variable."""

    def __init__(
        self, field: str, value: str, allowed: Optional[Sequence[str]] = None
    ):
        self.field = field
        self.value = value
        self.allowed = tuple(allowed) if allowed is not None else None
        msg = f"Unknown {field} label '{value}'"
        if self.allowed:
            msg += f" (expected one of: {', '.join(self.allowed)})"
        super().__init__(msg)


class UnknownWord(LabelError):
    """Token outside the model vocabulary."""

    def __init__(self, token: str):
        self.token = token
        super().__init__(f"Word '{token}' is not in the vocabulary")


# Exit 1 - inference failures


class InferenceError(AffordanceError):
    """A query cannot be answered under the given evidence."""


class InvalidEvidence(InferenceError):
    """Evidence that violates a query precondition."""


class ZeroProbabilityEvidence(InferenceError):
    """Evidence has probability zero under the model."""


class ZeroFusion(InferenceError):
    """Gesture and network distributions share no probability mass."""
