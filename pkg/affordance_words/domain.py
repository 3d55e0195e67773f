"""Symbolic world model: variable domains, experiment records, vocabulary.

The four symbolic variables and their canonical value order are fixed here;
every probability vector elsewhere in the package is indexed in this order.
"""

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import EmptyVocabulary, MalformedData, UnknownLabel, UnknownWord


@dataclass(frozen=True)
class SymbolicDomain:
    """A discrete variable and its ordered values."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError(f"Domain {self.name} has no values")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"Domain {self.name} has duplicate values")

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, label: object) -> bool:
        return label in self.values

    @property
    def field(self) -> str:
        """Record attribute holding this variable (``ObjVel`` -> ``objvel``)."""
        return self.name.lower()

    def index(self, label: str) -> int:
        try:
            return self.values.index(label)
        except ValueError:
            raise UnknownLabel(self.field, label, self.values) from None

    def to_dict(self) -> dict:
        return {"name": self.name, "values": list(self.values)}

    @classmethod
    def from_dict(cls, data: dict) -> "SymbolicDomain":
        return cls(name=data["name"], values=tuple(data["values"]))


ACTION = SymbolicDomain("Action", ("grasp", "tap", "touch"))
SHAPE = SymbolicDomain("Shape", ("sphere", "box"))
SIZE = SymbolicDomain("Size", ("small", "medium", "big"))
OBJVEL = SymbolicDomain("ObjVel", ("slow", "medium", "fast"))

DEFAULT_DOMAINS: tuple[SymbolicDomain, ...] = (ACTION, SHAPE, SIZE, OBJVEL)

# Binary domain of every word node.
WORD = SymbolicDomain("word", ("absent", "present"))
ABSENT, PRESENT = WORD.values


_PUNCTUATION = re.compile(r"[^\w\s]")


def normalize_token(token: str) -> str:
    """Lowercase and strip punctuation; no stemming."""
    return _PUNCTUATION.sub("", token.lower()).strip()


def tokenize(text: str) -> list[str]:
    """Split an utterance into normalized tokens, in order."""
    return _PUNCTUATION.sub(" ", text.lower()).split()


@dataclass(frozen=True)
class ExperimentRecord:
    """One interaction: action, object features, effect and spoken words."""

    action: str
    shape: str
    size: str
    objvel: str
    words: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "words", frozenset(self.words))

    def value_of(self, domain: SymbolicDomain) -> str:
        return getattr(self, domain.field)

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "shape": self.shape,
            "size": self.size,
            "objvel": self.objvel,
            "words": sorted(self.words),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentRecord":
        words = {normalize_token(w) for w in data["words"]}
        words.discard("")
        return cls(
            action=data["action"],
            shape=data["shape"],
            size=data["size"],
            objvel=data["objvel"],
            words=frozenset(words),
        )


def validate_record(
    record: ExperimentRecord, domains: Sequence[SymbolicDomain] = DEFAULT_DOMAINS
) -> ExperimentRecord:
    """Return the record unchanged if every symbolic field is in its domain.

    Raises:
        UnknownLabel: naming the first offending field.
    """
    for domain in domains:
        value = record.value_of(domain)
        if value not in domain:
            raise UnknownLabel(domain.field, value, domain.values)
    return record


@dataclass(frozen=True)
class Vocabulary:
    """Ordered word list; a token's index never changes for a trained model."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("Vocabulary tokens must be unique")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self.tokens

    def index(self, token: str) -> int:
        try:
            return self.tokens.index(token)
        except ValueError:
            raise UnknownWord(token) from None

    def to_list(self) -> list[str]:
        return list(self.tokens)


def build_vocabulary(
    records: Iterable[ExperimentRecord], min_count: int = 1
) -> Vocabulary:
    """Words occurring in at least ``min_count`` records, sorted.

    Raises:
        ValueError: if min_count < 1.
        EmptyVocabulary: if no word reaches the threshold.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for record in records:
        counts.update(record.words)
    tokens = sorted(tok for tok, n in counts.items() if n >= min_count)
    if not tokens:
        raise EmptyVocabulary(min_count)
    return Vocabulary(tuple(tokens))


PathLike = Union[str, Path]


def read_records(
    path: PathLike, domains: Optional[Sequence[SymbolicDomain]] = DEFAULT_DOMAINS
) -> list[ExperimentRecord]:
    """Read a records JSONL file, validating labels when domains are given.

    Blank lines are skipped. Raises MalformedData for lines that are not
    records and UnknownLabel for out-of-domain values.
    """
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = ExperimentRecord.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise MalformedData(f"{path}:{lineno}", f"not a record ({e})") from e
            if domains is not None:
                validate_record(record, domains)
            records.append(record)
    return records


def write_records(path: PathLike, records: Iterable[ExperimentRecord]):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
