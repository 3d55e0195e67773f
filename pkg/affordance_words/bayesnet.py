"""Discrete Bayesian network over actions, object features, effects and words.

Symbolic variables form a small DAG; every vocabulary token is a binary leaf
node whose parents are symbolic. Inference is exact: the joint over the
symbolic variables is materialized (54 cells for the default domains) and word
leaves are folded in analytically, an unobserved leaf contributing a factor of
one and an observed leaf its CPT entry.
"""

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import networkx as nx
import numpy as np

from .domain import (
    ACTION,
    DEFAULT_DOMAINS,
    PRESENT,
    WORD,
    ExperimentRecord,
    SymbolicDomain,
    Vocabulary,
    build_vocabulary,
    validate_record,
)
from .errors import (
    ConfigError,
    EmptyRow,
    InvalidEvidence,
    MalformedData,
    UnknownLabel,
    UnknownWord,
    ZeroProbabilityEvidence,
)
from .logging_setup import get_logger

logger = get_logger("bayesnet")

NETWORK_FORMAT = "affordance-network/1"
ROW_TOLERANCE = 1e-12
DISTRIBUTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LabelDistribution:
    """Normalized probability vector aligned with a domain's value order."""

    domain: SymbolicDomain
    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) != len(self.domain):
            raise ValueError(
                f"{len(probs)} probabilities for {len(self.domain)} "
                f"{self.domain.name} values"
            )
        if any(not p >= 0.0 for p in probs):
            raise ValueError(f"Negative or NaN probability in {probs}")
        if abs(sum(probs) - 1.0) > DISTRIBUTION_TOLERANCE:
            raise ValueError(f"Probabilities sum to {sum(probs)!r}, not 1")

    @classmethod
    def from_weights(
        cls, domain: SymbolicDomain, weights: Sequence[float]
    ) -> "LabelDistribution":
        """Normalize non-negative weights.

        Raises:
            ValueError: if a weight is negative or the total is not positive.
        """
        w = np.asarray(weights, dtype=float)
        if np.any(~(w >= 0.0)):
            raise ValueError(f"Weights must be non-negative, got {w.tolist()}")
        total = w.sum()
        if not total > 0.0 or not np.isfinite(total):
            raise ValueError(f"Weights must have positive finite mass, got {total}")
        return cls(domain, tuple((w / total).tolist()))

    @classmethod
    def uniform(cls, domain: SymbolicDomain) -> "LabelDistribution":
        return cls.from_weights(domain, np.ones(len(domain)))

    @classmethod
    def one_hot(cls, domain: SymbolicDomain, label: str) -> "LabelDistribution":
        probs = np.zeros(len(domain))
        probs[domain.index(label)] = 1.0
        return cls(domain, tuple(probs.tolist()))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.probs)

    def prob(self, label: str) -> float:
        return self.probs[self.domain.index(label)]

    def argmax(self) -> str:
        """Most probable label; ties go to the earliest in canonical order."""
        return self.domain.values[int(np.argmax(self.probs))]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.domain.values, self.probs))

    def to_dict(self) -> dict:
        return {"variable": self.domain.name, "probs": self.as_dict()}


@dataclass(frozen=True)
class Evidence:
    """Hard (clamped) and soft (virtual, likelihood-vector) evidence."""

    hard: Mapping[str, str] = field(default_factory=dict)
    soft: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "hard", dict(self.hard))
        soft = {k: tuple(float(x) for x in v) for k, v in self.soft.items()}
        object.__setattr__(self, "soft", soft)
        both = set(self.hard) & set(soft)
        if both:
            raise InvalidEvidence(
                f"Variables with both hard and soft evidence: {sorted(both)}"
            )
        for var, lik in soft.items():
            if not lik or any(not x >= 0.0 for x in lik) or not max(lik) > 0.0:
                raise InvalidEvidence(
                    f"Soft evidence on {var} must be non-negative with a positive "
                    f"entry, got {lik}"
                )

    def __contains__(self, variable: object) -> bool:
        return variable in self.hard or variable in self.soft

    def with_hard(self, variable: str, label: str) -> "Evidence":
        hard = dict(self.hard)
        hard[variable] = label
        soft = {k: v for k, v in self.soft.items() if k != variable}
        return Evidence(hard, soft)

    def with_soft(self, variable: str, likelihood: Sequence[float]) -> "Evidence":
        soft = dict(self.soft)
        soft[variable] = tuple(likelihood)
        hard = {k: v for k, v in self.hard.items() if k != variable}
        return Evidence(hard, soft)


@dataclass(frozen=True, eq=False)
class Cpt:
    """Conditional table p(child | parents).

    ``table`` has shape ``(*parent_sizes, child_size)``; the last axis of every
    row is a distribution over the child's values.
    """

    child: str
    parents: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        table = np.array(self.table, dtype=float)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        if table.ndim != len(self.parents) + 1:
            raise ValueError(
                f"CPT for {self.child} has {table.ndim} axes for "
                f"{len(self.parents)} parent(s)"
            )
        if np.any(~(table >= 0.0)):
            raise ValueError(f"CPT for {self.child} has negative entries")
        sums = table.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > ROW_TOLERANCE):
            raise ValueError(f"CPT rows for {self.child} do not sum to 1")

    @property
    def rows(self) -> np.ndarray:
        """One row per joint parent assignment, in C order over ``parents``."""
        return self.table.reshape(-1, self.table.shape[-1])

    def prob(self, value: int, parent_values: Sequence[int]) -> float:
        return float(self.table[tuple(parent_values) + (value,)])

    @classmethod
    def from_rows(
        cls,
        child: str,
        parents: Sequence[str],
        rows: Sequence[Sequence[float]],
        parent_sizes: Sequence[int],
    ) -> "Cpt":
        arr = np.asarray(rows, dtype=float)
        return cls(child, tuple(parents), arr.reshape(tuple(parent_sizes) + (-1,)))


@dataclass(frozen=True)
class NetworkStructure:
    """DAG template: symbolic parents plus the parents shared by word nodes.

    ``word_overrides`` gives individual tokens different parents.
    """

    parents: Mapping[str, tuple[str, ...]]
    word_parents: tuple[str, ...]
    word_overrides: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "parents", {k: tuple(v) for k, v in self.parents.items()}
        )
        object.__setattr__(self, "word_parents", tuple(self.word_parents))
        object.__setattr__(
            self,
            "word_overrides",
            {k: tuple(v) for k, v in self.word_overrides.items()},
        )

    def validate(self, domains: Sequence[SymbolicDomain]):
        """Raise ConfigError unless this is a DAG covering exactly ``domains``."""
        names = [d.name for d in domains]
        missing = [n for n in names if n not in self.parents]
        extra = [n for n in self.parents if n not in names]
        if missing or extra:
            raise ConfigError(
                f"Structure must list every symbolic variable exactly "
                f"(missing: {missing}, unknown: {extra})"
            )
        for child, parents in [
            *self.parents.items(),
            ("<words>", self.word_parents),
            *self.word_overrides.items(),
        ]:
            unknown = [p for p in parents if p not in names]
            if unknown:
                raise ConfigError(f"Parents of {child} are not variables: {unknown}")
            if len(set(parents)) != len(parents):
                raise ConfigError(f"Duplicate parents for {child}: {list(parents)}")
        graph = symbolic_graph(self.parents)
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise ConfigError(f"Structure has a cycle: {cycle}")

    def expand(self, vocabulary: Vocabulary) -> dict[str, tuple[str, ...]]:
        """Full child -> parents map for the symbolic nodes and every token."""
        parents = dict(self.parents)
        for token in vocabulary:
            parents[token] = self.word_overrides.get(token, self.word_parents)
        return parents

    def to_dict(self) -> dict:
        data: dict = {
            "nodes": {k: list(v) for k, v in self.parents.items()},
            "words": list(self.word_parents),
        }
        if self.word_overrides:
            data["word_overrides"] = {
                k: list(v) for k, v in self.word_overrides.items()
            }
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "NetworkStructure":
        try:
            return cls(
                parents=data["nodes"],
                word_parents=data["words"],
                word_overrides=data.get("word_overrides", {}),
            )
        except (KeyError, TypeError, AttributeError) as e:
            raise ConfigError(
                f"Structure needs 'nodes' (child -> parents) and 'words' ({e})"
            ) from e


DEFAULT_STRUCTURE = NetworkStructure(
    parents={
        "Action": (),
        "Shape": (),
        "Size": (),
        "ObjVel": ("Action", "Shape", "Size"),
    },
    word_parents=("Action", "Shape", "Size", "ObjVel"),
)


def symbolic_graph(parents: Mapping[str, Sequence[str]]) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(parents)
    for child, ps in parents.items():
        graph.add_edges_from((p, child) for p in ps)
    return graph


@dataclass(frozen=True, eq=False)
class AffordanceNetwork:
    """Immutable network: symbolic domains, vocabulary and one CPT per node."""

    domains: tuple[SymbolicDomain, ...]
    vocabulary: Vocabulary
    cpts: Mapping[str, Cpt]
    alpha: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "cpts", dict(self.cpts))
        by_name = {d.name: d for d in self.domains}
        if len(by_name) != len(self.domains):
            raise ValueError("Duplicate symbolic variable names")
        clash = set(by_name) & set(self.vocabulary)
        if clash:
            raise ValueError(f"Words clash with variable names: {sorted(clash)}")
        nodes = list(by_name) + list(self.vocabulary)
        if set(self.cpts) != set(nodes):
            raise ValueError("Every node needs exactly one CPT")
        for node in nodes:
            cpt = self.cpts[node]
            if cpt.child != node:
                raise ValueError(f"CPT for {cpt.child} filed under {node}")
            unknown = [p for p in cpt.parents if p not in by_name]
            if unknown:
                # Words may only hang off symbolic variables, so they stay leaves.
                raise ValueError(f"Parents of {node} are not symbolic: {unknown}")
            child_size = len(by_name[node]) if node in by_name else len(WORD)
            expected = tuple(len(by_name[p]) for p in cpt.parents) + (child_size,)
            if cpt.table.shape != expected:
                raise ValueError(
                    f"CPT for {node} has shape {cpt.table.shape}, expected {expected}"
                )
        graph = symbolic_graph({n: self.cpts[n].parents for n in by_name})
        if not nx.is_directed_acyclic_graph(graph):
            raise ValueError("Network structure has a cycle")
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(
            self, "_axes", {d.name: i for i, d in enumerate(self.domains)}
        )
        object.__setattr__(
            self, "_order", tuple(nx.lexicographical_topological_sort(graph))
        )

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.domains)

    @property
    def topological_order(self) -> tuple[str, ...]:
        return self._order

    @property
    def structure(self) -> dict[str, tuple[str, ...]]:
        return {node: cpt.parents for node, cpt in self.cpts.items()}

    def is_word(self, node: str) -> bool:
        return node in self.vocabulary

    def domain(self, variable: str) -> SymbolicDomain:
        try:
            return self._by_name[variable]
        except KeyError:
            raise UnknownLabel("variable", variable, self.variables) from None

    def node_domain(self, node: str) -> SymbolicDomain:
        """Domain of a symbolic variable or the binary domain of a word."""
        if node in self._by_name:
            return self._by_name[node]
        if node in self.vocabulary:
            return WORD
        raise UnknownWord(node)

    def axis(self, variable: str) -> int:
        return self._axes[variable]


def learn_cpts(
    records: Iterable[ExperimentRecord],
    structure: NetworkStructure = DEFAULT_STRUCTURE,
    alpha: float = 1.0,
    vocabulary: Optional[Vocabulary] = None,
    domains: Sequence[SymbolicDomain] = DEFAULT_DOMAINS,
) -> AffordanceNetwork:
    """Estimate every CPT by smoothed counting over complete records.

    Row r, value v: ``(count(v, r) + alpha) / (count(r) + alpha * |domain|)``.
    Words outside ``vocabulary`` are ignored; the vocabulary defaults to every
    word seen at least once.

    Raises:
        ValueError: if alpha is negative.
        EmptyRow: if alpha is 0 and some parent configuration is never observed.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    records = [validate_record(r, domains) for r in records]
    if vocabulary is None:
        vocabulary = build_vocabulary(records)
    structure.validate(domains)
    parents_of = structure.expand(vocabulary)
    axes = {d.name: i for i, d in enumerate(domains)}
    sizes = {d.name: len(d) for d in domains}

    n = len(records)
    codes = np.zeros((n, len(domains)), dtype=np.intp)
    for i, record in enumerate(records):
        codes[i] = [d.index(record.value_of(d)) for d in domains]
    position = {token: j for j, token in enumerate(vocabulary)}
    presence = np.zeros((n, len(vocabulary)), dtype=np.intp)
    for i, record in enumerate(records):
        for word in record.words:
            if word in position:
                presence[i, position[word]] = 1

    cpts = {}
    for node, parents in parents_of.items():
        if node in axes:
            child_codes, child_size = codes[:, axes[node]], sizes[node]
        else:
            child_codes, child_size = presence[:, position[node]], len(WORD)
        shape = tuple(sizes[p] for p in parents) + (child_size,)
        counts = np.zeros(shape)
        index = tuple(codes[:, axes[p]] for p in parents) + (child_codes,)
        np.add.at(counts, index, 1.0)
        denom = counts.sum(axis=-1, keepdims=True) + alpha * child_size
        if np.any(denom == 0.0):
            empty = tuple(int(i) for i in np.argwhere(denom[..., 0] == 0.0)[0])
            raise EmptyRow(
                node,
                {p: domains[axes[p]].values[v] for p, v in zip(parents, empty)},
            )
        cpts[node] = Cpt(node, parents, (counts + alpha) / denom)

    logger.debug(
        "Learned %d CPTs (%d words) from %d records, alpha=%g",
        len(cpts),
        len(vocabulary),
        n,
        alpha,
    )
    return AffordanceNetwork(tuple(domains), vocabulary, cpts, alpha=alpha)


def _check_evidence(net: AffordanceNetwork, evidence: Evidence):
    for var, label in evidence.hard.items():
        net.node_domain(var).index(label)
    for var, lik in evidence.soft.items():
        size = len(net.node_domain(var))
        if len(lik) != size:
            raise InvalidEvidence(
                f"Soft evidence on {var} has {len(lik)} entries, expected {size}"
            )


def _joint(
    net: AffordanceNetwork, evidence: Evidence, skip: Optional[str] = None
) -> np.ndarray:
    """Unnormalized p(symbolic assignment, evidence) as a dense array.

    Soft evidence on ``skip`` is left out so a word query can weigh it per
    value.
    """
    out = list(range(len(net.domains)))
    joint = np.ones(tuple(len(d) for d in net.domains))

    def multiply(joint, factor, axes):
        return np.einsum(joint, out, factor, axes, out)

    for d in net.domains:
        cpt = net.cpts[d.name]
        axes = [net.axis(p) for p in cpt.parents] + [net.axis(d.name)]
        joint = multiply(joint, cpt.table, axes)
    for var, label in evidence.hard.items():
        if net.is_word(var):
            cpt = net.cpts[var]
            factor = cpt.table[..., WORD.index(label)]
            joint = multiply(joint, factor, [net.axis(p) for p in cpt.parents])
        else:
            mask = np.zeros(len(net.domain(var)))
            mask[net.domain(var).index(label)] = 1.0
            joint = multiply(joint, mask, [net.axis(var)])
    for var, lik in evidence.soft.items():
        if var == skip:
            continue
        if net.is_word(var):
            cpt = net.cpts[var]
            factor = cpt.table @ np.asarray(lik)
            joint = multiply(joint, factor, [net.axis(p) for p in cpt.parents])
        else:
            joint = multiply(joint, np.asarray(lik), [net.axis(var)])
    return joint


def posterior(
    net: AffordanceNetwork, evidence: Evidence, query: str
) -> LabelDistribution:
    """Exact posterior of a symbolic variable or word node given evidence.

    Raises:
        InvalidEvidence: if the query itself carries hard evidence.
        UnknownLabel / UnknownWord: for variables or values the network lacks.
        ZeroProbabilityEvidence: if the evidence is impossible under the model.
    """
    domain = net.node_domain(query)
    if query in evidence.hard:
        raise InvalidEvidence(f"Query {query} is already clamped by hard evidence")
    _check_evidence(net, evidence)

    out = list(range(len(net.domains)))
    if net.is_word(query):
        joint = _joint(net, evidence, skip=query)
        cpt = net.cpts[query]
        value_axis = len(out)
        weights = np.einsum(
            joint, out, cpt.table, [net.axis(p) for p in cpt.parents] + [value_axis],
            [value_axis],
        )
        if query in evidence.soft:
            weights = weights * np.asarray(evidence.soft[query])
    else:
        joint = _joint(net, evidence)
        weights = np.einsum(joint, out, [net.axis(query)])

    total = weights.sum()
    if not total > 0.0:
        raise ZeroProbabilityEvidence(
            f"Evidence {evidence.hard or ''}{evidence.soft or ''} has probability "
            f"zero under the model"
        )
    return LabelDistribution(domain, tuple((weights / total).tolist()))


def word_posterior(net: AffordanceNetwork, evidence: Evidence, token: str) -> float:
    """p(token present | evidence)."""
    if token not in net.vocabulary:
        raise UnknownWord(token)
    return posterior(net, evidence, token).prob(PRESENT)


def word_posteriors(net: AffordanceNetwork, evidence: Evidence) -> dict[str, float]:
    """Occurrence probability of every vocabulary token, in vocabulary order.

    Tokens with hard evidence report their observed value.
    """
    _check_evidence(net, evidence)
    joint = _joint(net, evidence)
    total = joint.sum()
    if not total > 0.0:
        raise ZeroProbabilityEvidence("Evidence has probability zero under the model")
    out = list(range(len(net.domains)))
    result = {}
    for token in net.vocabulary:
        if token in evidence.hard:
            result[token] = 1.0 if evidence.hard[token] == PRESENT else 0.0
        elif token in evidence.soft:
            result[token] = word_posterior(net, evidence, token)
        else:
            cpt = net.cpts[token]
            present = cpt.table[..., WORD.index(PRESENT)]
            axes = [net.axis(p) for p in cpt.parents]
            mass = np.einsum(joint, out, present, axes, [])
            result[token] = float(mass / total)
    return result


def word_delta(
    net: AffordanceNetwork,
    features: Mapping[str, str],
    effects: Mapping[str, str],
    action: str,
) -> dict[str, float]:
    """Change of each word's probability when ``Action=action`` is added.

    ``p(w | F, E, A=action) - p(w | F, E)`` for every token, ordered by
    decreasing magnitude (ties keep vocabulary order).
    """
    net.domain(ACTION.name).index(action)
    hard = {**features, **effects}
    if ACTION.name in hard:
        raise InvalidEvidence("Feature and effect evidence must not mention Action")
    base = Evidence(hard=hard)
    before = word_posteriors(net, base)
    after = word_posteriors(net, base.with_hard(ACTION.name, action))
    deltas = {token: after[token] - before[token] for token in net.vocabulary}
    ordered = sorted(deltas, key=lambda token: -abs(deltas[token]))
    return {token: deltas[token] for token in ordered}


def most_probable_description(
    net: AffordanceNetwork, evidence: Evidence, k: int = 5
) -> list[tuple[str, float]]:
    """The ``k`` words most likely to be uttered under the evidence."""
    probs = word_posteriors(net, evidence)
    ranked = sorted(
        ((t, p) for t, p in probs.items() if t not in evidence),
        key=lambda item: -item[1],
    )
    return ranked[:k]


def enumerate_posterior(
    net: AffordanceNetwork, evidence: Evidence, query: str
) -> LabelDistribution:
    """Reference posterior by brute-force enumeration of joint assignments.

    Walks every assignment of the symbolic variables and every value of a word
    query, multiplying CPT entries one by one. Unobserved words are summed out
    exactly (their rows sum to one) and so never enumerated.
    """
    domain = net.node_domain(query)
    if query in evidence.hard:
        raise InvalidEvidence(f"Query {query} is already clamped by hard evidence")
    names = net.variables
    clamp = {
        var: net.domain(var).index(label)
        for var, label in evidence.hard.items()
        if not net.is_word(var)
    }
    weights = [0.0] * len(domain)

    for assignment in itertools.product(*(range(len(d)) for d in net.domains)):
        x = dict(zip(names, assignment))
        if any(x[var] != value for var, value in clamp.items()):
            continue
        p = 1.0
        for name in net.topological_order:
            cpt = net.cpts[name]
            p *= cpt.prob(x[name], [x[q] for q in cpt.parents])
        for var, label in evidence.hard.items():
            if net.is_word(var):
                cpt = net.cpts[var]
                p *= cpt.prob(WORD.index(label), [x[q] for q in cpt.parents])
        for var, lik in evidence.soft.items():
            if var == query and net.is_word(query):
                continue
            if net.is_word(var):
                cpt = net.cpts[var]
                pa = [x[q] for q in cpt.parents]
                p *= sum(lik[v] * cpt.prob(v, pa) for v in range(len(WORD)))
            else:
                p *= lik[x[var]]
        if net.is_word(query):
            cpt = net.cpts[query]
            pa = [x[q] for q in cpt.parents]
            lik = evidence.soft.get(query, (1.0,) * len(WORD))
            for v in range(len(WORD)):
                weights[v] += p * cpt.prob(v, pa) * lik[v]
        else:
            weights[x[query]] += p

    total = sum(weights)
    if not total > 0.0:
        raise ZeroProbabilityEvidence("Evidence has probability zero under the model")
    return LabelDistribution(domain, tuple(w / total for w in weights))


PathLike = Union[str, Path]


def network_to_dict(net: AffordanceNetwork) -> dict:
    return {
        "format": NETWORK_FORMAT,
        "alpha": net.alpha,
        "domains": [d.to_dict() for d in net.domains],
        "vocabulary": net.vocabulary.to_list(),
        "structure": {node: list(ps) for node, ps in net.structure.items()},
        "cpts": {node: cpt.rows.tolist() for node, cpt in net.cpts.items()},
    }


def network_from_dict(data: Mapping, source: str = "<network>") -> AffordanceNetwork:
    if data.get("format") != NETWORK_FORMAT:
        raise MalformedData(source, f"expected format {NETWORK_FORMAT!r}")
    try:
        domains = tuple(SymbolicDomain.from_dict(d) for d in data["domains"])
        vocabulary = Vocabulary(tuple(data["vocabulary"]))
        sizes = {d.name: len(d) for d in domains}
        cpts = {}
        for node, parents in data["structure"].items():
            cpts[node] = Cpt.from_rows(
                node, parents, data["cpts"][node], [sizes[p] for p in parents]
            )
        return AffordanceNetwork(domains, vocabulary, cpts, alpha=data.get("alpha"))
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedData(source, f"invalid network ({e})") from e


def save_network(path: PathLike, net: AffordanceNetwork):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(network_to_dict(net), f, sort_keys=True, indent=2)
        f.write("\n")


def load_network(path: PathLike) -> AffordanceNetwork:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise MalformedData(str(path), f"not JSON ({e})") from e
    return network_from_dict(data, str(path))
