"""Synthetic corpus: affordance experiments, verbal descriptions and gestures.

Ground truth comes from a ``WorldTable`` (how fast an object moves for each
action/shape/size), an ``UtteranceGrammar`` (how a speaker describes the
experiment) and ``GestureParams`` (desk-scale kinematics of a human arm).

Randomness is numpy's PCG64. Every record, gesture and held-out gesture gets
its own stream seeded from ``SeedSequence([seed, stream, index])``, so a corpus
is a pure function of its settings and any record can be regenerated alone.
"""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .domain import (
    ACTION,
    OBJVEL,
    SHAPE,
    SIZE,
    ExperimentRecord,
    tokenize,
    write_records,
)
from .errors import ConfigError
from .logging_setup import get_logger
from .trajectory import ManifestEntry, Trajectory, write_manifest, write_trajectory_csv

logger = get_logger("simgen")

GENERATOR_NAME = "numpy.random.PCG64"
SEED_DERIVATION = "numpy.random.SeedSequence([seed, stream, index])"
RECORD_STREAM = 0
GESTURE_STREAM = 1
HELDOUT_STREAM = 2
HELDOUT_GESTURE_STREAM = 3
ROW_TOLERANCE = 1e-12

PathLike = Union[str, Path]


def derive_seed(seed: int, stream: int, index: int) -> int:
    """64-bit seed for item ``index`` of ``stream``."""
    state = np.random.SeedSequence([seed, stream, index]).generate_state(1, np.uint64)
    return int(state[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# World table


_SLOW, _MEDIUM, _FAST = OBJVEL.values

# (slow, medium, fast) per action, shape, size
DEFAULT_EFFECTS: dict[str, dict[str, dict[str, tuple[float, ...]]]] = {
    "grasp": {
        "sphere": {
            "small": (0.15, 0.75, 0.10),
            "medium": (0.15, 0.75, 0.10),
            "big": (0.20, 0.70, 0.10),
        },
        "box": {
            "small": (0.15, 0.75, 0.10),
            "medium": (0.20, 0.70, 0.10),
            "big": (0.25, 0.70, 0.05),
        },
    },
    "tap": {
        "sphere": {
            "small": (0.01, 0.02, 0.97),
            "medium": (0.10, 0.25, 0.65),
            "big": (0.15, 0.30, 0.55),
        },
        "box": {
            "small": (0.60, 0.30, 0.10),
            "medium": (0.70, 0.25, 0.05),
            "big": (0.80, 0.15, 0.05),
        },
    },
    "touch": {
        "sphere": {
            "small": (0.75, 0.20, 0.05),
            "medium": (0.80, 0.15, 0.05),
            "big": (0.80, 0.15, 0.05),
        },
        "box": {
            "small": (0.90, 0.08, 0.02),
            "medium": (0.90, 0.08, 0.02),
            "big": (0.90, 0.08, 0.02),
        },
    },
}


@dataclass(frozen=True)
class WorldTable:
    """p(ObjVel | Action, Shape, Size) the simulated world obeys."""

    effects: Mapping[str, Mapping[str, Mapping[str, Sequence[float]]]] = field(
        default_factory=lambda: DEFAULT_EFFECTS
    )

    def __post_init__(self):
        effects = {}
        for action in ACTION.values:
            for shape in SHAPE.values:
                for size in SIZE.values:
                    try:
                        row = self.effects[action][shape][size]
                    except (KeyError, TypeError):
                        raise ConfigError(
                            f"World table has no entry for {action}/{shape}/{size}"
                        ) from None
                    row = tuple(float(p) for p in row)
                    if len(row) != len(OBJVEL) or any(not p >= 0.0 for p in row):
                        raise ConfigError(
                            f"World table entry {action}/{shape}/{size} must be "
                            f"{len(OBJVEL)} non-negative probabilities"
                        )
                    if abs(sum(row) - 1.0) > ROW_TOLERANCE:
                        raise ConfigError(
                            f"World table entry {action}/{shape}/{size} sums to "
                            f"{sum(row)!r}"
                        )
                    effects.setdefault(action, {}).setdefault(shape, {})[size] = row
        object.__setattr__(self, "effects", effects)

    def distribution(self, action: str, shape: str, size: str) -> tuple[float, ...]:
        return self.effects[action][shape][size]

    def most_likely(self, action: str, shape: str, size: str) -> str:
        return OBJVEL.values[int(np.argmax(self.distribution(action, shape, size)))]

    def to_dict(self) -> dict:
        return {
            action: {
                shape: {size: list(row) for size, row in sizes.items()}
                for shape, sizes in shapes.items()
            }
            for action, shapes in self.effects.items()
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "WorldTable":
        return cls(effects=data)


# ---------------------------------------------------------------------------
# Utterances


SLOTS = ("action", "shape", "size", "effect")

DEFAULT_TEMPLATES = (
    "the robot {action} the {size} {shape} and it {effect}",
    "{action} the {shape} it {effect}",
    "the {size} {shape} {effect} after {action}",
    "he is {action} the {size} {shape}",
    "{action} the {size} {shape} and it {effect}",
)


def _effect_lexicon() -> dict[str, dict[str, float]]:
    lexicon = {}
    for shape in SHAPE.values:
        if shape == "sphere":
            tap = {
                _SLOW: {"moves": 1.0, "rolls": 1.0},
                _MEDIUM: {"rolls": 1.0, "rolling": 1.0},
                _FAST: {"rolls": 2.0, "rolling": 1.0, "roll": 1.0},
            }
        else:
            tap = {
                _SLOW: {"slides": 1.0, "slowly": 1.0},
                _MEDIUM: {"slides": 2.0, "slide": 1.0},
                _FAST: {"slides": 1.0, "quickly": 1.0},
            }
        touch = {
            _SLOW: {"still": 1.0},
            _MEDIUM: {"moves": 1.0, "still": 1.0},
            _FAST: {"moves": 1.0, "quickly": 1.0},
        }
        grasp = {
            _SLOW: {"lifts": 1.0, "slowly": 1.0},
            _MEDIUM: {"lifts": 2.0, "lifted": 1.0},
            _FAST: {"lifts": 1.0, "quickly": 1.0},
        }
        for action, words in (("grasp", grasp), ("tap", tap), ("touch", touch)):
            for objvel, choices in words.items():
                lexicon[effect_key(action, shape, objvel)] = choices
    return lexicon


def effect_key(action: str, shape: str, objvel: str) -> str:
    """Lexicon key of the effect slot."""
    return f"{action}.{shape}.{objvel}"


def default_lexicon() -> dict[str, dict[str, dict[str, float]]]:
    return {
        "action": {
            "grasp": {"grasp": 1.0, "grasps": 1.0, "grasping": 1.0},
            "tap": {
                "tap": 1.0,
                "taps": 1.0,
                "tapping": 1.0,
                "push": 1.0,
                "pushes": 1.0,
                "pushing": 1.0,
            },
            "touch": {
                "touch": 1.0,
                "touches": 1.0,
                "touching": 1.0,
                "poke": 1.0,
                "pokes": 1.0,
                "poking": 1.0,
            },
        },
        "shape": {
            "sphere": {"ball": 2.0, "sphere": 1.0},
            "box": {"box": 2.0, "cube": 1.0},
        },
        "size": {
            "small": {"small": 2.0, "little": 1.0},
            "medium": {"medium": 1.0},
            "big": {"big": 2.0, "large": 1.0},
        },
        "effect": _effect_lexicon(),
    }


@dataclass(frozen=True)
class UtteranceGrammar:
    """Templates with ``{slot}`` placeholders and weighted word choices.

    ``lexicon[slot][value]`` maps each candidate word to its weight; weights
    are normalized on construction. Effect words are keyed by
    ``action.shape.objvel`` so they follow what the object did.
    """

    templates: tuple[str, ...] = DEFAULT_TEMPLATES
    lexicon: Mapping[str, Mapping[str, Mapping[str, float]]] = field(
        default_factory=default_lexicon
    )

    def __post_init__(self):
        templates = tuple(self.templates)
        if not templates:
            raise ConfigError("Utterance grammar needs at least one template")
        for template in templates:
            for slot in _slots_in(template):
                if slot not in SLOTS:
                    raise ConfigError(f"Unknown slot '{{{slot}}}' in '{template}'")
        required = {
            "action": ACTION.values,
            "shape": SHAPE.values,
            "size": SIZE.values,
            "effect": [
                effect_key(a, s, v)
                for a in ACTION.values
                for s in SHAPE.values
                for v in OBJVEL.values
            ],
        }
        lexicon = {}
        for slot, values in required.items():
            lexicon[slot] = {}
            for value in values:
                choices = dict(self.lexicon.get(slot, {}).get(value, {}))
                total = sum(choices.values())
                if not choices or any(w < 0 for w in choices.values()) or total <= 0:
                    raise ConfigError(f"No word choices for {slot} '{value}'")
                lexicon[slot][value] = {
                    w: c / total for w, c in sorted(choices.items())
                }
        object.__setattr__(self, "templates", templates)
        object.__setattr__(self, "lexicon", lexicon)

    def words(self) -> set[str]:
        """Every token an utterance can contain."""
        tokens = set()
        for template in self.templates:
            for part in template.split():
                if not _slots_in(part):
                    tokens.update(tokenize(part))
        for values in self.lexicon.values():
            for choices in values.values():
                for word in choices:
                    tokens.update(tokenize(word))
        return tokens

    def utter(
        self, action: str, shape: str, size: str, objvel: str, rng: np.random.Generator
    ) -> list[str]:
        """Sample one description of an experiment, as tokens."""
        template = self.templates[int(rng.integers(len(self.templates)))]
        keys = {
            "action": action,
            "shape": shape,
            "size": size,
            "effect": effect_key(action, shape, objvel),
        }
        tokens = []
        for part in template.split():
            if part.startswith("{") and part.endswith("}"):
                choices = self.lexicon[part[1:-1]][keys[part[1:-1]]]
                words = list(choices)
                pick = int(rng.choice(len(words), p=list(choices.values())))
                tokens.extend(tokenize(words[pick]))
            else:
                tokens.extend(tokenize(part))
        return tokens

    def to_dict(self) -> dict:
        return {
            "templates": list(self.templates),
            "lexicon": {slot: dict(values) for slot, values in self.lexicon.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "UtteranceGrammar":
        unknown = set(data) - {"templates", "lexicon"}
        if unknown:
            raise ConfigError(f"Unknown grammar keys: {sorted(unknown)}")
        return cls(
            templates=tuple(data.get("templates", DEFAULT_TEMPLATES)),
            lexicon=data.get("lexicon", default_lexicon()),
        )


def _slots_in(template: str) -> list[str]:
    return [p[1:-1] for p in template.split() if p.startswith("{") and p.endswith("}")]


# ---------------------------------------------------------------------------
# Gestures


@dataclass(frozen=True)
class GestureParams:
    """Desk-scale kinematics, in meters and seconds.

    Axes: x lateral, y forward (away from the body), z up. Offsets are
    relative to the torso; spreads are half-widths of uniform draws.
    """

    torso: tuple[float, float, float] = (0.0, 0.0, 1.2)
    torso_jitter: float = 0.002
    object_offset: tuple[float, float, float] = (0.10, 0.45, -0.35)
    object_spread: float = 0.05
    start_offset: tuple[float, float, float] = (0.20, 0.15, -0.40)
    start_spread: float = 0.03
    durations: Mapping[str, tuple[float, float]] = field(
        default_factory=lambda: {
            "grasp": (2.0, 3.0),
            "tap": (1.5, 2.5),
            "touch": (1.5, 2.5),
        }
    )
    dwell: tuple[float, float] = (0.6, 1.0)
    approach_height: float = 0.15
    lift_height: float = 0.25
    sweep_half_width: float = 0.15
    sweep_share: float = 0.2
    noise: float = 0.005
    rate: float = 30.0

    def __post_init__(self):
        durations = {k: tuple(float(x) for x in v) for k, v in self.durations.items()}
        object.__setattr__(self, "durations", durations)
        for name in ("torso", "object_offset", "start_offset", "dwell"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        for action in ACTION.values:
            if action not in durations:
                raise ConfigError(f"No duration range for '{action}' gestures")
            lo, hi = durations[action]
            if not 0.0 < lo <= hi:
                raise ConfigError(f"Duration range for '{action}' must be 0 < lo <= hi")
        if not 0.0 <= self.dwell[0] <= self.dwell[1]:
            raise ConfigError("Dwell range must be 0 <= lo <= hi")
        if self.noise < 0 or self.torso_jitter < 0:
            raise ConfigError("Noise levels must be >= 0")
        if not 0.0 < self.sweep_share < 1.0:
            raise ConfigError("sweep_share must be in (0, 1)")
        if not self.rate > 0:
            raise ConfigError("rate must be positive")

    def to_dict(self) -> dict:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        data["durations"] = {k: list(v) for k, v in self.durations.items()}
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "GestureParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown gesture parameter(s): {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class _Segment:
    start: np.ndarray
    end: np.ndarray
    duration: float
    smooth: bool = True


def min_jerk(tau: np.ndarray) -> np.ndarray:
    """Minimum-jerk progress 10t^3 - 15t^4 + 6t^5 (zero speed at both ends)."""
    return tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)


def _render(segments: Sequence[_Segment], rate: float) -> tuple[np.ndarray, np.ndarray]:
    durations = np.array([s.duration for s in segments])
    ends = np.cumsum(durations)
    starts = ends - durations
    t = np.arange(int(np.floor(ends[-1] * rate + 1e-9)) + 1) / rate
    idx = np.minimum(np.searchsorted(ends, t, side="right"), len(segments) - 1)
    tau = np.clip((t - starts[idx]) / durations[idx], 0.0, 1.0)
    smooth = np.array([s.smooth for s in segments])[idx]
    progress = np.where(smooth, min_jerk(tau), tau)
    p0 = np.array([s.start for s in segments])[idx]
    p1 = np.array([s.end for s in segments])[idx]
    return t, p0 + progress[:, None] * (p1 - p0)


@dataclass(frozen=True, eq=False)
class GestureSample:
    """A generated gesture with the object position it was aimed at."""

    action: str
    trajectory: Trajectory
    object_position: np.ndarray
    start_position: np.ndarray


def generate_gesture(action: str, params: GestureParams, seed: int) -> GestureSample:
    ACTION.index(action)
    rng = make_rng(seed)
    torso = np.asarray(params.torso)
    obj = torso + params.object_offset + rng.uniform(-1, 1, 3) * params.object_spread
    start = torso + params.start_offset + rng.uniform(-1, 1, 3) * params.start_spread
    lo, hi = params.durations[action]
    duration = float(rng.uniform(lo, hi))
    up = np.array([0.0, 0.0, 1.0])
    side = np.array([1.0, 0.0, 0.0])

    if action == "grasp":
        above = obj + params.approach_height * up
        lifted = obj + params.lift_height * up
        rest = start + 0.10 * up
        segments = [
            _Segment(start, above, 0.35 * duration),
            _Segment(above, obj, 0.20 * duration),
            _Segment(obj, lifted, 0.25 * duration),
            _Segment(lifted, rest, 0.20 * duration),
        ]
    elif action == "tap":
        before = obj - params.sweep_half_width * side + 0.02 * up
        after = obj + params.sweep_half_width * side + 0.02 * up
        reach = 0.5 * (1.0 - params.sweep_share) * duration
        segments = [
            _Segment(start, before, reach),
            _Segment(before, after, params.sweep_share * duration, smooth=False),
            _Segment(after, start, reach),
        ]
    else:
        hold = float(rng.uniform(*params.dwell))
        segments = [
            _Segment(start, obj, 0.5 * duration),
            _Segment(obj, obj, hold, smooth=False),
            _Segment(obj, start, 0.5 * duration),
        ]

    t, hand = _render(segments, params.rate)
    hand = hand + rng.normal(0.0, params.noise, hand.shape)
    torso_track = torso + rng.normal(0.0, params.torso_jitter, hand.shape)
    return GestureSample(action, Trajectory(t, hand, torso_track), obj, start)


def generate_trajectory(action: str, params: GestureParams, seed: int) -> Trajectory:
    """Deterministic hand/torso trajectory of one ``action`` gesture."""
    return generate_gesture(action, params, seed).trajectory


# ---------------------------------------------------------------------------
# Corpus


def _sample_record(
    index: int, table: WorldTable, grammar: UtteranceGrammar, seed: int
) -> ExperimentRecord:
    rng = make_rng(derive_seed(seed, RECORD_STREAM, index))
    action = ACTION.values[int(rng.integers(len(ACTION)))]
    shape = SHAPE.values[int(rng.integers(len(SHAPE)))]
    size = SIZE.values[int(rng.integers(len(SIZE)))]
    objvel = OBJVEL.values[
        int(rng.choice(len(OBJVEL), p=table.distribution(action, shape, size)))
    ]
    words = grammar.utter(action, shape, size, objvel, rng)
    return ExperimentRecord(action, shape, size, objvel, frozenset(words))


def generate_records(
    n: int, table: WorldTable, grammar: UtteranceGrammar, seed: int
) -> list[ExperimentRecord]:
    """Experiment records only (no trajectories)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [_sample_record(i, table, grammar, seed) for i in range(n)]


@dataclass(frozen=True, eq=False)
class Corpus:
    records: list[ExperimentRecord]
    trajectories: list[Trajectory]
    heldout: list[tuple[ExperimentRecord, Trajectory]] = field(default_factory=list)


def generate_heldout(
    per_class: int, table: WorldTable, params: GestureParams, seed: int
) -> list[tuple[ExperimentRecord, Trajectory]]:
    """``per_class`` fresh gestures per action, each with an object context."""
    heldout = []
    for a, action in enumerate(ACTION.values):
        for j in range(per_class):
            index = a * per_class + j
            rng = make_rng(derive_seed(seed, HELDOUT_STREAM, index))
            shape = SHAPE.values[int(rng.integers(len(SHAPE)))]
            size = SIZE.values[int(rng.integers(len(SIZE)))]
            objvel = OBJVEL.values[
                int(rng.choice(len(OBJVEL), p=table.distribution(action, shape, size)))
            ]
            traj_seed = derive_seed(seed, HELDOUT_GESTURE_STREAM, index)
            record = ExperimentRecord(action, shape, size, objvel)
            heldout.append((record, generate_trajectory(action, params, traj_seed)))
    return heldout


def generate_corpus(
    n: int,
    table: Optional[WorldTable] = None,
    grammar: Optional[UtteranceGrammar] = None,
    seed: int = 0,
    params: Optional[GestureParams] = None,
    holdout_per_class: int = 0,
) -> Corpus:
    """Records, one matching gesture per record, and optional held-out gestures."""
    table = table or WorldTable()
    grammar = grammar or UtteranceGrammar()
    params = params or GestureParams()
    records = generate_records(n, table, grammar, seed)
    trajectories = [
        generate_trajectory(r.action, params, derive_seed(seed, GESTURE_STREAM, i))
        for i, r in enumerate(records)
    ]
    heldout = generate_heldout(holdout_per_class, table, params, seed)
    return Corpus(records, trajectories, heldout)


@dataclass(frozen=True)
class CorpusLayout:
    """File locations inside a corpus directory."""

    root: Path

    @property
    def records(self) -> Path:
        return self.root / "records.jsonl"

    @property
    def trajectories(self) -> Path:
        return self.root / "trajectories"

    @property
    def gestures(self) -> Path:
        return self.root / "gestures.jsonl"

    @property
    def heldout(self) -> Path:
        return self.root / "heldout"

    @property
    def heldout_manifest(self) -> Path:
        return self.root / "heldout.jsonl"

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"


def write_corpus(
    out_dir: PathLike,
    corpus: Corpus,
    seed: int,
    table: WorldTable,
    grammar: UtteranceGrammar,
    params: GestureParams,
) -> CorpusLayout:
    """Write every corpus file under ``out_dir``.

    Raises:
        OSError: if a directory or file cannot be written.
    """
    layout = CorpusLayout(Path(out_dir))
    layout.trajectories.mkdir(parents=True, exist_ok=True)
    layout.heldout.mkdir(parents=True, exist_ok=True)

    write_records(layout.records, corpus.records)
    entries = []
    for i, (record, traj) in enumerate(zip(corpus.records, corpus.trajectories)):
        name = f"{i:06d}.csv"
        write_trajectory_csv(layout.trajectories / name, traj)
        entries.append(ManifestEntry(f"trajectories/{name}", record.action))
    write_manifest(layout.gestures, entries)

    heldout_entries = []
    for i, (record, traj) in enumerate(corpus.heldout):
        name = f"{i:06d}.csv"
        write_trajectory_csv(layout.heldout / name, traj)
        context = {"shape": record.shape, "size": record.size, "objvel": record.objvel}
        heldout_entries.append(ManifestEntry(f"heldout/{name}", record.action, context))
    write_manifest(layout.heldout_manifest, heldout_entries)

    manifest = {
        "generator": GENERATOR_NAME,
        "seed_derivation": SEED_DERIVATION,
        "streams": {
            "records": RECORD_STREAM,
            "gestures": GESTURE_STREAM,
            "heldout": HELDOUT_STREAM,
            "heldout_gestures": HELDOUT_GESTURE_STREAM,
        },
        "seed": seed,
        "n": len(corpus.records),
        "holdout": len(corpus.heldout),
        "table": table.to_dict(),
        "grammar": grammar.to_dict(),
        "gesture_params": params.to_dict(),
    }
    with open(layout.manifest, "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    logger.debug("Wrote corpus manifest %s", layout.manifest)
    return layout
