"""Run configuration: defaults, JSON config files and command-line overrides.

Precedence is dataclass defaults < ``--config`` file < command-line flags.
"""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .bayesnet import DEFAULT_STRUCTURE, NetworkStructure
from .domain import DEFAULT_DOMAINS
from .errors import ConfigError
from .fusion import FusionStrategy, parse_strategy
from .gesture import PRIOR_CHOICES
from .simgen import CorpusLayout, GestureParams, UtteranceGrammar, WorldTable

PathLike = Union[str, Path]


@dataclass(frozen=True)
class PathsConfig:
    data: str = "data"
    models: str = "models"
    outputs: str = "outputs"

    @property
    def corpus(self) -> CorpusLayout:
        return CorpusLayout(Path(self.data))

    @property
    def network(self) -> Path:
        return Path(self.models) / "affordance_network.json"

    @property
    def gesture_models(self) -> Path:
        return Path(self.models) / "gesture_models.json"

    def report(self, command: str) -> Path:
        return Path(self.outputs) / f"{command}.json"


@dataclass(frozen=True)
class BayesNetConfig:
    alpha: float = 1.0
    min_count: int = 1
    structure: NetworkStructure = DEFAULT_STRUCTURE


@dataclass(frozen=True)
class GestureConfig:
    states: int = 5
    mixtures: int = 2
    rate: float = 30.0
    tol: float = 1e-6
    max_iters: int = 100
    workers: int = 1
    priors: str = "uniform"


@dataclass(frozen=True)
class SimConfig:
    n: int = 300
    holdout_per_class: int = 50
    table: WorldTable = field(default_factory=WorldTable)
    grammar: UtteranceGrammar = field(default_factory=UtteranceGrammar)
    gesture: GestureParams = field(default_factory=GestureParams)


@dataclass(frozen=True)
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    bayesnet: BayesNetConfig = field(default_factory=BayesNetConfig)
    gesture: GestureConfig = field(default_factory=GestureConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    fusion: FusionStrategy = FusionStrategy.HARD
    seed: int = 0

    def validate(self) -> "RunConfig":
        """Return self if every numeric field is in range.

        Raises:
            ConfigError: naming the first offending field.
        """
        checks = [
            ("bayesnet.alpha", lambda: self.bayesnet.alpha >= 0),
            ("bayesnet.min_count", lambda: self.bayesnet.min_count >= 1),
            ("gesture.states", lambda: self.gesture.states >= 1),
            ("gesture.mixtures", lambda: self.gesture.mixtures >= 1),
            ("gesture.rate", lambda: self.gesture.rate > 0),
            ("gesture.tol", lambda: self.gesture.tol >= 0),
            ("gesture.max_iters", lambda: self.gesture.max_iters >= 1),
            ("gesture.workers", lambda: self.gesture.workers >= 1),
            ("gesture.priors", lambda: self.gesture.priors in PRIOR_CHOICES),
            ("sim.n", lambda: self.sim.n >= 1),
            ("sim.holdout_per_class", lambda: self.sim.holdout_per_class >= 0),
            ("seed", lambda: self.seed >= 0),
        ]
        for name, check in checks:
            try:
                ok = check()
            except TypeError:
                ok = False
            if not ok:
                raise ConfigError(f"Config value {name} is out of range")
        self.bayesnet.structure.validate(DEFAULT_DOMAINS)
        return self

    def to_dict(self) -> dict:
        return {
            "paths": asdict(self.paths),
            "bayesnet": {
                "alpha": self.bayesnet.alpha,
                "min_count": self.bayesnet.min_count,
                "structure": self.bayesnet.structure.to_dict(),
            },
            "gesture": asdict(self.gesture),
            "sim": {
                "n": self.sim.n,
                "holdout_per_class": self.sim.holdout_per_class,
                "table": self.sim.table.to_dict(),
                "grammar": self.sim.grammar.to_dict(),
                "gesture": self.sim.gesture.to_dict(),
            },
            "fusion": self.fusion.value,
            "seed": self.seed,
        }


def _section(cls, data: Any, name: str, **converters):
    if not isinstance(data, Mapping):
        raise ConfigError(f"Config section '{name}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown key(s) in '{name}': {', '.join(sorted(unknown))}")
    values = {}
    for key, value in data.items():
        convert = converters.get(key)
        values[key] = convert(value) if convert else value
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"Invalid '{name}' section ({e})") from e


def config_from_dict(data: Mapping) -> RunConfig:
    top = {f.name for f in fields(RunConfig)}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"Unknown config key(s): {', '.join(sorted(unknown))}")
    config = RunConfig()
    sections = {}
    if "paths" in data:
        sections["paths"] = _section(PathsConfig, data["paths"], "paths")
    if "bayesnet" in data:
        sections["bayesnet"] = _section(
            BayesNetConfig,
            data["bayesnet"],
            "bayesnet",
            structure=NetworkStructure.from_dict,
        )
    if "gesture" in data:
        sections["gesture"] = _section(GestureConfig, data["gesture"], "gesture")
    if "sim" in data:
        sections["sim"] = _section(
            SimConfig,
            data["sim"],
            "sim",
            table=WorldTable.from_dict,
            grammar=UtteranceGrammar.from_dict,
            gesture=GestureParams.from_dict,
        )
    if "fusion" in data:
        sections["fusion"] = parse_strategy(data["fusion"])
    if "seed" in data:
        sections["seed"] = data["seed"]
    return replace(config, **sections)


def load_config(path: PathLike) -> RunConfig:
    """Read a JSON config file.

    Raises:
        OSError: if the file cannot be read.
        ConfigError: for invalid JSON, unknown keys or bad values.
    """
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data)


# Command-line flag -> (section, field)
OVERRIDES = {
    "data": ("paths", "data"),
    "models": ("paths", "models"),
    "outputs": ("paths", "outputs"),
    "alpha": ("bayesnet", "alpha"),
    "min_count": ("bayesnet", "min_count"),
    "states": ("gesture", "states"),
    "mixtures": ("gesture", "mixtures"),
    "rate": ("gesture", "rate"),
    "tol": ("gesture", "tol"),
    "max_iters": ("gesture", "max_iters"),
    "workers": ("gesture", "workers"),
    "priors": ("gesture", "priors"),
    "n": ("sim", "n"),
    "holdout_per_class": ("sim", "holdout_per_class"),
}


def apply_overrides(config: RunConfig, **overrides: Optional[Any]) -> RunConfig:
    """Replace fields named by flag; ``None`` values are left alone."""
    updates: dict[str, dict[str, Any]] = {}
    top: dict[str, Any] = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "fusion":
            top["fusion"] = parse_strategy(value)
        elif key == "seed":
            top["seed"] = value
        elif key in OVERRIDES:
            section, name = OVERRIDES[key]
            updates.setdefault(section, {})[name] = value
        else:
            raise ConfigError(f"Unknown override '{key}'")
    for section, values in updates.items():
        top[section] = replace(getattr(config, section), **values)
    return replace(config, **top)
