"""Hand trajectories and their torso-centred, amplitude-normalized features."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import DegenerateTrajectory, MalformedData, TooShort

CSV_HEADER = "t,hx,hy,hz,tx,ty,tz"
DEFAULT_RATE = 30.0
MIN_NORM = 1e-9

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Timestamped 3D hand and torso positions (seconds, meters)."""

    t: np.ndarray
    hand: np.ndarray
    torso: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        hand = np.asarray(self.hand, dtype=float)
        torso = np.asarray(self.torso, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "hand", hand)
        object.__setattr__(self, "torso", torso)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("A trajectory needs at least 2 frames")
        if hand.shape != (len(t), 3) or torso.shape != (len(t), 3):
            raise ValueError(
                f"Positions must have shape ({len(t)}, 3), got {hand.shape} "
                f"and {torso.shape}"
            )
        if not all(np.all(np.isfinite(a)) for a in (t, hand, torso)):
            raise ValueError("Trajectory contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise ValueError("Timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    """Uniformly sampled, dimensionless feature vectors (one row per sample)."""

    samples: np.ndarray
    rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or len(samples) == 0:
            raise ValueError("A feature sequence needs at least one sample")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def preprocess(traj: Trajectory, rate: float = DEFAULT_RATE) -> FeatureSequence:
    """Torso-centre, resample to ``rate`` and scale to unit maximum norm.

    1. hand - torso per frame
    2. linear resampling on the uniform grid ``t0, t0 + 1/rate, ...`` up to
       the last timestamp
    3. division by the largest Euclidean norm

    Raises:
        ValueError: if rate is not positive.
        TooShort: if the grid has fewer than 2 samples.
        DegenerateTrajectory: if the hand never leaves the torso.
    """
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    relative = traj.hand - traj.torso
    n = int(np.floor(traj.duration * rate + 1e-9)) + 1
    if n < 2:
        raise TooShort(
            f"{traj.duration:.3f} s at {rate:g} samples/s gives {n} sample(s)"
        )
    grid = traj.t[0] + np.arange(n) / rate
    resampled = np.column_stack(
        [np.interp(grid, traj.t, relative[:, axis]) for axis in range(3)]
    )
    scale = np.linalg.norm(resampled, axis=1).max()
    if scale < MIN_NORM:
        raise DegenerateTrajectory(
            "Hand coincides with the torso throughout the trajectory"
        )
    return FeatureSequence(resampled / scale, rate)


def write_trajectory_csv(path: PathLike, traj: Trajectory):
    data = np.column_stack([traj.t, traj.hand, traj.torso])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")


def read_trajectory_csv(path: PathLike) -> Trajectory:
    """Read a ``t,hx,hy,hz,tx,ty,tz`` CSV file.

    Raises:
        OSError: if the file cannot be opened.
        MalformedData: if the header or values are wrong.
    """
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().replace(" ", "")
        if header != CSV_HEADER:
            raise MalformedData(str(path), f"expected header '{CSV_HEADER}'")
        try:
            data = np.loadtxt(f, delimiter=",", ndmin=2)
        except ValueError as e:
            raise MalformedData(str(path), f"bad numeric data ({e})") from e
    if data.shape[1:] != (7,):
        raise MalformedData(str(path), f"expected 7 columns, got {data.shape[1:]}")
    try:
        return Trajectory(data[:, 0], data[:, 1:4], data[:, 4:7])
    except ValueError as e:
        raise MalformedData(str(path), str(e)) from e


@dataclass(frozen=True)
class ManifestEntry:
    """One line of a gesture dataset manifest.

    ``context`` carries the object/effect labels generated alongside the
    gesture (shape, size, objvel) when the manifest has them.
    """

    file: str
    action: str
    context: Optional[dict] = None

    def to_dict(self) -> dict:
        data = {"file": self.file, "action": self.action}
        if self.context:
            data.update(self.context)
        return data


def read_manifest(path: PathLike) -> list[ManifestEntry]:
    """Read a JSON-lines manifest; relative files resolve against its folder."""
    base = Path(path).parent
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                file, action = data.pop("file"), data.pop("action")
            except (json.JSONDecodeError, KeyError, AttributeError) as e:
                raise MalformedData(
                    f"{path}:{lineno}", f"expected {{file, action}} ({e})"
                ) from e
            entries.append(ManifestEntry(str(base / file), action, data or None))
    return entries


def write_manifest(path: PathLike, entries: Iterable[ManifestEntry]):
    """Write entries as given; relative files are relative to the manifest."""
    with open(path, "w", encoding="utf-8") as f:
        for entry in entries:
            f.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
