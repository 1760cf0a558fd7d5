"""Domain types shared by every stage of the pipeline.

All containers are frozen dataclasses; array-valued accessors return fresh
numpy arrays so callers can never mutate a stored value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import InsufficientEventsError

__all__ = [
    "Emotion",
    "EMOTIONS",
    "EmotionDistribution",
    "PostRecord",
    "EmotionalSeries",
    "BinaryEventSeries",
    "InterEventTimes",
    "TeamMetadata",
    "BurstinessReport",
    "delta_rank",
    "to_epoch_seconds",
]

NORMALIZATION_TOL = 1e-9


class Emotion(str, enum.Enum):
    JOY = "joy"
    ANGER = "anger"
    SADNESS = "sadness"
    FEAR = "fear"

    def __str__(self):
        return self.value


# column order used everywhere a distribution is flattened
EMOTIONS = (Emotion.JOY, Emotion.ANGER, Emotion.SADNESS, Emotion.FEAR)


def to_epoch_seconds(ts: datetime) -> float:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.timestamp()


@dataclass(frozen=True)
class EmotionDistribution:
    """Fractions of a post's comments falling in each base emotion."""

    joy: float
    anger: float
    sadness: float
    fear: float

    def __post_init__(self):
        values = self.as_tuple()
        for e, v in zip(EMOTIONS, values):
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValueError(f"{e.value} fraction {v!r} outside [0, 1]")
        total = math.fsum(values)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"fractions sum to {total!r}, expected 1")

    @classmethod
    def normalized(cls, values: Mapping[Emotion | str, float] | Iterable[float]) -> EmotionDistribution:
        """Build a distribution from non-negative weights, rescaling to sum 1."""
        if isinstance(values, Mapping):
            raw = [float(values[e] if e in values else values[e.value]) for e in EMOTIONS]
        else:
            raw = [float(v) for v in values]
            if len(raw) != len(EMOTIONS):
                raise ValueError(f"expected {len(EMOTIONS)} values, got {len(raw)}")
        if any(v < 0 or math.isnan(v) for v in raw):
            raise ValueError("emotion weights must be non-negative")
        total = math.fsum(raw)
        if total <= 0:
            raise ValueError("emotion weights sum to zero")
        return cls(*(min(1.0, v / total) for v in raw))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.joy, self.anger, self.sadness, self.fear)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    def __getitem__(self, emotion: Emotion | str) -> float:
        return getattr(self, Emotion(emotion).value)

    def maximal(self) -> frozenset[Emotion]:
        """Every emotion attaining the maximum share (ties included)."""
        values = self.as_tuple()
        top = max(values)
        return frozenset(e for e, v in zip(EMOTIONS, values) if v == top)


@dataclass(frozen=True)
class PostRecord:
    team_id: str
    timestamp: datetime
    n_comments: int
    # None only for comment-less posts, which never survive thresholding
    dist: Optional[EmotionDistribution]
    seq: Optional[int] = None

    def __post_init__(self):
        if self.n_comments < 0:
            raise ValueError("n_comments must be non-negative")
        if self.dist is None and self.n_comments > 0:
            raise ValueError("posts with comments need an emotion distribution")


@dataclass(frozen=True)
class EmotionalSeries:
    """Time-ordered emotion distributions of one team."""

    team_id: str
    timestamps: tuple[datetime, ...]
    distributions: tuple[EmotionDistribution, ...]

    def __post_init__(self):
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "distributions", tuple(self.distributions))
        if not self.timestamps:
            raise ValueError("an emotional series needs at least one observation")
        if len(self.timestamps) != len(self.distributions):
            raise ValueError("timestamps and distributions differ in length")
        secs = self.seconds()
        if np.any(np.diff(secs) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    @classmethod
    def from_posts(cls, posts: Iterable[PostRecord]) -> EmotionalSeries:
        posts = list(posts)
        if not posts:
            raise ValueError("no posts")
        return cls(
            team_id=posts[0].team_id,
            timestamps=tuple(p.timestamp for p in posts),
            distributions=tuple(p.dist for p in posts),
        )

    @property
    def m(self) -> int:
        return len(self.timestamps)

    def __len__(self):
        return self.m

    def seconds(self) -> np.ndarray:
        return np.array([to_epoch_seconds(t) for t in self.timestamps], dtype=float)

    def signal(self, emotion: Emotion | str) -> np.ndarray:
        e = Emotion(emotion)
        return np.array([d[e] for d in self.distributions], dtype=float)

    def matrix(self) -> np.ndarray:
        """Observations as an (m, 4) array in ``EMOTIONS`` column order."""
        return np.array([d.as_tuple() for d in self.distributions], dtype=float)


@dataclass(frozen=True)
class BinaryEventSeries:
    team_id: str
    emotion: Emotion
    timestamps: tuple[datetime, ...]
    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        object.__setattr__(self, "emotion", Emotion(self.emotion))
        if len(self.timestamps) != len(self.bits):
            raise ValueError("timestamps and bits differ in length")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    @property
    def n_events(self) -> int:
        return sum(self.bits)

    def event_seconds(self) -> np.ndarray:
        return np.array(
            [to_epoch_seconds(t) for t, b in zip(self.timestamps, self.bits) if b],
            dtype=float,
        )


@dataclass(frozen=True)
class InterEventTimes:
    """Gaps, in seconds, between consecutive events."""

    taus: tuple[float, ...]

    def __post_init__(self):
        taus = tuple(float(t) for t in np.asarray(self.taus, dtype=float).ravel())
        object.__setattr__(self, "taus", taus)
        if any(not (t > 0) or math.isinf(t) for t in taus):
            raise ValueError("inter-event times must be positive and finite")

    @classmethod
    def from_event_times(cls, times) -> InterEventTimes:
        times = np.asarray(times, dtype=float)
        if times.size < 2:
            raise InsufficientEventsError(
                f"insufficient events: need at least 2, got {times.size}"
            )
        return cls(tuple(np.diff(times)))

    @property
    def n_tau(self) -> int:
        return len(self.taus)

    def __len__(self):
        return self.n_tau

    def as_array(self) -> np.ndarray:
        return np.array(self.taus, dtype=float)


@dataclass(frozen=True)
class TeamMetadata:
    """External descriptors of one team.

    ``mv_rank`` and ``pci_rank`` are league-scoped ordinals (1 = highest
    market value / income); see :func:`fandomdyn.ingest.load_metadata` for how
    they are derived when the source file omits them.
    """

    team_id: str
    league: str
    geo: str
    pci: float
    unemployment: float
    welfare: float
    market_value: float
    heritage_rank: int
    final_rank: int
    mv_rank: int
    pci_rank: int

    def __post_init__(self):
        if self.league not in ("A", "B", "C"):
            raise ValueError(f"league must be A, B or C, got {self.league!r}")
        if self.geo not in ("North", "Center", "South"):
            raise ValueError(f"geo must be North, Center or South, got {self.geo!r}")
        for name in ("heritage_rank", "final_rank", "mv_rank", "pci_rank"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def delta_mv(self) -> int:
        return delta_rank(self.mv_rank, self.final_rank)

    @property
    def delta_pci(self) -> int:
        return delta_rank(self.pci_rank, self.final_rank)


@dataclass(frozen=True)
class BurstinessReport:
    team_id: str
    emotion: Emotion
    n_tau: int
    mu_tau: float
    sigma_tau: float
    r: float
    B: float
    B_n: float
    M: Optional[float]
    lag: int = 1

    def __post_init__(self):
        object.__setattr__(self, "emotion", Emotion(self.emotion))
        if self.lag < 1:
            raise ValueError("lag must be a positive integer")


def delta_rank(expected_rank: int, final_rank: int) -> int:
    """Expected minus final rank; negative when a team fell short.

    >>> delta_rank(12, 5)
    7
    """
    if expected_rank < 1 or final_rank < 1:
        raise ValueError("ranks start at 1")
    return int(expected_rank) - int(final_rank)
