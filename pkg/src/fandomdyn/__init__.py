"""Emotion dynamics of sports fandoms.

Event-based emotion series, burstiness and memory of inter-event times,
DTW clustering of daily signals, and regression of final league rank.
"""

from .errors import (
    DegenerateSequenceError,
    FandomDynError,
    InsufficientEventsError,
    MissingMetadataError,
    ParseError,
    RankDeficientError,
    UndefinedStatisticError,
)
from .model import (
    EMOTIONS,
    BinaryEventSeries,
    BurstinessReport,
    Emotion,
    EmotionalSeries,
    EmotionDistribution,
    InterEventTimes,
    PostRecord,
    TeamMetadata,
    delta_rank,
)

__version__ = "0.1.0"
