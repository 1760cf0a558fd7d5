"""Reading post-level emotion data and turning it into series.

Input files
-----------
``posts.csv``
    ``team_id,timestamp,n_comments,joy,anger,sadness,fear`` plus an optional
    integer ``seq`` column that orders posts sharing a timestamp.  Emotion
    columns hold fractions or percentages; if any emotion value in the file
    exceeds 1.5 every emotion column is read as a percentage.
``metadata.csv``
    ``team_id,league,geo,pci,unemployment,welfare,market_value,heritage_rank,final_rank``
    with optional ``mv_rank`` and ``pci_rank`` columns.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, time, timezone
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import InsufficientEventsError, ParseError
from .model import (
    EMOTIONS,
    BinaryEventSeries,
    Emotion,
    EmotionalSeries,
    EmotionDistribution,
    InterEventTimes,
    PostRecord,
    TeamMetadata,
)

__all__ = [
    "POSTS_COLUMNS",
    "METADATA_COLUMNS",
    "IngestStats",
    "load_posts",
    "load_metadata",
    "lower_median",
    "apply_median_threshold",
    "posts_to_series",
    "aggregate_daily",
    "binarize",
    "extract_inter_event",
    "series_document",
    "read_series_document",
    "write_series_json",
    "read_series_json",
    "write_ingest_stats",
]

POSTS_COLUMNS = ("team_id", "timestamp", "n_comments", "joy", "anger", "sadness", "fear")
METADATA_COLUMNS = (
    "team_id", "league", "geo", "pci", "unemployment", "welfare",
    "market_value", "heritage_rank", "final_rank",
)
PERCENT_DETECTION_MAX = 1.5
SUM_TOLERANCE = 1e-3

Source = Union[str, os.PathLike, bytes, io.IOBase, Iterable[str]]


@dataclass(frozen=True)
class IngestStats:
    team_id: str
    total_posts: int
    retained_posts: int
    median_comments: int
    posts_per_day_min: int
    posts_per_day_median: float
    posts_per_day_max: int

    def __post_init__(self):
        if self.retained_posts > self.total_posts:
            raise ValueError("retained_posts exceeds total_posts")


def _read_rows(source: Source) -> tuple[list[str], list[dict]]:
    # str and PathLike name a file; raw CSV content comes as bytes or a stream
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return _read_rows(fh.read())
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(bytes(source).decode("utf-8-sig"), newline="")
    elif isinstance(source, (io.BufferedIOBase, io.RawIOBase)):
        source = io.StringIO(source.read().decode("utf-8-sig"), newline="")
    reader = csv.DictReader(source)
    header = [h.strip() for h in (reader.fieldnames or [])]
    reader.fieldnames = header
    return header, list(reader)


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 to an aware UTC datetime truncated to whole seconds.

    Naive timestamps are taken to be UTC already.
    """
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def _float(value: str, row: int, field: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"not a number: {value!r}", row, field) from None
    if math.isnan(v) or math.isinf(v):
        raise ParseError(f"not a finite number: {value!r}", row, field)
    return v


def _int(value: str, row: int, field: str) -> int:
    v = _float(value, row, field)
    if v != int(v):
        raise ParseError(f"not an integer: {value!r}", row, field)
    return int(v)


def load_posts(source: Source) -> dict[str, list[PostRecord]]:
    """Parse a posts table into per-team, time-sorted lists of PostRecords.

    Teams come back in sorted ``team_id`` order.  Rows with zero comments and
    all-zero emotion columns are kept (they count towards a team's median)
    with ``dist=None``.
    """
    header, rows = _read_rows(source)
    missing = [c for c in POSTS_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"missing columns {missing}; expected header {','.join(POSTS_COLUMNS)}")
    has_seq = "seq" in header

    parsed = []
    for i, row in enumerate(rows):
        team = (row["team_id"] or "").strip()
        if not team:
            raise ParseError("empty team_id", i, "team_id")
        try:
            ts = parse_timestamp(row["timestamp"] or "")
        except ValueError:
            raise ParseError(f"bad ISO-8601 timestamp {row['timestamp']!r}", i, "timestamp") from None
        n = _int(row["n_comments"], i, "n_comments")
        if n < 0:
            raise ParseError("negative comment count", i, "n_comments")
        emo = []
        for e in EMOTIONS:
            v = _float(row[e.value], i, e.value)
            if v < 0:
                raise ParseError("negative emotion share", i, e.value)
            emo.append(v)
        seq = _int(row["seq"], i, "seq") if has_seq and (row["seq"] or "").strip() else None
        parsed.append((i, team, ts, n, emo, seq))

    scale = 1.0
    if parsed and max(max(p[4]) for p in parsed) > PERCENT_DETECTION_MAX:
        scale = 100.0

    groups: dict[str, list[PostRecord]] = defaultdict(list)
    seen: dict[tuple, int] = {}
    for i, team, ts, n, emo, seq in parsed:
        shares = [v / scale for v in emo]
        total = math.fsum(shares)
        if n == 0 and total == 0:
            dist = None
        else:
            if abs(total - 1.0) > SUM_TOLERANCE:
                raise ParseError(
                    f"emotion shares sum to {total:.6g}, expected 1", i, "joy,anger,sadness,fear"
                )
            dist = EmotionDistribution.normalized(shares)
        key = (team, ts, seq) if has_seq else (team, ts)
        if key in seen:
            hint = "" if has_seq else "; add a seq column to order simultaneous posts"
            raise ParseError(
                f"duplicate timestamp {ts.isoformat()} for team {team!r} (also row {seen[key]}){hint}",
                i, "timestamp",
            )
        seen[key] = i
        groups[team].append(PostRecord(team, ts, n, dist, seq))

    out = {}
    for team in sorted(groups):
        out[team] = sorted(
            groups[team],
            key=lambda p: (p.timestamp, p.seq if p.seq is not None else 0),
        )
    return out


_GEO = {"north": "North", "n": "North", "center": "Center", "centre": "Center",
        "c": "Center", "south": "South", "s": "South"}


def _league_ranks(values: dict[str, float]) -> dict[str, int]:
    # highest value gets rank 1; ties broken by team_id
    order = sorted(values, key=lambda t: (-values[t], t))
    return {t: k + 1 for k, t in enumerate(order)}


def load_metadata(source: Source) -> dict[str, TeamMetadata]:
    """Parse team metadata, deriving league-scoped market-value and income ranks.

    When ``mv_rank`` / ``pci_rank`` columns are absent they are computed within
    each league by descending market value / per-capita income.
    """
    header, rows = _read_rows(source)
    missing = [c for c in METADATA_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"missing columns {missing}; expected header {','.join(METADATA_COLUMNS)}")

    records = {}
    for i, row in enumerate(rows):
        team = (row["team_id"] or "").strip()
        if not team:
            raise ParseError("empty team_id", i, "team_id")
        if team in records:
            raise ParseError(f"duplicate team {team!r}", i, "team_id")
        league = (row["league"] or "").strip().upper()
        if league not in ("A", "B", "C"):
            raise ParseError(f"league must be A, B or C, got {row['league']!r}", i, "league")
        geo = _GEO.get((row["geo"] or "").strip().lower())
        if geo is None:
            raise ParseError(f"geo must be North, Center or South, got {row['geo']!r}", i, "geo")
        rec = {
            "row": i, "team_id": team, "league": league, "geo": geo,
            "pci": _float(row["pci"], i, "pci"),
            "unemployment": _float(row["unemployment"], i, "unemployment"),
            "welfare": _float(row["welfare"], i, "welfare"),
            "market_value": _float(row["market_value"], i, "market_value"),
            "heritage_rank": _int(row["heritage_rank"], i, "heritage_rank"),
            "final_rank": _int(row["final_rank"], i, "final_rank"),
        }
        for opt in ("mv_rank", "pci_rank"):
            if opt in header and (row[opt] or "").strip():
                rec[opt] = _int(row[opt], i, opt)
        for name in ("heritage_rank", "final_rank", "mv_rank", "pci_rank"):
            if name in rec and rec[name] < 1:
                raise ParseError("ranks start at 1", i, name)
        records[team] = rec

    by_league = defaultdict(list)
    for rec in records.values():
        by_league[rec["league"]].append(rec)
    for league, recs in by_league.items():
        mv = _league_ranks({r["team_id"]: r["market_value"] for r in recs})
        pci = _league_ranks({r["team_id"]: r["pci"] for r in recs})
        for r in recs:
            r.setdefault("mv_rank", mv[r["team_id"]])
            r.setdefault("pci_rank", pci[r["team_id"]])
        for name in ("final_rank", "mv_rank", "pci_rank"):
            seen = {}
            for r in recs:
                if r[name] in seen:
                    raise ParseError(
                        f"{name} {r[name]} repeated in league {league} "
                        f"({seen[r[name]]!r} and {r['team_id']!r})",
                        r["row"], name,
                    )
                seen[r[name]] = r["team_id"]

    out = {}
    for team in sorted(records):
        rec = dict(records[team])
        rec.pop("row")
        out[team] = TeamMetadata(**rec)
    return out


def lower_median(values: Iterable[int]):
    """Median that always picks an attained value (lower middle for even sizes)."""
    s = sorted(values)
    if not s:
        raise ValueError("median of an empty list")
    return s[(len(s) - 1) // 2]


def _posts_per_day(posts: list[PostRecord]) -> list[int]:
    counts = defaultdict(int)
    for p in posts:
        counts[p.timestamp.astimezone(timezone.utc).date()] += 1
    return list(counts.values())


def apply_median_threshold(posts: list[PostRecord], threshold: Optional[int] = None):
    """Keep posts with at least the team's median number of comments.

    The median is taken over every post of the team, comment-less ones
    included.  Pass ``threshold`` to reuse a previously computed cut.
    Returns ``(retained, IngestStats)``.
    """
    if not posts:
        raise ValueError("apply_median_threshold needs at least one post")
    team = posts[0].team_id
    if threshold is None:
        threshold = lower_median(p.n_comments for p in posts)
    retained = [p for p in posts if p.n_comments >= threshold and p.n_comments >= 1]
    per_day = _posts_per_day(posts)
    stats = IngestStats(
        team_id=team,
        total_posts=len(posts),
        retained_posts=len(retained),
        median_comments=int(threshold),
        posts_per_day_min=min(per_day),
        posts_per_day_median=float(np.median(per_day)),
        posts_per_day_max=max(per_day),
    )
    return retained, stats


def posts_to_series(posts: list[PostRecord]) -> EmotionalSeries:
    """EmotionalSeries from time-sorted posts.

    Posts sharing an instant (only possible when a ``seq`` column ordered
    them) are merged into one observation by averaging their distributions.
    """
    posts = [p for p in posts if p.dist is not None]
    if not posts:
        raise ValueError("no posts with an emotion distribution")
    groups: dict[datetime, list[EmotionDistribution]] = {}
    for p in posts:
        groups.setdefault(p.timestamp, []).append(p.dist)
    stamps = sorted(groups)
    dists = [_mean_distribution(groups[t]) for t in stamps]
    return EmotionalSeries(posts[0].team_id, tuple(stamps), tuple(dists))


def _mean_distribution(dists: list[EmotionDistribution]) -> EmotionDistribution:
    if len(dists) == 1:
        return dists[0]
    mean = np.mean([d.as_tuple() for d in dists], axis=0)
    return EmotionDistribution.normalized(mean)


def aggregate_daily(series: EmotionalSeries) -> EmotionalSeries:
    """One observation per UTC calendar day that has posts; empty days are skipped."""
    days: dict = {}
    for ts, dist in zip(series.timestamps, series.distributions):
        days.setdefault(ts.astimezone(timezone.utc).date(), []).append(dist)
    stamps = []
    dists = []
    for day in sorted(days):
        stamps.append(datetime.combine(day, time(0), tzinfo=timezone.utc))
        dists.append(_mean_distribution(days[day]))
    return EmotionalSeries(series.team_id, tuple(stamps), tuple(dists))


def binarize(series: EmotionalSeries, emotion: Emotion | str) -> BinaryEventSeries:
    """1 wherever ``emotion`` holds the largest share (every tied maximum scores 1)."""
    e = Emotion(emotion)
    bits = tuple(int(e in d.maximal()) for d in series.distributions)
    return BinaryEventSeries(series.team_id, e, series.timestamps, bits)


def extract_inter_event(series: BinaryEventSeries) -> InterEventTimes:
    times = series.event_seconds()
    if times.size < 2:
        raise InsufficientEventsError(
            f"insufficient events: team {series.team_id!r} has {times.size} "
            f"{series.emotion.value} event(s), need at least 2"
        )
    return InterEventTimes(tuple(np.diff(times)))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _dist_fields(d: EmotionDistribution) -> dict:
    return {e.value: d[e] for e in EMOTIONS}


def series_document(retained: list[PostRecord], daily: EmotionalSeries) -> dict:
    return {
        "team_id": daily.team_id,
        "retained": [
            {"timestamp": p.timestamp.isoformat(), "n_comments": p.n_comments,
             **({"seq": p.seq} if p.seq is not None else {}), **_dist_fields(p.dist)}
            for p in retained
        ],
        "daily": [
            {"date": ts.date().isoformat(), **_dist_fields(d)}
            for ts, d in zip(daily.timestamps, daily.distributions)
        ],
    }


def read_series_document(doc: dict) -> tuple[list[PostRecord], EmotionalSeries]:
    team = doc["team_id"]
    retained = [
        PostRecord(
            team, parse_timestamp(r["timestamp"]), int(r["n_comments"]),
            EmotionDistribution(*(float(r[e.value]) for e in EMOTIONS)), r.get("seq"),
        )
        for r in doc["retained"]
    ]
    daily = EmotionalSeries(
        team,
        tuple(datetime.fromisoformat(r["date"]).replace(tzinfo=timezone.utc) for r in doc["daily"]),
        tuple(EmotionDistribution(*(float(r[e.value]) for e in EMOTIONS)) for r in doc["daily"]),
    )
    return retained, daily


def write_series_json(path: Union[str, os.PathLike], retained, daily: EmotionalSeries) -> None:
    text = json.dumps(series_document(retained, daily), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_series_json(path: Union[str, os.PathLike]):
    return read_series_document(json.loads(Path(path).read_text(encoding="utf-8")))


STATS_COLUMNS = (
    "team_id", "total_posts", "retained_posts", "median_comments",
    "posts_per_day_min", "posts_per_day_median", "posts_per_day_max",
)


def write_ingest_stats(path: Union[str, os.PathLike], stats: Iterable[IngestStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        for s in stats:
            w.writerow([getattr(s, c) for c in STATS_COLUMNS])
