"""Synthetic event processes with known burstiness and memory.

These serve as oracles for the temporal statistics: periodic trains have
B = -1, Poisson trains B = 0 and M = 0, heavy-tailed Pareto gaps give B > 0,
and the two-state Markov chain produces positively correlated gaps (M > 0).

Seeds fan out with ``numpy.random.SeedSequence(master).spawn(n)``: task ``i``
always receives child ``i``, whether tasks run serially or in parallel.
"""

from __future__ import annotations

import csv
from datetime import datetime, timedelta, timezone
from typing import Optional

import numpy as np

__all__ = [
    "KINDS",
    "child_seeds",
    "simulate_gaps",
    "simulate_events",
    "write_events",
    "synthetic_posts",
    "synthetic_metadata",
]

KINDS = ("periodic", "poisson", "pareto", "markov")


def child_seeds(master: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master).spawn(n)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def simulate_gaps(kind: str, n_gaps: int, seed=None, *, interval: float = 1.0,
                  rate: float = 1.0, shape: float = 2.5, scale: float = 1.0,
                  p_stay: float = 0.9, fast_rate: float = 10.0,
                  slow_rate: float = 0.1) -> np.ndarray:
    """Draw ``n_gaps`` inter-event times of the requested process.

    periodic
        every gap equals ``interval``.
    poisson
        exponential gaps with mean ``1 / rate``.
    pareto
        classical Pareto gaps, minimum ``scale`` and tail index ``shape``
        (``shape > 2`` keeps the variance finite).
    markov
        a two-state chain that keeps its state with probability ``p_stay``
        and draws exponential gaps at ``fast_rate`` or ``slow_rate`` depending
        on the state; long runs of similar gaps give positive memory.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if n_gaps < 0:
        raise ValueError("n_gaps must be non-negative")
    rng = _rng(seed)
    if kind == "periodic":
        if not interval > 0:
            raise ValueError("interval must be positive")
        return np.full(n_gaps, float(interval))
    if kind == "poisson":
        if not rate > 0:
            raise ValueError("rate must be positive")
        return rng.exponential(1.0 / rate, size=n_gaps)
    if kind == "pareto":
        if not shape > 2:
            raise ValueError("pareto shape must exceed 2 for a finite variance")
        if not scale > 0:
            raise ValueError("scale must be positive")
        return scale * (1.0 + rng.pareto(shape, size=n_gaps))
    if not 0 < p_stay < 1:
        raise ValueError("p_stay must lie in (0, 1)")
    if not (fast_rate > 0 and slow_rate > 0):
        raise ValueError("rates must be positive")
    switches = rng.random(n_gaps) >= p_stay
    state = (rng.random() < 0.5) ^ (np.cumsum(switches) % 2 == 1)
    rates = np.where(state, slow_rate, fast_rate)
    return rng.exponential(1.0, size=n_gaps) / rates


def simulate_events(kind: str, n_events: int, seed=None, start: float = 0.0, **params) -> np.ndarray:
    """Event times starting at ``start``: ``n_events`` points, ``n_events - 1`` gaps."""
    if n_events < 1:
        raise ValueError("n_events must be positive")
    gaps = simulate_gaps(kind, n_events - 1, seed, **params)
    return start + np.concatenate([[0.0], np.cumsum(gaps)])


def write_events(path, times: np.ndarray, header: Optional[dict] = None) -> None:
    """CSV ``index,time`` (seconds); ``header`` items become leading ``#`` lines."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k in sorted(header or {}):
            fh.write(f"# {k}={header[k]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "time"])
        for i, t in enumerate(times):
            w.writerow([i, repr(float(t))])


# ---------------------------------------------------------------------------
# synthetic fandom datasets
# ---------------------------------------------------------------------------

_EPOCH = datetime(2023, 8, 1, tzinfo=timezone.utc)
_GEOS = ("North", "Center", "South")


def synthetic_posts(n_teams: int = 9, n_posts: int = 120, seed: int = 0,
                    days: int = 280) -> list[dict]:
    """Rows for a ``posts.csv`` file with a few distinct joy profiles.

    Teams cycle through three archetypes (mostly joyful, mostly angry, and
    alternating) so clustering has structure to find.  Rows are ordered by
    team, then time.
    """
    rows = []
    seeds = child_seeds(seed, n_teams)
    for t in range(n_teams):
        rng = np.random.default_rng(seeds[t])
        team = f"team{t:02d}"
        kind = t % 3
        offsets = np.sort(rng.choice(days * 86400, size=n_posts, replace=False))
        for k, off in enumerate(offsets):
            phase = k / n_posts
            if kind == 0:
                joy = 0.55 + 0.25 * rng.random()
            elif kind == 1:
                joy = 0.1 + 0.4 * rng.random()
            else:
                joy = 0.2 + 0.6 * (0.5 + 0.5 * np.sin(2 * np.pi * 4 * phase))
            rest = rng.dirichlet([3.0, 1.0, 1.0]) * (1.0 - joy)
            shares = np.round([joy, *rest], 4)
            shares[1] = round(1.0 - shares[0] - shares[2] - shares[3], 4)
            rows.append({
                "team_id": team,
                "timestamp": (_EPOCH + timedelta(seconds=int(off))).isoformat(),
                "n_comments": int(rng.geometric(0.05)),
                "joy": f"{shares[0]:.4f}", "anger": f"{shares[1]:.4f}",
                "sadness": f"{shares[2]:.4f}", "fear": f"{shares[3]:.4f}",
            })
    return rows


def synthetic_metadata(n_teams: int = 9, seed: int = 0) -> list[dict]:
    """Rows for a ``metadata.csv`` file matching :func:`synthetic_posts` team ids."""
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(n_teams + 1)[-1])
    leagues = ["ABC"[t % 3] for t in range(n_teams)]
    rows = []
    final = {lg: list(rng.permutation(leagues.count(lg)) + 1) for lg in "ABC"}
    heritage = rng.permutation(n_teams) + 1
    for t in range(n_teams):
        lg = leagues[t]
        rows.append({
            "team_id": f"team{t:02d}",
            "league": lg,
            "geo": _GEOS[int(rng.integers(3))],
            "pci": f"{rng.normal(22000, 4000):.0f}",
            "unemployment": f"{rng.uniform(0.04, 0.18):.3f}",
            "welfare": f"{rng.normal(150, 40):.1f}",
            "market_value": f"{rng.lognormal(17, 1):.0f}",
            "heritage_rank": int(heritage[t]),
            "final_rank": int(final[lg].pop()),
        })
    return rows
