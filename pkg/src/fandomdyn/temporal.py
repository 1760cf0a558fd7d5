"""Burstiness and memory statistics of inter-event times.

All dispersion measures use population moments (divisor ``n``).  The
finite-size burstiness takes ``n`` to be the number of inter-event times;
with that choice the population coefficient of variation is bounded by
``sqrt(n - 1)`` and ``burstiness_finite`` spans exactly [-1, 1].
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DegenerateSequenceError, InsufficientEventsError
from .ingest import extract_inter_event
from .model import BinaryEventSeries, BurstinessReport, InterEventTimes

__all__ = [
    "coefficient_of_variation",
    "burstiness",
    "burstiness_from_cv",
    "burstiness_finite",
    "burstiness_finite_from_cv",
    "finite_size_count",
    "memory",
    "report",
]

TausLike = Union[InterEventTimes, Sequence[float], np.ndarray]

# relative threshold below which a window's standard deviation counts as zero
_ZERO_SPREAD = 1e-12


def _as_taus(taus: TausLike) -> np.ndarray:
    if isinstance(taus, InterEventTimes):
        return taus.as_array()
    arr = np.asarray(taus, dtype=float).ravel()
    # min() propagates NaN, so one comparison catches NaN and non-positive values
    if arr.size and not (arr.min() > 0 and arr.max() < np.inf):
        raise ValueError("inter-event times must be positive and finite")
    return arr


def _moments(arr: np.ndarray) -> tuple[float, float]:
    if arr.size and (arr == arr[0]).all():
        # the mean of identical floats can round away from them
        return float(arr[0]), 0.0
    mu = float(arr.mean())
    dev = arr - mu
    return mu, math.sqrt(float(dev @ dev) / arr.size)


def coefficient_of_variation(taus: TausLike) -> float:
    """Population standard deviation over mean of the inter-event times."""
    arr = _as_taus(taus)
    if arr.size == 0:
        raise InsufficientEventsError("insufficient events: no inter-event times")
    mu, sigma = _moments(arr)
    return sigma / mu


def burstiness_from_cv(r: float) -> float:
    return (r - 1.0) / (r + 1.0)


def burstiness(taus: TausLike) -> float:
    """(sigma - mu) / (sigma + mu): -1 periodic, 0 Poisson, towards 1 bursty."""
    return burstiness_from_cv(coefficient_of_variation(taus))


def finite_size_count(n_tau: int) -> int:
    """Sequence size plugged into the finite-size correction.

    Kept as its own function so the events-vs-gaps convention lives in one
    place; currently the number of inter-event times.
    """
    return n_tau


def burstiness_finite_from_cv(r: float, n: int) -> float:
    if n < 2:
        raise InsufficientEventsError(
            f"insufficient events: finite-size burstiness needs n >= 2, got {n}"
        )
    sp = math.sqrt(n + 1)
    sm = math.sqrt(n - 1)
    den = (sp - 2.0) * r + sm
    if abs(den) < 1e-12:
        raise DegenerateSequenceError(
            f"finite-size burstiness denominator vanishes (r={r!r}, n={n})"
        )
    return (sp * r - sm) / den


def burstiness_finite(taus: TausLike) -> float:
    arr = _as_taus(taus)
    n = finite_size_count(arr.size)
    if n < 2:
        raise InsufficientEventsError(
            f"insufficient events: finite-size burstiness needs 2 inter-event times, got {arr.size}"
        )
    return burstiness_finite_from_cv(coefficient_of_variation(arr), n)


def memory(taus: TausLike, lag: int = 1) -> Optional[float]:
    """Correlation between inter-event times ``lag`` events apart.

    Returns ``None`` when either window has zero spread, since the
    coefficient is then undefined (not zero).
    """
    if int(lag) != lag or lag < 1:
        raise ValueError(f"lag must be a positive integer, got {lag!r}")
    arr = _as_taus(taus)
    if arr.size <= lag:
        raise InsufficientEventsError(
            f"insufficient events: memory at lag {lag} needs more than {lag} "
            f"inter-event times, got {arr.size}"
        )
    first = arr[:-lag]
    second = arr[lag:]
    mu1, s1 = _moments(first)
    mu2, s2 = _moments(second)
    if s1 <= _ZERO_SPREAD * abs(mu1) or s2 <= _ZERO_SPREAD * abs(mu2):
        return None
    m = float((first - mu1) @ (second - mu2)) / first.size / (s1 * s2)
    # rounding can push a perfect correlation a hair outside [-1, 1]
    return min(1.0, max(-1.0, m))


def report(series: Union[BinaryEventSeries, InterEventTimes], lag: int = 1,
           team_id: Optional[str] = None, emotion=None) -> BurstinessReport:
    """Bundle every statistic for one (team, emotion) event sequence."""
    if isinstance(series, BinaryEventSeries):
        taus = extract_inter_event(series)
        team_id = series.team_id if team_id is None else team_id
        emotion = series.emotion if emotion is None else emotion
    else:
        taus = series
        if team_id is None or emotion is None:
            raise ValueError("team_id and emotion are required for raw inter-event times")
    arr = taus.as_array()
    if arr.size < 2:
        raise InsufficientEventsError(
            f"insufficient events: need 2 inter-event times, got {arr.size}"
        )
    mu, sigma = _moments(arr)
    r = sigma / mu
    return BurstinessReport(
        team_id=team_id,
        emotion=emotion,
        n_tau=int(arr.size),
        mu_tau=mu,
        sigma_tau=sigma,
        r=r,
        B=burstiness_from_cv(r),
        B_n=burstiness_finite_from_cv(r, finite_size_count(arr.size)),
        M=memory(arr, lag) if arr.size > lag else None,
        lag=lag,
    )
