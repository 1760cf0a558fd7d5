"""Ordinary least squares models of final rank and the ablation comparison."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import RankDeficientError, UndefinedStatisticError
from .model import BurstinessReport, Emotion, TeamMetadata

__all__ = [
    "PREDICTORS",
    "DesignMatrix",
    "FitResult",
    "AblationResult",
    "fit_ols",
    "r_squared",
    "rmse",
    "build_design",
    "build_full_model",
    "ablation_compare",
    "fit_to_dict",
    "write_regression_json",
]

logger = logging.getLogger(__name__)

# predictor name -> how to read it from (metadata, joy report)
PREDICTORS = {
    "heritage": lambda m, rep: m.heritage_rank,
    "pci": lambda m, rep: m.pci,
    "mv": lambda m, rep: m.market_value,
    "welfare": lambda m, rep: m.welfare,
    "unemployment": lambda m, rep: m.unemployment,
    "b_joy": lambda m, rep: rep.B_n,
}
RESPONSES = {"final_rank": lambda m: m.final_rank}
FULL_MODEL = ("heritage", "pci", "mv", "welfare", "b_joy")
INTERCEPT = "intercept"


@dataclass(frozen=True)
class DesignMatrix:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "columns", tuple(self.columns))
        if X.ndim != 2 or X.shape != (len(self.rows), len(self.columns)):
            raise ValueError(f"X shape {X.shape} does not match labels "
                             f"({len(self.rows)} x {len(self.columns)})")
        if y.shape != (len(self.rows),):
            raise ValueError("response length differs from row count")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("design matrix has missing or non-finite values")
        if INTERCEPT not in self.columns or not np.all(X[:, self.columns.index(INTERCEPT)] == 1):
            raise ValueError("design matrix needs an intercept column of ones")
        if X.shape[0] < X.shape[1] + 1:
            raise ValueError(f"need at least {X.shape[1] + 1} rows, got {X.shape[0]}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def drop(self, name: str) -> DesignMatrix:
        if name == INTERCEPT:
            raise ValueError("the intercept cannot be dropped")
        if name not in self.columns:
            raise KeyError(f"no predictor named {name!r}; have {list(self.columns)}")
        keep = [i for i, c in enumerate(self.columns) if c != name]
        return DesignMatrix(self.rows, tuple(self.columns[i] for i in keep),
                            self.X[:, keep], self.y)

    def scaled(self, factors: Mapping[str, float]) -> DesignMatrix:
        X = self.X.copy()
        for name, f in factors.items():
            X[:, self.columns.index(name)] *= f
        return DesignMatrix(self.rows, self.columns, X, self.y)


@dataclass(frozen=True)
class FitResult:
    columns: tuple[str, ...]
    coefficients: np.ndarray
    standardized: np.ndarray
    rows: tuple[str, ...]
    y: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.columns.index(name)])

    @property
    def r2(self) -> float:
        return r_squared(self)

    @property
    def rmse(self) -> float:
        return rmse(self)


def _collinear_columns(X: np.ndarray, columns: Sequence[str], tol: float) -> list[str]:
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    names = set()
    for k in np.nonzero(s <= tol * s[0])[0]:
        v = np.abs(vt[k])
        names.update(columns[i] for i in np.nonzero(v > 1e-6 * v.max())[0])
    return [c for c in columns if c in names]


def fit_ols(dm: DesignMatrix, rcond: float = 1e-10) -> FitResult:
    """Least-squares coefficients of ``y`` on the design columns.

    Raises :class:`RankDeficientError` naming the columns involved in any
    near-linear dependence (smallest singular value below ``rcond`` times the
    largest).
    """
    X, y = dm.X, dm.y
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] <= rcond * s[0]:
        cols = _collinear_columns(X, dm.columns, rcond)
        raise RankDeficientError(f"design matrix is rank deficient; collinear columns: {cols}", cols)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ beta
    residuals = y - fitted

    # coefficients on z-scored predictors and response; intercept stays 0
    sd_y = float(np.std(y))
    std = np.zeros_like(beta)
    for i, c in enumerate(dm.columns):
        sd_x = float(np.std(X[:, i]))
        if c != INTERCEPT and sd_y > 0 and sd_x > 0:
            std[i] = beta[i] * sd_x / sd_y
    for arr in (beta, std, fitted, residuals):
        arr.setflags(write=False)
    return FitResult(dm.columns, beta, std, dm.rows, dm.y, fitted, residuals)


def r_squared(fit: FitResult) -> float:
    """1 - SS_res / SS_tot, with SS_tot about the response mean."""
    y = fit.y
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise UndefinedStatisticError("R^2 is undefined for a constant response")
    ss_res = float(np.sum(fit.residuals ** 2))
    return 1.0 - ss_res / ss_tot


def rmse(fit: FitResult) -> float:
    return math.sqrt(float(np.mean(fit.residuals ** 2)))


def build_design(meta: Mapping[str, TeamMetadata],
                 joy_reports: Optional[Mapping[str, BurstinessReport]] = None,
                 predictors: Sequence[str] = FULL_MODEL,
                 response: str = "final_rank",
                 league: Optional[str] = None) -> DesignMatrix:
    """Assemble a design matrix from team metadata and joy burstiness.

    Teams without a usable joy report are left out with a warning when a
    predictor needs it.  ``league`` restricts the rows to one league.
    """
    unknown = [p for p in predictors if p not in PREDICTORS]
    if unknown:
        raise ValueError(f"unknown predictors {unknown}; choose from {sorted(PREDICTORS)}")
    if response not in RESPONSES:
        raise ValueError(f"unknown response {response!r}; choose from {sorted(RESPONSES)}")
    joy_reports = joy_reports or {}
    needs_joy = "b_joy" in predictors
    rows, X, y = [], [], []
    excluded = []
    for team in sorted(meta):
        m = meta[team]
        if league is not None and m.league != league:
            continue
        rep = joy_reports.get(team)
        if needs_joy and (rep is None or rep.B_n is None or not math.isfinite(rep.B_n)):
            excluded.append(team)
            continue
        if rep is not None and rep.emotion is not Emotion.JOY:
            raise ValueError(f"report for {team!r} is for {rep.emotion.value}, not joy")
        rows.append(team)
        X.append([1.0] + [float(PREDICTORS[p](m, rep)) for p in predictors])
        y.append(float(RESPONSES[response](m)))
    if excluded:
        logger.warning("excluded %d team(s) without joy burstiness: %s",
                       len(excluded), ", ".join(excluded))
    if not rows:
        raise ValueError("no teams left to fit after exclusions")
    return DesignMatrix(tuple(rows), (INTERCEPT, *predictors),
                        np.array(X).reshape(len(rows), -1), np.array(y))


def build_full_model(meta: Mapping[str, TeamMetadata],
                     joy_reports: Mapping[str, BurstinessReport],
                     league: Optional[str] = None) -> DesignMatrix:
    """Final rank on heritage, PCI, market value, welfare and joy burstiness."""
    return build_design(meta, joy_reports, FULL_MODEL, "final_rank", league)


@dataclass(frozen=True)
class AblationResult:
    dropped: str
    full: FitResult
    reduced: FitResult
    delta_r2_pct: float
    delta_rmse_pct: float


def ablation_compare(full: DesignMatrix, drop: str) -> AblationResult:
    """Fit with and without ``drop``; report the relative loss in R^2 and
    increase in RMSE, both in percent of the full model."""
    reduced = full.drop(drop)
    f_full = fit_ols(full)
    f_red = fit_ols(reduced)
    r2_full, r2_red = r_squared(f_full), r_squared(f_red)
    e_full, e_red = rmse(f_full), rmse(f_red)
    d_r2 = 100.0 * (r2_full - r2_red) / r2_full if r2_full != 0 else math.nan
    d_rmse = 100.0 * (e_red - e_full) / e_full if e_full != 0 else math.nan
    return AblationResult(drop, f_full, f_red, d_r2, d_rmse)


def _jsonable(v: float) -> Optional[float]:
    v = float(v)
    return v if math.isfinite(v) else None


def fit_to_dict(fit: FitResult) -> dict:
    try:
        r2 = r_squared(fit)
    except UndefinedStatisticError:
        r2 = None
    return {
        "coefficients": {c: float(b) for c, b in zip(fit.columns, fit.coefficients)},
        "standardized_coefficients": {c: float(b) for c, b in zip(fit.columns, fit.standardized)
                                      if c != INTERCEPT},
        "r2": r2,
        "rmse": rmse(fit),
        "n": len(fit.rows),
        "observations": [
            {"team_id": t, "observed": float(o), "fitted": float(f), "residual": float(e)}
            for t, o, f, e in zip(fit.rows, fit.y, fit.fitted, fit.residuals)
        ],
    }


def write_regression_json(path, result: AblationResult | FitResult, extra: Optional[dict] = None) -> None:
    if isinstance(result, AblationResult):
        doc = {
            "dropped": result.dropped,
            "full": fit_to_dict(result.full),
            "reduced": fit_to_dict(result.reduced),
            "delta_r2_pct": _jsonable(result.delta_r2_pct),
            "delta_rmse_pct": _jsonable(result.delta_rmse_pct),
        }
    else:
        doc = {"full": fit_to_dict(result)}
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
