"""Candidate model enumeration and per-window fitting.

The explanatory universe holds five lagged variables: the one- and
two-session-lagged returns plus the one-session-lagged positive, negative,
and neutral sentiment counts.  Candidates are every non-empty subset that
contains at least one sentiment variable, plus the single financial pair
made of both lagged returns.  A candidate survives a window only when every
one of its regressors is individually significant below the p threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError
from .regression import DesignMatrix, FitResult, fit_ols
from .sessions import SessionSeries

P_THRESHOLD = 0.10
MIN_RESIDUAL_DF = 3


class Variable(Enum):
    R1 = "r_lag1"
    R2 = "r_lag2"
    P1 = "pos_lag1"
    N1 = "neg_lag1"
    Z1 = "neu_lag1"

    @property
    def is_sentiment(self) -> bool:
        return self in (Variable.P1, Variable.N1, Variable.Z1)


class ModelClass(str, Enum):
    FINANCIAL = "financial"
    SENTIMENT = "sentiment"


@dataclass(frozen=True)
class Candidate:
    variables: tuple[Variable, ...]

    def __post_init__(self) -> None:
        if not self.variables:
            raise ValueError("candidate needs at least one variable")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("candidate variables must be distinct")

    @property
    def model_class(self) -> ModelClass:
        if any(v.is_sentiment for v in self.variables):
            return ModelClass.SENTIMENT
        return ModelClass.FINANCIAL

    @property
    def label(self) -> str:
        return "+".join(v.name for v in self.variables)


def enumerate_candidates() -> tuple[Candidate, ...]:
    """All 29 candidate models, the financial pair first.

    Subsets are ordered by their bitmask over the variable declaration
    order, so the sequence is deterministic.
    """
    universe = tuple(Variable)
    financial = []
    sentiment = []
    for mask in range(1, 1 << len(universe)):
        variables = tuple(v for i, v in enumerate(universe) if mask >> i & 1)
        candidate = Candidate(variables)
        if candidate.model_class is ModelClass.SENTIMENT:
            sentiment.append(candidate)
        elif set(variables) == {Variable.R1, Variable.R2}:
            financial.append(candidate)
    return tuple(financial + sentiment)


CANDIDATES = enumerate_candidates()


@dataclass(frozen=True)
class FittedModel:
    """One candidate's outcome on one window."""

    candidate: Candidate
    fit: FitResult | None
    predicted_next: float | None
    passed_filter: bool


def _column(series: SessionSeries, variable: Variable, start: int, stop: int, normalize: bool) -> np.ndarray:
    r = series.returns_array
    if variable is Variable.R1:
        return r[start - 1 : stop - 1]
    if variable is Variable.R2:
        return r[start - 2 : stop - 2]
    pos, neg, neu = series.pos_array, series.neg_array, series.neu_array
    if normalize:
        total = pos + neg + neu
        with np.errstate(invalid="ignore", divide="ignore"):
            shares = {
                Variable.P1: np.where(total > 0, pos / total, 0.0),
                Variable.N1: np.where(total > 0, neg / total, 0.0),
                Variable.Z1: np.where(total > 0, neu / total, 0.0),
            }
        return shares[variable][start - 1 : stop - 1]
    raw = {Variable.P1: pos, Variable.N1: neg, Variable.Z1: neu}
    return raw[variable][start - 1 : stop - 1]


def build_design(
    series: SessionSeries,
    variables: tuple[Variable, ...],
    t: int,
    w: int,
    normalize: bool = False,
) -> tuple[DesignMatrix, np.ndarray]:
    """Design for regressing returns t-w..t-1 on lagged variables.

    Also returns the prediction row of lagged values aligned with session t
    itself; t == len(series) is allowed, producing a true out-of-sample row.
    """
    n = len(series)
    if not 0 < w:
        raise DataError(f"window length must be positive, got {w}")
    if t > n:
        raise DataError(f"window end {t} beyond series length {n}")
    if t - w < 2:
        raise DataError(f"window [{t - w}, {t}) needs two sessions of history before it")
    columns = [_column(series, v, t - w, t, normalize) for v in variables]
    X = np.column_stack(columns)
    y = series.returns_array[t - w : t]
    prediction_row = np.array(
        [_column(series, v, t, t + 1, normalize)[0] for v in variables]
    )
    return DesignMatrix(X, y), prediction_row


def fit_window(
    series: SessionSeries,
    t: int,
    w: int,
    p_threshold: float = P_THRESHOLD,
    *,
    normalize: bool = False,
    min_residual_df: int = MIN_RESIDUAL_DF,
) -> list[FittedModel]:
    """Fit every candidate on the window ending just before session t.

    Candidates whose residual degrees of freedom would fall below
    ``min_residual_df``, whose window is rank-deficient, or with any
    regressor p-value at or above the threshold fail the filter; the fit
    and its prediction are still reported whenever the solve succeeded.
    """
    results = []
    for candidate in CANDIDATES:
        k = len(candidate.variables)
        if w - k - 1 < min_residual_df:
            results.append(FittedModel(candidate, None, None, False))
            continue
        design, prediction_row = build_design(series, candidate.variables, t, w, normalize)
        fit = fit_ols(design)
        if not fit.rank_ok:
            results.append(FittedModel(candidate, fit, None, False))
            continue
        predicted = fit.predict(prediction_row)
        passed = bool(np.all(fit.p_values < p_threshold))
        results.append(FittedModel(candidate, fit, predicted, passed))
    return results
