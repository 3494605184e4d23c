"""Raw series, lag patterns, warning labels and min-max scaling.

Ticks are 1-based throughout the public API: a series of length ``n`` covers
ticks ``1..n`` and the pattern for tick ``t`` holds readings ``t - tau .. t``.
Array positions are always ``tick - 1`` for a series and
``tick - (tau + 1)`` for a pattern set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    AllMissingFeature,
    DataError,
    EmptyTrainingSet,
    LeadingGap,
    ShapeMismatch,
    TauTooLarge,
)

MISSING = np.nan


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly ticked multivariate readings with binary event labels.

    ``features`` is ``(n_ticks, d)``; missing readings are NaN.
    ``first_tick`` only records the tick number of row 0 in the source file so
    that exported CSVs keep the original numbering.
    """

    features: np.ndarray
    events: np.ndarray
    tick_minutes: int = 60
    first_tick: int = 1

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-D array, got shape {features.shape}")
        events = np.asarray(self.events)
        if events.shape != (features.shape[0],):
            raise ShapeMismatch(
                f"events has shape {events.shape}, expected ({features.shape[0]},)"
            )
        if not np.isin(events, (0, 1)).all():
            raise DataError("event labels must be 0 or 1")
        if np.isinf(features).any():
            raise DataError("feature readings must be finite (NaN marks a missing value)")
        if self.tick_minutes <= 0:
            raise DataError("tick_minutes must be positive")
        object.__setattr__(self, "features", _frozen(features, float))
        object.__setattr__(self, "events", _frozen(events, np.int8))

    @property
    def n_ticks(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def ticks(self) -> np.ndarray:
        return np.arange(1, self.n_ticks + 1)

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.features).any())


@dataclass(frozen=True, eq=False)
class PatternSet:
    """Lagged patterns ``X_t = (x_{t-tau}, ..., x_t)`` for consecutive ticks.

    ``patterns`` has shape ``(n, d, tau + 1)``; column ``j`` of a pattern is the
    reading ``j`` steps after ``t - tau``. ``warning_labels`` is ``None`` until
    labels for a particular ``omega`` are attached.
    """

    ticks: np.ndarray
    patterns: np.ndarray
    original_labels: np.ndarray
    tau: int
    warning_labels: np.ndarray | None = None
    omega: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "ticks", _frozen(self.ticks, np.int64))
        object.__setattr__(self, "patterns", _frozen(self.patterns, float))
        object.__setattr__(self, "original_labels", _frozen(self.original_labels, np.int8))
        if self.warning_labels is not None:
            object.__setattr__(self, "warning_labels", _frozen(self.warning_labels, np.int8))
            if self.warning_labels.shape != self.ticks.shape:
                raise ShapeMismatch("warning_labels must align with ticks")
        n = self.ticks.shape[0]
        if self.patterns.shape[0] != n or self.original_labels.shape != (n,):
            raise ShapeMismatch("patterns, ticks and labels must have equal length")
        if n and np.any(np.diff(self.ticks) != 1):
            raise DataError("pattern ticks must be consecutive")

    def __len__(self) -> int:
        return self.ticks.shape[0]

    @property
    def n_features(self) -> int:
        return self.patterns.shape[1]

    @property
    def n_columns(self) -> int:
        return self.patterns.shape[1] * self.patterns.shape[2]

    @property
    def matrix(self) -> np.ndarray:
        """Patterns flattened to ``(n, d * (tau + 1))``, feature-major."""
        return self.patterns.reshape(len(self), -1)

    @property
    def first_tick(self) -> int:
        return int(self.ticks[0])

    def rows(self, ticks) -> np.ndarray:
        """Array positions of the given ticks."""
        ticks = np.asarray(ticks, dtype=np.int64)
        pos = ticks - self.first_tick
        if pos.size and (pos.min() < 0 or pos.max() >= len(self)):
            raise IndexError("tick outside the pattern set")
        return pos

    def with_warning_labels(self, labels, omega: int | None) -> "PatternSet":
        return replace(self, warning_labels=np.asarray(labels), omega=omega)


Strategy = Literal["mean", "forward_fill"]


def impute_missing(series: TimeSeries, strategy: Strategy = "mean") -> TimeSeries:
    """Replace NaN readings column by column.

    ``mean`` substitutes the column mean of the observed values;
    ``forward_fill`` carries the last observation forward and refuses a
    missing first value.
    """
    x = np.array(series.features)
    missing = np.isnan(x)
    if not missing.any():
        return series
    if strategy == "mean":
        for j in range(x.shape[1]):
            col = missing[:, j]
            if col.all():
                raise AllMissingFeature(f"feature {j} has no observed values")
            if col.any():
                x[col, j] = x[~col, j].mean()
    elif strategy == "forward_fill":
        for j in range(x.shape[1]):
            col = missing[:, j]
            if col[0]:
                raise LeadingGap(f"feature {j} is missing at the first tick")
            # index of the most recent observation at or before each row
            last = np.where(~col, np.arange(len(col)), 0)
            np.maximum.accumulate(last, out=last)
            x[:, j] = x[last, j]
    else:
        raise ValueError(f"unknown imputation strategy {strategy!r}")
    return replace(series, features=x)


def build_patterns(series: TimeSeries, tau: int) -> PatternSet:
    """Stack each tick with its ``tau`` predecessors.

    The first ``tau`` ticks have no full history and produce no pattern, so
    the result covers ticks ``tau + 1 .. n``.
    """
    if tau < 0:
        raise DataError("tau must be non-negative")
    if tau >= series.n_ticks:
        raise TauTooLarge(f"tau={tau} needs more than {series.n_ticks} ticks")
    windows = sliding_window_view(series.features, tau + 1, axis=0)
    ticks = np.arange(tau + 1, series.n_ticks + 1)
    return PatternSet(
        ticks=ticks,
        patterns=windows,
        original_labels=series.events[tau:],
        tau=tau,
    )


def build_warning_labels(events, omega: int) -> np.ndarray:
    """Flag every tick that has an event within its next ``omega`` ticks.

    The look-ahead window ``t .. t + omega - 1`` is clipped at the end of the
    series. Accepts a :class:`TimeSeries` or a bare label vector.
    """
    if isinstance(events, TimeSeries):
        events = events.events
    if int(omega) != omega or omega < 1:
        raise ValueError("omega must be a positive integer")
    y = np.asarray(events, dtype=np.int64)
    n = y.shape[0]
    csum = np.concatenate([[0], np.cumsum(y)])
    start = np.arange(n)
    stop = np.minimum(start + int(omega), n)
    return (csum[stop] - csum[start] > 0).astype(np.int8)


def make_patterns(series: TimeSeries, tau: int, omega: int) -> PatternSet:
    """Patterns for ``tau`` with warning labels for ``omega`` attached."""
    patterns = build_patterns(series, tau)
    labels = build_warning_labels(series.events, omega)[tau:]
    return patterns.with_warning_labels(labels, omega)


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Affine map of each column onto ``[0, 1]`` using training extrema.

    Columns that were constant in training map to 0 for any input. Values
    outside the training range are not clipped. With ``joint_lags`` the lag
    columns of one underlying feature share a single min/max.
    """

    mins: np.ndarray
    maxs: np.ndarray
    joint_lags: bool = False
    _span: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mins", _frozen(self.mins, float))
        object.__setattr__(self, "maxs", _frozen(self.maxs, float))
        span = self.maxs - self.mins
        object.__setattr__(self, "_span", _frozen(span, float))

    @property
    def n_columns(self) -> int:
        return self.mins.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_columns:
            raise ShapeMismatch(
                f"scaler fitted on {self.n_columns} columns, got shape {X.shape}"
            )
        constant = self._span == 0
        safe = np.where(constant, 1.0, self._span)
        out = (X - self.mins) / safe
        out[:, constant] = 0.0
        return out


PatternsOrMatrix = Union[PatternSet, np.ndarray]


def _as_matrix(data: PatternsOrMatrix) -> np.ndarray:
    if isinstance(data, PatternSet):
        return data.matrix
    return np.asarray(data, dtype=float)


def fit_scaler(
    training: PatternsOrMatrix, joint_lags: bool = False, n_lags: int | None = None
) -> MinMaxScaler:
    """Learn per-column extrema from a training pattern set or matrix.

    ``n_lags`` (``tau + 1``) is only needed for ``joint_lags`` on a bare
    matrix; a :class:`PatternSet` supplies it.
    """
    X = _as_matrix(training)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("cannot fit a scaler on zero patterns")
    mins = X.min(axis=0)
    maxs = X.max(axis=0)
    if joint_lags:
        if isinstance(training, PatternSet):
            n_lags = training.tau + 1
        if not n_lags or X.shape[1] % n_lags:
            raise ShapeMismatch("joint lag scaling needs n_lags dividing the column count")
        mins = np.repeat(mins.reshape(-1, n_lags).min(axis=1), n_lags)
        maxs = np.repeat(maxs.reshape(-1, n_lags).max(axis=1), n_lags)
    return MinMaxScaler(mins, maxs, joint_lags=joint_lags)


def apply_scaler(scaler: MinMaxScaler, data: PatternsOrMatrix) -> PatternsOrMatrix:
    """Scale a pattern set (labels untouched) or a flattened matrix."""
    if isinstance(data, PatternSet):
        scaled = scaler.transform(data.matrix).reshape(data.patterns.shape)
        return replace(data, patterns=scaled)
    return scaler.transform(data)
