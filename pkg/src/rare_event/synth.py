"""Synthetic plant-like series with rare events and a learnable precursor.

Each feature is a stationary Gaussian AR(1) process with marginal standard
deviation ``noise``. Events are placed at random with a minimum gap before
each one. During the ``precursor_window`` ticks before an event the
precursor features receive an additive linear ramp that ends at
``precursor_strength * noise``; the offset is held while the event lasts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, InfeasiblePlacement
from .rng import make_rng
from .timeseries import TimeSeries


@dataclass(frozen=True)
class SynthConfig:
    length: int
    n_features: int
    tick_minutes: int = 60
    n_events: int = 5
    event_duration: tuple[int, int] = (6, 24)
    min_spacing: int = 200
    precursor_window: int = 48
    precursor_strength: float = 3.0
    precursor_features: tuple[int, ...] | None = None
    noise: float = 1.0
    ar_coef: float | tuple[float, ...] = 0.8
    missing_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.event_duration
        if self.length < 1 or self.n_features < 1:
            raise ConfigError("length and n_features must be positive")
        if self.n_events < 0:
            raise ConfigError("n_events must be >= 0")
        if not 1 <= lo <= hi:
            raise ConfigError(f"event_duration must satisfy 1 <= lo <= hi, got {lo, hi}")
        if self.min_spacing < 0 or self.tick_minutes < 1:
            raise ConfigError("min_spacing must be >= 0 and tick_minutes >= 1")
        if self.precursor_window < 1:
            raise ConfigError("precursor_window must be >= 1")
        if self.precursor_strength < 0 or self.noise <= 0:
            raise ConfigError("precursor_strength must be >= 0 and noise > 0")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ConfigError("missing_rate must lie in [0, 1)")
        feats = self.feature_subset
        if not feats or min(feats) < 0 or max(feats) >= self.n_features:
            raise ConfigError("precursor_features must be non-empty indices of features")
        phi = self.ar_coefs
        if phi.shape != (self.n_features,) or np.any(np.abs(phi) >= 1):
            raise ConfigError("ar_coef needs one value in (-1, 1) per feature")

    @property
    def feature_subset(self) -> tuple[int, ...]:
        if self.precursor_features is None:
            return tuple(range(self.n_features))
        return tuple(int(f) for f in self.precursor_features)

    @property
    def ar_coefs(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.ar_coef, dtype=float), (self.n_features,)).copy()

    def with_(self, **changes) -> "SynthConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["event_duration"] = list(self.event_duration)
        if self.precursor_features is not None:
            d["precursor_features"] = list(self.precursor_features)
        if not isinstance(self.ar_coef, (int, float)):
            d["ar_coef"] = list(self.ar_coef)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown synth keys {sorted(unknown)}")
        if "event_duration" in d:
            d["event_duration"] = tuple(d["event_duration"])
        if d.get("precursor_features") is not None:
            d["precursor_features"] = tuple(d["precursor_features"])
        if isinstance(d.get("ar_coef"), list):
            d["ar_coef"] = tuple(d["ar_coef"])
        return cls(**d)


@dataclass(frozen=True)
class SynthSeries:
    """A generated series with the 0-based event starts and durations."""

    series: TimeSeries
    event_starts: np.ndarray
    event_lengths: np.ndarray
    drift: np.ndarray = field(repr=False)


def place_events(config: SynthConfig, rng: np.random.Generator):
    """Random event starts and durations.

    Every event is preceded by at least ``min_spacing`` event-free ticks.
    The leftover slack is split uniformly at random among the gaps.
    """
    n = config.n_events
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    lo, hi = config.event_duration
    if n * (hi + config.min_spacing) > config.length:
        raise InfeasiblePlacement(
            f"{n} events of up to {hi} ticks with spacing {config.min_spacing} "
            f"do not fit in {config.length} ticks"
        )
    durations = rng.integers(lo, hi + 1, size=n)
    slack = config.length - int(durations.sum()) - n * config.min_spacing
    # n+1 gap extras summing to slack: sorted uniform cut points
    cuts = np.sort(rng.integers(0, slack + 1, size=n))
    extras = np.diff(np.concatenate([[0], cuts]))
    gaps = extras + config.min_spacing
    starts = np.cumsum(gaps) + np.concatenate([[0], np.cumsum(durations)[:-1]])
    return starts.astype(np.int64), durations.astype(np.int64)


def _ar1(phi: np.ndarray, sigma: float, length: int, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal((length, phi.size))
    out = np.empty_like(eps)
    for f, a in enumerate(phi):
        innov = eps[:, f] * sigma * np.sqrt(1.0 - a * a)
        innov[0] = eps[0, f] * sigma  # start in the stationary distribution
        out[:, f] = lfilter([1.0], [1.0, -a], innov)
    return out


def generate_detailed(config: SynthConfig) -> SynthSeries:
    rng = make_rng(config.seed)
    starts, durations = place_events(config, rng)
    X = _ar1(config.ar_coefs, config.noise, config.length, rng)
    events = np.zeros(config.length, dtype=np.int8)
    drift = np.zeros(config.length)
    rho = config.precursor_window
    peak = config.precursor_strength * config.noise
    ramp = peak * np.arange(1, rho + 1) / rho
    for s, dur in zip(starts, durations):
        events[s:s + dur] = 1
        lo = max(s - rho, 0)
        drift[lo:s] = np.maximum(drift[lo:s], ramp[rho - (s - lo):])
        drift[s:s + dur] = peak
    X[:, list(config.feature_subset)] += drift[:, None]
    if config.missing_rate > 0:
        mask = rng.random(X.shape) < config.missing_rate
        mask[0] = False  # keep the first row complete so imputation can start
        X[mask] = np.nan
    series = TimeSeries(X, events, tick_minutes=config.tick_minutes)
    return SynthSeries(series, starts, durations, drift)


def generate(config: SynthConfig) -> TimeSeries:
    """Deterministic in ``config.seed``."""
    return generate_detailed(config).series


_PRESETS: dict[str, SynthConfig] = {
    "ad_like": SynthConfig(
        length=14_617, n_features=9, tick_minutes=60, n_events=5,
        event_duration=(6, 24), min_spacing=1000, precursor_window=48,
        precursor_strength=3.0, precursor_features=(0, 1, 2, 3),
    ),
    "ad_like_small": SynthConfig(
        length=1_462, n_features=9, tick_minutes=60, n_events=5,
        event_duration=(6, 24), min_spacing=150, precursor_window=48,
        precursor_strength=3.0, precursor_features=(0, 1, 2, 3),
    ),
    "npp_like": SynthConfig(
        length=30_664, n_features=14, tick_minutes=180, n_events=6,
        event_duration=(2, 8), min_spacing=1000, precursor_window=16,
        precursor_strength=3.0, precursor_features=(0, 1, 2, 3, 4),
    ),
    "npp_like_small": SynthConfig(
        length=10_224, n_features=14, tick_minutes=180, n_events=6,
        event_duration=(2, 8), min_spacing=250, precursor_window=16,
        precursor_strength=3.0, precursor_features=(0, 1, 2, 3, 4),
    ),
    # at least 20 unlabelled patterns per warning-labelled one for omega <= 16
    "imbalanced_small": SynthConfig(
        length=4_000, n_features=6, tick_minutes=60, n_events=5,
        event_duration=(2, 6), min_spacing=300, precursor_window=24,
        precursor_strength=2.0, precursor_features=(0, 1),
    ),
}


def presets() -> dict[str, SynthConfig]:
    """Named configurations. ``*_small`` variants keep the event counts."""
    return dict(_PRESETS)


def preset(name: str, **overrides) -> SynthConfig:
    try:
        base = _PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown synth preset {name!r}; choose from {sorted(_PRESETS)}") from None
    return base.with_(**overrides) if overrides else base


def precursor_mask(starts: Sequence[int], length: int, rho: int) -> np.ndarray:
    """Boolean mask of the ``rho`` ticks before each event start."""
    m = np.zeros(length, dtype=bool)
    for s in starts:
        m[max(s - rho, 0):s] = True
    return m
