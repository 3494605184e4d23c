"""Cross-validation folds built from event blocks or chronological partitions.

A block is the ``beta + 1`` ticks ending at the last tick of an event
episode. Blocks never reach back into an earlier episode: a later event whose
block would do so is dropped, which keeps exactly one episode per block and
keeps the unstable period after an event out of every block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import (
    BadFoldIndex,
    BetaNonPositive,
    KTooLarge,
    NoEvents,
    SingleClassTraining,
)
from .rng import make_rng
from .timeseries import PatternSet

log = logging.getLogger(__name__)


def find_event_episodes(y) -> list[tuple[int, int]]:
    """Maximal runs of ones as 1-based inclusive ``(start, end)`` pairs.

    >>> find_event_episodes([0, 1, 1, 0, 1])
    [(2, 3), (5, 5)]
    """
    y = np.asarray(y, dtype=np.int8)
    if y.size == 0:
        return []
    padded = np.concatenate([[0], y, [0]])
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1)
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


@dataclass(frozen=True)
class Block:
    start: int
    end: int
    beta: int

    @property
    def ticks(self) -> np.ndarray:
        return np.arange(self.start, self.end + 1)

    @property
    def truncated(self) -> bool:
        return self.end - self.start < self.beta


@dataclass(frozen=True, eq=False)
class Fold:
    """One fold: its raw ticks and the same ticks without event patterns."""

    index: int
    ticks: np.ndarray
    clean_ticks: np.ndarray
    block: Block | None = None

    def view(self, include_event: bool) -> np.ndarray:
        return self.ticks if include_event else self.clean_ticks


@dataclass(frozen=True, eq=False)
class FoldSet:
    patterns: PatternSet
    folds: tuple[Fold, ...]
    strategy: Literal["blocks", "partition"]
    include_event: bool = True
    notes: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.folds)

    @property
    def k(self) -> int:
        return len(self.folds)

    def describe(self) -> list[dict]:
        out = []
        for f in self.folds:
            rows = self.patterns.rows(f.ticks)
            out.append(
                {
                    "fold": f.index,
                    "first_tick": int(f.ticks[0]),
                    "last_tick": int(f.ticks[-1]),
                    "n_ticks": int(f.ticks.size),
                    "n_event_ticks": int(self.patterns.original_labels[rows].sum()),
                    "n_warning_ticks": (
                        None
                        if self.patterns.warning_labels is None
                        else int(self.patterns.warning_labels[rows].sum())
                    ),
                    "truncated": bool(f.block.truncated) if f.block else False,
                }
            )
        return out


def _make_fold(patterns: PatternSet, index: int, ticks: np.ndarray, block=None) -> Fold:
    y = patterns.original_labels[patterns.rows(ticks)]
    return Fold(index=index, ticks=ticks, clean_ticks=ticks[y == 0], block=block)


def sample_blocks(
    patterns: PatternSet,
    beta: int,
    allowed: np.ndarray | None = None,
    include_event: bool = True,
) -> FoldSet:
    """One block per usable event episode.

    ``beta`` counts ticks of the original series; a block is intersected with
    the ticks that have patterns. ``allowed`` optionally restricts blocks to a
    boolean mask over the pattern set (used to sample inside training folds):
    episodes ending outside it are ignored and blocks stop at its edge.
    """
    if beta < 1:
        raise BetaNonPositive(f"beta must be >= 1, got {beta}")
    n = len(patterns)
    first = patterns.first_tick
    if allowed is None:
        allowed = np.ones(n, dtype=bool)
    else:
        allowed = np.asarray(allowed, dtype=bool)

    folds: list[Fold] = []
    notes: list[str] = []
    prev_end = None
    for _, e in find_event_episodes(patterns.original_labels):
        end_tick = e + first - 1
        earlier_end = prev_end
        prev_end = end_tick
        if not allowed[e - 1]:
            continue
        lo = end_tick - beta
        if earlier_end is not None and lo <= earlier_end:
            msg = (
                f"event ending at tick {end_tick} discarded: its block would overlap "
                f"the episode ending at tick {earlier_end}"
            )
            log.info(msg)
            notes.append(msg)
            continue
        # walk back over allowed ticks only
        pos = e - 1
        stop = max(lo - first, 0)
        blocked = np.flatnonzero(~allowed[stop:pos + 1])
        lo_pos = stop if blocked.size == 0 else stop + int(blocked[-1]) + 1
        block = Block(start=lo_pos + first, end=end_tick, beta=beta)
        if block.truncated:
            msg = (
                f"block for event ending at tick {end_tick} truncated to "
                f"{block.start}..{block.end} ({block.end - block.start + 1} ticks)"
            )
            log.info(msg)
            notes.append(msg)
        folds.append(_make_fold(patterns, len(folds), block.ticks, block))

    if not folds:
        raise NoEvents("no usable event episode to anchor a block")
    return FoldSet(patterns, tuple(folds), "blocks", include_event, tuple(notes))


def partition_folds(patterns: PatternSet, k: int, include_event: bool = True) -> FoldSet:
    """``k`` contiguous chronological folds; the remainder goes to the earliest."""
    n = len(patterns)
    if k < 2 or k > n:
        raise KTooLarge(f"need 2 <= k <= {n}, got k={k}")
    base, extra = divmod(n, k)
    sizes = [base + (1 if i < extra else 0) for i in range(k)]
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    folds = tuple(
        _make_fold(patterns, i, patterns.ticks[bounds[i]:bounds[i + 1]]) for i in range(k)
    )
    return FoldSet(patterns, folds, "partition", include_event)


def training_view(
    foldset: FoldSet, held_out: int, include_event: bool | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Training ticks from every other fold and the event-free test ticks."""
    if not 0 <= held_out < foldset.k:
        raise BadFoldIndex(f"fold {held_out} out of range for k={foldset.k}")
    if include_event is None:
        include_event = foldset.include_event
    train = [f.view(include_event) for f in foldset.folds if f.index != held_out]
    train_ticks = np.concatenate(train) if train else np.empty(0, dtype=np.int64)
    return train_ticks, foldset.folds[held_out].clean_ticks


@dataclass(frozen=True)
class ResampleSpec:
    """How to rebalance a training set.

    Both modes draw with replacement by default. ``replace=False`` turns
    undersampling into a draw without replacement; oversampling always needs
    replacement.
    """

    mode: Literal["none", "undersample", "oversample"] = "none"
    seed: int = 0
    replace: bool = True

    def __post_init__(self):
        if self.mode not in ("none", "undersample", "oversample"):
            raise ValueError(f"unknown resample mode {self.mode!r}")


def resample_indices(y, spec: ResampleSpec) -> np.ndarray:
    """Positions into ``y`` forming the rebalanced training multiset, sorted.

    Ties in class size treat the event-free class (0) as the majority.
    """
    y = np.asarray(y)
    idx = np.arange(y.shape[0])
    if spec.mode == "none":
        return idx
    pos, neg = idx[y == 1], idx[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise SingleClassTraining("resampling needs both classes in the training set")
    major, minor = (pos, neg) if pos.size > neg.size else (neg, pos)
    rng = make_rng(spec.seed)
    if spec.mode == "undersample":
        drawn = rng.choice(major, size=minor.size, replace=spec.replace)
        out = np.concatenate([drawn, minor])
    else:
        drawn = rng.choice(minor, size=major.size, replace=True)
        out = np.concatenate([major, drawn])
    return np.sort(out, kind="stable")


def resample_training(X, y, spec: ResampleSpec):
    """Rebalanced ``(X, y)``; the input is returned unchanged for mode ``none``."""
    if spec.mode == "none":
        return X, y
    idx = resample_indices(y, spec)
    return np.asarray(X)[idx], np.asarray(y)[idx]
