import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_series
from rare_event.errors import (
    BadFoldIndex,
    BetaNonPositive,
    KTooLarge,
    NoEvents,
    SingleClassTraining,
)
from rare_event.folds import (
    ResampleSpec,
    find_event_episodes,
    partition_folds,
    resample_indices,
    resample_training,
    sample_blocks,
    training_view,
)
from rare_event.timeseries import TimeSeries, make_patterns


def patterns_from_labels(y, tau=0, omega=1):
    y = np.asarray(y, dtype=int)
    return make_patterns(TimeSeries(np.zeros((y.size, 1)), y), tau, omega)


def labels_with_events(n, ends, length=1):
    y = np.zeros(n, dtype=int)
    for e in ends:
        y[e - length:e] = 1  # 1-based end tick e
    return y


class TestEpisodes:
    def test_runs(self):
        assert find_event_episodes([0, 1, 1, 0, 1]) == [(2, 3), (5, 5)]

    def test_none(self):
        assert find_event_episodes([0, 0, 0]) == []

    def test_full(self):
        assert find_event_episodes([1, 1, 1]) == [(1, 3)]

    @given(st.lists(st.integers(0, 1), max_size=60))
    def test_reconstructs_labels(self, y):
        rebuilt = np.zeros(len(y), dtype=int)
        eps = find_event_episodes(y)
        for s, e in eps:
            rebuilt[s - 1:e] = 1
        assert rebuilt.tolist() == list(y)
        # maximal: runs are separated by at least one zero
        assert all(b[0] > a[1] + 1 for a, b in zip(eps, eps[1:]))


class TestSampleBlocks:
    def test_single_event(self):
        p = patterns_from_labels(labels_with_events(120, [100]))
        fs = sample_blocks(p, 30)
        assert fs.k == 1
        assert fs.folds[0].ticks.tolist() == list(range(70, 101))
        assert not fs.folds[0].block.truncated

    def test_close_events_discard_later(self, caplog):
        p = patterns_from_labels(labels_with_events(100, [50, 60]))
        fs = sample_blocks(p, 30)
        assert fs.k == 1
        assert fs.folds[0].ticks[-1] == 50
        assert any("discarded" in n for n in fs.notes)

    def test_truncation_at_series_start(self):
        p = patterns_from_labels(labels_with_events(40, [10]))
        fs = sample_blocks(p, 30)
        assert fs.folds[0].ticks.tolist() == list(range(1, 11))
        assert fs.folds[0].block.truncated
        assert any("truncated" in n for n in fs.notes)

    def test_beta_counts_ticks_with_lags(self):
        # tau=3 drops ticks 1..3, so the block is cut at the first pattern tick
        p = patterns_from_labels(labels_with_events(40, [10]), tau=3)
        fs = sample_blocks(p, 30)
        assert fs.folds[0].ticks.tolist() == list(range(4, 11))

    def test_event_at_series_end_is_anchored(self):
        p = patterns_from_labels(labels_with_events(50, [50], length=3))
        fs = sample_blocks(p, 10)
        assert fs.folds[0].ticks.tolist() == list(range(40, 51))

    def test_errors(self):
        with pytest.raises(NoEvents):
            sample_blocks(patterns_from_labels([0] * 10), 3)
        with pytest.raises(BetaNonPositive):
            sample_blocks(patterns_from_labels([0, 1, 0]), 0)

    def test_allowed_mask_restricts_blocks(self):
        p = patterns_from_labels(labels_with_events(100, [40, 90]))
        allowed = np.ones(100, dtype=bool)
        allowed[:30] = False
        allowed[85:] = False
        fs = sample_blocks(p, 20, allowed=allowed)
        assert fs.k == 1
        assert fs.folds[0].ticks.tolist() == list(range(31, 41))

    def test_clean_ticks_drop_events(self):
        p = patterns_from_labels(labels_with_events(60, [50], length=4))
        fold = sample_blocks(p, 20).folds[0]
        assert fold.clean_ticks.tolist() == list(range(30, 47))
        assert fold.view(True) is fold.ticks
        assert fold.view(False) is fold.clean_ticks

    @given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(0, 4))
    @settings(max_examples=80, deadline=None)
    def test_invariants(self, seed, beta, tau):
        rng = np.random.default_rng(seed)
        s = random_series(rng, int(rng.integers(tau + 5, 300)), p_event=0.03)
        p = make_patterns(s, tau, int(rng.integers(1, 20)))
        if not find_event_episodes(p.original_labels):
            return
        fs = sample_blocks(p, beta)
        seen = np.zeros(len(p), dtype=int)
        for f in fs.folds:
            rows = p.rows(f.ticks)
            seen[rows] += 1
            y = p.original_labels[rows]
            assert np.all(np.diff(f.ticks) == 1)
            assert len(find_event_episodes(y)) == 1
            assert y[-1] == 1  # block ends at its episode's last tick
            assert f.ticks.size <= beta + 1
            assert p.original_labels[p.rows(f.clean_ticks)].sum() == 0
        assert seen.max() <= 1


class TestPartition:
    def test_even(self):
        fs = partition_folds(patterns_from_labels([0] * 10), 5)
        assert [f.ticks.tolist() for f in fs.folds] == [[1, 2], [3, 4], [5, 6], [7, 8], [9, 10]]

    def test_remainder_to_earliest(self):
        fs = partition_folds(patterns_from_labels([0] * 11), 5)
        assert [f.ticks.size for f in fs.folds] == [3, 2, 2, 2, 2]

    @pytest.mark.parametrize("k", [1, 12])
    def test_bad_k(self, k):
        with pytest.raises(KTooLarge):
            partition_folds(patterns_from_labels([0] * 11), k)


class TestTrainingView:
    def setup_method(self):
        y = np.zeros(60, dtype=int)
        y[[9, 38, 39]] = 1  # ticks 10, 39, 40
        self.p = patterns_from_labels(y)

    def test_include_event_false(self):
        fs = partition_folds(self.p, 3, include_event=False)
        train, test = training_view(fs, 0)
        assert self.p.original_labels[self.p.rows(train)].sum() == 0

    def test_include_event_true_keeps_other_fold_events(self):
        fs = partition_folds(self.p, 3, include_event=True)
        train, _ = training_view(fs, 0)
        assert {39, 40} <= set(train.tolist())

    def test_held_out_events_absent(self):
        fs = partition_folds(self.p, 3, include_event=True)
        train, test = training_view(fs, 1)
        assert not {39, 40} & set(train.tolist())
        assert not {39, 40} & set(test.tolist())
        assert set(test.tolist()) == set(range(21, 41)) - {39, 40}

    def test_override_flag(self):
        fs = partition_folds(self.p, 3, include_event=True)
        train, _ = training_view(fs, 0, include_event=False)
        assert 39 not in train and 10 not in train

    def test_bad_index(self):
        fs = partition_folds(self.p, 3)
        with pytest.raises(BadFoldIndex):
            training_view(fs, 3)


class TestResample:
    y = np.array([0] * 90 + [1] * 10)

    def test_undersample(self):
        idx = resample_indices(self.y, ResampleSpec("undersample", seed=1))
        yy = self.y[idx]
        assert (yy == 0).sum() == 10 and (yy == 1).sum() == 10
        assert sorted(idx[yy == 1].tolist()) == list(range(90, 100))

    def test_oversample(self):
        idx = resample_indices(self.y, ResampleSpec("oversample", seed=1))
        yy = self.y[idx]
        assert (yy == 0).sum() == 90 and (yy == 1).sum() == 90
        assert sorted(idx[yy == 0].tolist()) == list(range(90))

    def test_none_is_identity(self):
        X = np.arange(100.0)[:, None]
        Xr, yr = resample_training(X, self.y, ResampleSpec("none"))
        assert np.array_equal(Xr, X) and np.array_equal(yr, self.y)

    def test_seed_determines_sample(self):
        a = resample_indices(self.y, ResampleSpec("oversample", seed=7))
        b = resample_indices(self.y, ResampleSpec("oversample", seed=7))
        c = resample_indices(self.y, ResampleSpec("oversample", seed=8))
        assert np.array_equal(a, b) and not np.array_equal(a, c)

    def test_without_replacement_variant(self):
        idx = resample_indices(self.y, ResampleSpec("undersample", seed=3, replace=False))
        neg = idx[self.y[idx] == 0]
        assert np.unique(neg).size == neg.size == 10

    def test_single_class(self):
        with pytest.raises(SingleClassTraining):
            resample_indices(np.zeros(5, dtype=int), ResampleSpec("oversample"))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            ResampleSpec("smote")

    @given(st.integers(1, 50), st.integers(1, 50), st.sampled_from(["undersample", "oversample"]),
           st.integers(0, 1000))
    @settings(max_examples=60, deadline=None)
    def test_balanced(self, n0, n1, mode, seed):
        y = np.array([0] * n0 + [1] * n1)
        yy = y[resample_indices(y, ResampleSpec(mode, seed))]
        assert (yy == 0).sum() == (yy == 1).sum()
        assert (yy == 0).sum() == (min(n0, n1) if mode == "undersample" else max(n0, n1))
