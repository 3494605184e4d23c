import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rare_event.errors import (
    AllMissingFeature,
    DataError,
    EmptyTrainingSet,
    LeadingGap,
    ShapeMismatch,
    TauTooLarge,
)
from rare_event.timeseries import (
    MinMaxScaler,
    TimeSeries,
    apply_scaler,
    build_patterns,
    build_warning_labels,
    fit_scaler,
    impute_missing,
    make_patterns,
)


def brute_warning_labels(y, omega):
    n = len(y)
    return np.array([int(any(y[s] for s in range(t, min(t + omega, n)))) for t in range(n)])


def series(x, y=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return TimeSeries(x, np.zeros(len(x), dtype=int) if y is None else y)


class TestTimeSeries:
    def test_ticks_start_at_one(self):
        s = series([1.0, 2.0, 3.0])
        assert s.ticks.tolist() == [1, 2, 3]
        assert s.n_ticks == 3 and s.n_features == 1

    def test_rejects_infinite_readings(self):
        with pytest.raises(DataError):
            series([1.0, np.inf])

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            TimeSeries(np.zeros((3, 2)), [0, 1])

    def test_rejects_non_binary_labels(self):
        with pytest.raises(DataError):
            TimeSeries(np.zeros((2, 1)), [0, 2])

    def test_arrays_are_read_only(self):
        s = series([1.0, 2.0])
        with pytest.raises(ValueError):
            s.features[0, 0] = 5.0


class TestImpute:
    def test_mean_fills_gap(self):
        out = impute_missing(series([1.0, np.nan, 3.0]), "mean")
        assert out.features[:, 0].tolist() == [1.0, 2.0, 3.0]

    @pytest.mark.parametrize("strategy", ["mean", "forward_fill"])
    def test_complete_column_unchanged(self, strategy):
        s = series([5.0, 5.0])
        assert impute_missing(s, strategy).features[:, 0].tolist() == [5.0, 5.0]

    def test_all_missing_column(self):
        with pytest.raises(AllMissingFeature):
            impute_missing(series([np.nan, np.nan]), "mean")

    def test_forward_fill(self):
        out = impute_missing(series([1.0, np.nan, np.nan, 4.0, np.nan]), "forward_fill")
        assert out.features[:, 0].tolist() == [1.0, 1.0, 1.0, 4.0, 4.0]

    def test_forward_fill_leading_gap(self):
        with pytest.raises(LeadingGap):
            impute_missing(series([np.nan, 1.0]), "forward_fill")

    def test_observed_values_kept(self, rng):
        x = rng.standard_normal((50, 3))
        x[rng.random(x.shape) < 0.2] = np.nan
        x[0] = 0.0
        s = series(x)
        for strategy in ("mean", "forward_fill"):
            out = impute_missing(s, strategy).features
            obs = ~np.isnan(x)
            assert not np.isnan(out).any()
            assert np.array_equal(out[obs], x[obs])


class TestPatterns:
    def test_tau_zero_is_identity(self):
        x = np.arange(10.0).reshape(5, 2)
        p = build_patterns(series(x), 0)
        assert len(p) == 5
        assert np.array_equal(p.patterns[:, :, 0], x)

    def test_tau_two(self):
        x = np.arange(5.0)
        p = build_patterns(series(x), 2)
        assert p.ticks.tolist() == [3, 4, 5]
        assert p.patterns[0, 0].tolist() == [0.0, 1.0, 2.0]

    def test_tau_too_large(self):
        with pytest.raises(TauTooLarge):
            build_patterns(series([1.0, 2.0, 3.0]), 4)

    @given(
        n=st.integers(1, 40),
        d=st.integers(1, 4),
        tau=st.integers(0, 10),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_columns_are_source_slices(self, n, d, tau, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, d))
        y = (rng.random(n) < 0.3).astype(int)
        if tau >= n:
            with pytest.raises(TauTooLarge):
                build_patterns(TimeSeries(x, y), tau)
            return
        p = build_patterns(TimeSeries(x, y), tau)
        assert len(p) == n - tau
        for row, t in enumerate(p.ticks):
            # column j (1-based) holds reading t - tau + j - 1 (1-based ticks)
            for j in range(1, tau + 2):
                assert np.array_equal(p.patterns[row, :, j - 1], x[t - tau + j - 2])
        assert np.array_equal(p.original_labels, y[tau:])
        # flattened layout is feature-major
        assert np.array_equal(p.matrix[0], p.patterns[0].reshape(-1))

    def test_rows_maps_ticks(self):
        p = build_patterns(series(np.arange(6.0)), 2)
        assert p.rows([3, 6]).tolist() == [0, 3]
        with pytest.raises(IndexError):
            p.rows([2])


class TestWarningLabels:
    def test_single_event(self):
        assert build_warning_labels([0, 0, 0, 1, 0], 2).tolist() == [0, 0, 1, 1, 0]

    def test_no_events(self):
        assert build_warning_labels([0] * 6, 4).tolist() == [0] * 6

    def test_event_at_start(self):
        assert build_warning_labels([1, 0, 0], 3).tolist() == [1, 0, 0]

    def test_accepts_series(self):
        s = TimeSeries(np.zeros((4, 1)), [0, 0, 1, 0])
        assert build_warning_labels(s, 2).tolist() == [0, 1, 1, 0]

    @pytest.mark.parametrize("omega", [0, -1, 1.5])
    def test_bad_omega(self, omega):
        with pytest.raises(ValueError):
            build_warning_labels([0, 1], omega)

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=80), st.integers(1, 30))
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, y, omega):
        assert build_warning_labels(y, omega).tolist() == brute_warning_labels(y, omega).tolist()

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=60), st.integers(1, 20), st.integers(1, 20))
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_omega(self, y, a, b):
        lo, hi = min(a, b), max(a, b)
        assert np.all(build_warning_labels(y, lo) <= build_warning_labels(y, hi))

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=60))
    def test_omega_one_is_identity(self, y):
        assert build_warning_labels(y, 1).tolist() == y

    def test_make_patterns_aligns_labels(self):
        y = [0, 0, 0, 0, 1, 0]
        p = make_patterns(TimeSeries(np.zeros((6, 1)), y), 2, 2)
        assert p.warning_labels.tolist() == [0, 1, 1, 0]
        assert p.omega == 2


class TestScaler:
    def test_single_pattern_maps_to_zero(self):
        X = np.array([[3.0, -1.0, 7.0]])
        assert np.array_equal(fit_scaler(X).transform(X), np.zeros_like(X))

    def test_affine_formula(self):
        sc = fit_scaler(np.array([[2.0], [4.0], [6.0]]))
        assert sc.mins.tolist() == [2.0] and sc.maxs.tolist() == [6.0]
        assert sc.transform(np.array([[4.0]]))[0, 0] == 0.5

    def test_no_clipping(self):
        sc = fit_scaler(np.array([[2.0], [6.0]]))
        assert sc.transform(np.array([[8.0]]))[0, 0] == 1.5

    def test_identity(self):
        sc = MinMaxScaler(np.zeros(2), np.ones(2))
        X = np.array([[0.3, -2.0], [5.0, 0.25]])
        assert np.array_equal(sc.transform(X), X)

    def test_constant_column_always_zero(self):
        sc = fit_scaler(np.array([[1.0, 3.0], [2.0, 3.0]]))
        assert sc.transform(np.array([[1.5, 4.0]]))[0, 1] == 0.0

    def test_empty_training_set(self):
        with pytest.raises(EmptyTrainingSet):
            fit_scaler(np.empty((0, 3)))

    def test_shape_mismatch(self):
        sc = fit_scaler(np.zeros((2, 3)))
        with pytest.raises(ShapeMismatch):
            sc.transform(np.zeros((1, 4)))

    def test_apply_to_pattern_set(self, rng):
        p = build_patterns(series(rng.standard_normal((30, 2))), 3)
        sc = fit_scaler(p)
        out = apply_scaler(sc, p)
        assert out.patterns.shape == p.patterns.shape
        assert out.matrix.min() >= 0.0 and out.matrix.max() <= 1.0
        assert np.array_equal(out.original_labels, p.original_labels)

    def test_joint_lag_scaling_shares_extrema(self, rng):
        p = build_patterns(series(rng.standard_normal((30, 2))), 2)
        sc = fit_scaler(p, joint_lags=True)
        # the three lag columns of each feature share one min/max
        assert np.all(sc.mins.reshape(2, 3) == sc.mins.reshape(2, 3)[:, :1])
        assert sc.mins[0] == p.patterns[:, 0, :].min()

    @given(st.integers(2, 40), st.integers(1, 5), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_training_values_in_unit_interval(self, n, p, seed):
        X = np.random.default_rng(seed).standard_normal((n, p)) * 100
        Z = fit_scaler(X).transform(X)
        assert Z.min() >= 0.0 and Z.max() <= 1.0
