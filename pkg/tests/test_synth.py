import numpy as np
import pytest
from scipy.stats import ttest_1samp

from rare_event.errors import ConfigError, InfeasiblePlacement
from rare_event.folds import find_event_episodes
from rare_event.synth import SynthConfig, generate, generate_detailed, precursor_mask, preset, presets


def cfg(**kw):
    base = dict(length=800, n_features=3, n_events=4, event_duration=(3, 8), min_spacing=60,
                precursor_window=20, precursor_strength=3.0, precursor_features=(0,), seed=1)
    base.update(kw)
    return SynthConfig(**base)


def test_same_seed_bit_identical():
    a, b = generate(cfg(seed=5)), generate(cfg(seed=5))
    assert np.array_equal(a.features, b.features) and np.array_equal(a.events, b.events)
    assert not np.array_equal(a.features, generate(cfg(seed=6)).features)


def test_no_events():
    s = generate(cfg(n_events=0))
    assert s.events.sum() == 0


def test_events_match_placement():
    d = generate_detailed(cfg(seed=3))
    eps = find_event_episodes(d.series.events)
    assert [(s + 1, s + n) for s, n in zip(d.event_starts, d.event_lengths)] == eps
    assert all(3 <= n <= 8 for n in d.event_lengths)


@pytest.mark.parametrize("seed", range(20))
def test_spacing_respected(seed):
    d = generate_detailed(cfg(seed=seed, n_events=6, min_spacing=90))
    ends = np.concatenate([[0], d.event_starts + d.event_lengths])
    gaps = d.event_starts - ends[:-1]
    assert np.all(gaps >= 90)
    assert len(find_event_episodes(d.series.events)) == 6


def test_ramp_shape():
    d = generate_detailed(cfg(seed=2, precursor_strength=2.0, noise=0.5))
    s = int(d.event_starts[0])
    ramp = d.drift[s - 20:s]
    assert ramp[-1] == pytest.approx(2.0 * 0.5)
    assert np.allclose(np.diff(ramp), 1.0 / 20)
    assert d.drift[s - 21] == 0.0
    assert np.all(d.drift[s:s + d.event_lengths[0]] == pytest.approx(1.0))


def test_only_precursor_features_drift():
    a = generate(cfg(seed=4, precursor_strength=0.0))
    b = generate(cfg(seed=4, precursor_strength=3.0))
    diff = b.features - a.features
    assert np.any(diff[:, 0] != 0)
    assert np.all(diff[:, 1:] == 0)


def test_marginal_std_matches_noise():
    s = generate(SynthConfig(length=200_000, n_features=1, n_events=0, noise=2.0, ar_coef=0.9))
    assert s.features[:, 0].std() == pytest.approx(2.0, rel=0.05)


def test_null_precursor_statistically_identical():
    """With zero strength the precursor windows look like everything else."""
    diffs = []
    for seed in range(100):
        d = generate_detailed(cfg(seed=seed, precursor_strength=0.0))
        mask = precursor_mask(d.event_starts, 800, 20)
        x = d.series.features[:, 0]
        diffs.append(x[mask].mean() - x[~mask].mean())
    assert ttest_1samp(diffs, 0.0).pvalue > 0.01


def test_missing_mask():
    s = generate(cfg(missing_rate=0.1))
    miss = np.isnan(s.features)
    assert 0.05 < miss.mean() < 0.15
    assert not miss[0].any()


def test_infeasible_placement():
    with pytest.raises(InfeasiblePlacement):
        generate(cfg(length=100, n_events=5, min_spacing=30))


@pytest.mark.parametrize(
    "bad",
    [dict(precursor_window=0), dict(event_duration=(5, 2)), dict(precursor_features=(7,)),
     dict(ar_coef=1.0), dict(noise=0.0), dict(missing_rate=1.0), dict(precursor_strength=-1.0)],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


def test_presets():
    p = presets()
    assert p["ad_like"].n_features == 9 and p["ad_like"].length == 14_617
    assert p["ad_like"].n_events == 5 and p["ad_like"].tick_minutes == 60
    assert p["npp_like"].n_features == 14 and p["npp_like"].length == 30_664
    assert p["npp_like"].n_events == 6 and p["npp_like"].tick_minutes == 180
    for name in ("ad_like", "npp_like"):
        assert p[f"{name}_small"].n_events == p[name].n_events
        assert p[f"{name}_small"].n_features == p[name].n_features
    assert p["ad_like_small"].length == 1_462
    assert p["npp_like_small"].length == 10_224


@pytest.mark.parametrize("name", sorted(presets()))
def test_presets_generate(name):
    s = generate(preset(name, seed=0))
    assert len(find_event_episodes(s.events)) == presets()[name].n_events


def test_preset_overrides_and_unknown():
    assert preset("ad_like_small", seed=4).seed == 4
    with pytest.raises(ConfigError):
        preset("nope")


def test_dict_round_trip():
    c = cfg(ar_coef=(0.1, 0.2, 0.3))
    assert SynthConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ConfigError):
        SynthConfig.from_dict({**c.to_dict(), "extra": 1})
