import math

import numpy as np
import pytest

from timebinrng import (
    DomainError,
    ModulationProfile,
    SourceModel,
    click_probability,
    iter_simulate,
    preset,
    simulate,
)
from timebinrng.source_sim import LIT_MODULATION


class TestClickProbability:
    def test_no_source_no_dark(self):
        assert click_probability(SourceModel(mean_photons=0.0, dark_rate=0.0)) == 0.0

    def test_ln2_gives_half(self):
        model = SourceModel(mean_photons=math.log(2.0), efficiency=1.0)
        assert click_probability(model) == pytest.approx(0.5, abs=1e-15)

    def test_efficiency_scales_exponent(self):
        model = SourceModel(mean_photons=2.0 * math.log(2.0), efficiency=0.5)
        assert click_probability(model) == pytest.approx(0.5, abs=1e-15)

    def test_lit_preset_swing(self):
        (model,) = preset("a")
        period = 2 * math.pi / model.modulation.angular_frequency
        peak = click_probability(model, period / 4)
        trough = click_probability(model, 3 * period / 4)
        assert peak == pytest.approx(model.modulation.base + model.modulation.amplitude)
        assert trough == pytest.approx(model.modulation.base - model.modulation.amplitude)


class TestSimulate:
    def test_zero_probability_stream_is_silent(self):
        stream = simulate(SourceModel(), 10_000, seed=1)
        assert stream.windows.sum() == 0

    def test_deterministic_given_seed(self):
        model = SourceModel(mean_photons=math.log(2.0))
        a = simulate(model, 50_000, seed=9)
        b = simulate(model, 50_000, seed=9)
        assert np.array_equal(a.windows, b.windows)
        c = simulate(model, 50_000, seed=10)
        assert not np.array_equal(a.windows, c.windows)

    def test_channels_are_independent_streams(self):
        model = SourceModel(mean_photons=math.log(2.0))
        a = simulate(model, 50_000, seed=9, channel_id=0)
        b = simulate(model, 50_000, seed=9, channel_id=1)
        assert not np.array_equal(a.windows, b.windows)

    def test_chunking_does_not_change_the_stream(self):
        model = SourceModel(
            mean_photons=math.log(2.0), afterpulse_taps=(0.05, 0.02, 0.01)
        )
        one = np.concatenate(list(iter_simulate(model, 30_000, seed=3, chunk_windows=30_000)))
        many = np.concatenate(list(iter_simulate(model, 30_000, seed=3, chunk_windows=997)))
        assert np.array_equal(one, many)

    def test_empirical_rate_at_half(self):
        n = 1_000_000
        model = SourceModel(mean_photons=math.log(2.0))
        stream = simulate(model, n, seed=123)
        sigma = 0.5 / math.sqrt(n)
        assert abs(stream.windows.mean() - 0.5) < 3 * sigma

    def test_iid_stream_has_no_lag_correlation(self):
        n = 10_000_000
        model = SourceModel(mean_photons=math.log(2.0))
        x = simulate(model, n, seed=77).windows.astype(np.float64)
        mean = x.mean()
        var = mean * (1 - mean)
        for lag in range(1, 9):
            corr = (np.mean(x[:-lag] * x[lag:]) - mean * mean) / var
            assert abs(corr) < 4 / math.sqrt(n - lag), lag

    def test_modulated_stream_tracks_p_of_t(self):
        (model,) = preset("a")
        n = 2_000_000  # 2 s at 1 MHz: first tenth of the modulation period
        stream = simulate(model, n, seed=5)
        t = np.arange(n) * model.window_period
        expected = model.modulation.p_at(t).mean()
        assert abs(stream.windows.mean() - expected) < 4 * 0.5 / math.sqrt(n)

    def test_negative_window_count_rejected(self):
        with pytest.raises(DomainError):
            simulate(SourceModel(), -1, seed=0)


class TestAfterpulsing:
    def test_distance_one_tap_raises_conditional_rate(self):
        p, tap = 0.3, 0.08
        model = SourceModel(mean_photons=-math.log(1 - p), afterpulse_taps=(tap,))
        clicks = simulate(model, 2_000_000, seed=21).windows
        after = clicks[1:][clicks[:-1] == 1]
        target = p + tap
        sigma = math.sqrt(target * (1 - target) / after.size)
        assert abs(after.mean() - target) < 3 * sigma

    def test_memory_is_most_recent_avalanche_only(self):
        # distance counts from the latest avalanche: right after a click
        # the first tap (zero here) applies, not the large second tap
        p, taps = 0.2, (0.0, 0.6)
        model = SourceModel(mean_photons=-math.log(1 - p), afterpulse_taps=taps)
        clicks = simulate(model, 2_000_000, seed=22).windows
        d1 = clicks[1:][clicks[:-1] == 1]
        sigma1 = math.sqrt(p * (1 - p) / d1.size)
        assert abs(d1.mean() - p) < 4 * sigma1
        at_d2 = (clicks[1:-1] == 0) & (clicks[:-2] == 1)
        d2 = clicks[2:][at_d2]
        target = p + taps[1]
        sigma2 = math.sqrt(target * (1 - target) / d2.size)
        assert abs(d2.mean() - target) < 4 * sigma2

    def test_zero_taps_equal_no_taps(self):
        base = SourceModel(mean_photons=math.log(2.0))
        tapped = SourceModel(mean_photons=math.log(2.0), afterpulse_taps=(0.0, 0.0))
        a = simulate(base, 100_000, seed=8)
        b = simulate(tapped, 100_000, seed=8)
        assert np.array_equal(a.windows, b.windows)

    def test_tap_overflow_rejected_at_construction(self):
        with pytest.raises(DomainError):
            SourceModel(mean_photons=10.0, afterpulse_taps=(0.5,))
        with pytest.raises(DomainError):
            SourceModel(
                modulation=ModulationProfile(0.5, 0.4, 1.0, 1.0),
                afterpulse_taps=(0.2,),
            )

    def test_negative_tap_rejected(self):
        with pytest.raises(DomainError):
            SourceModel(afterpulse_taps=(-0.1,))


class TestPresets:
    def test_scenario_a(self):
        models = preset("a")
        assert len(models) == 1
        mod = models[0].modulation
        assert mod.base == 0.5
        assert mod.angular_frequency == pytest.approx(0.1 * math.pi)
        assert mod is LIT_MODULATION

    def test_scenario_b_is_two_lit_channels(self):
        models = preset("b")
        assert len(models) == 2
        assert all(m.modulation is LIT_MODULATION for m in models)

    def test_scenario_c_is_dark_only(self):
        models = preset("c")
        assert len(models) == 2
        for m in models:
            assert m.modulation is None
            assert m.mean_photons == 0.0
            assert click_probability(m) == pytest.approx(0.01, abs=1e-15)

    def test_unknown_scenario(self):
        with pytest.raises(DomainError):
            preset("d")
