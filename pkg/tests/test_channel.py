import numpy as np
import pytest

from otfdm.channel import (ChannelRealization, IDEAL_CHANNEL, NoiseSpec,
                           apply_channel, effective_bin_response,
                           load_tdl_profile, noise_variance, realize_tdl)
from otfdm.symbol_builder import SymbolLayout
from otfdm.waveform import IqBuffer, WaveformConfig, design_shaping_filter

FS = 120e3 * 4096  # 491.52 MHz


@pytest.fixture(scope="module")
def profile():
    return load_tdl_profile("tdl-d")


class TestProfile:
    def test_shape_and_ricean_tap(self, profile):
        assert profile.delays_norm.size == 13
        assert profile.powers_db.size == 13
        assert profile.rice_k_db[0] == pytest.approx(13.3)
        assert np.all(np.isnan(profile.rice_k_db[1:]))
        assert profile.delays_norm[0] == 0.0
        assert profile.delays_norm.max() == pytest.approx(12.525)

    def test_unknown_profile_rejected(self):
        with pytest.raises(ValueError):
            load_tdl_profile("tdl-x")


class TestRealizeTdl:
    def test_zero_spread_collapses_to_single_tap(self, profile):
        h = realize_tdl(profile, 0.0, FS, seed=0)
        assert h.delays.tolist() == [0]
        assert h.gains.shape == (1,)

    def test_zero_spread_unit_mean_power(self, profile):
        total = 0.0
        for seed in range(2000):
            h = realize_tdl(profile, 0.0, FS, seed=seed)
            total += np.abs(h.gains[0]) ** 2
        assert total / 2000 == pytest.approx(1.0, abs=0.05)

    def test_mean_power_over_draws(self, profile):
        # 1e4 draws, total tap power averages to 1 within 2%
        acc = 0.0
        n = 10_000
        rng = np.random.default_rng(99)
        for _ in range(n):
            h = realize_tdl(profile, 10.0, FS, seed=rng)
            acc += np.sum(np.abs(h.gains) ** 2)
        assert acc / n == pytest.approx(1.0, abs=0.02)

    def test_max_delay_at_reference_rate(self, profile):
        # round(12.525 * 10 ns * 491.52 MHz) = 62 samples
        h = realize_tdl(profile, 10.0, FS, seed=1)
        assert h.max_delay == 62

    def test_delays_strictly_increasing_and_merged(self, profile):
        h = realize_tdl(profile, 10.0, FS, seed=2)
        assert np.all(np.diff(h.delays) > 0)
        # 13 taps quantize onto fewer than 13 distinct samples at 10 ns
        assert h.delays.size < 13

    def test_same_seed_same_realization_any_order(self, profile):
        a1 = realize_tdl(profile, 10.0, FS, seed=11)
        b1 = realize_tdl(profile, 10.0, FS, seed=22)
        b2 = realize_tdl(profile, 10.0, FS, seed=22)
        a2 = realize_tdl(profile, 10.0, FS, seed=11)
        np.testing.assert_array_equal(a1.gains, a2.gains)
        np.testing.assert_array_equal(b1.gains, b2.gains)

    def test_rejects_bad_args(self, profile):
        with pytest.raises(ValueError):
            realize_tdl(profile, -1.0, FS, seed=0)
        with pytest.raises(ValueError):
            realize_tdl(profile, 10.0, 0.0, seed=0)


class TestApplyChannel:
    def _buffer(self, n=4384, cp=288, seed=0):
        rng = np.random.default_rng(seed)
        x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        return IqBuffer(samples=x, sample_rate=FS, cp_samples=cp)

    def test_unit_tap_is_identity(self):
        x = self._buffer()
        y = apply_channel(x, IDEAL_CHANNEL, None)
        np.testing.assert_array_equal(y.samples, x.samples)
        assert not y.cp_exceeded

    def test_matches_reference_convolution(self):
        x = self._buffer()
        h = ChannelRealization(delays=np.array([0, 3, 10]),
                               gains=np.array([1.0, 0.4 - 0.2j, -0.1j]))
        y = apply_channel(x, h, None)
        full = np.zeros(x.samples.size, dtype=complex)
        for d, g in zip(h.delays, h.gains):
            full[d:] += g * x.samples[:x.samples.size - d]
        np.testing.assert_allclose(y.samples, full, atol=1e-12)

    def test_noiseless_path_is_deterministic(self):
        x = self._buffer()
        h = ChannelRealization(delays=np.array([0, 5]),
                               gains=np.array([0.9, 0.3j]))
        a = apply_channel(x, h, None)
        b = apply_channel(x, h, None)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_noise_seed_reproducible(self):
        x = self._buffer()
        a = apply_channel(x, IDEAL_CHANNEL, NoiseSpec(snr_db=20.0, seed=5))
        b = apply_channel(x, IDEAL_CHANNEL, NoiseSpec(snr_db=20.0, seed=5))
        c = apply_channel(x, IDEAL_CHANNEL, NoiseSpec(snr_db=20.0, seed=6))
        np.testing.assert_array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_noise_calibration(self):
        # known-signal method over 1e6 samples: variance within +-0.1 dB
        x = IqBuffer(samples=np.zeros(1_000_000, dtype=complex) + 1.0,
                     sample_rate=FS, cp_samples=0)
        snr_db = 17.0
        y = apply_channel(x, IDEAL_CHANNEL, NoiseSpec(snr_db=snr_db, seed=3))
        measured = np.mean(np.abs(y.samples - x.samples) ** 2)
        err_db = abs(10 * np.log10(measured / noise_variance(snr_db)))
        assert err_db < 0.1

    def test_infinite_snr_adds_nothing(self):
        x = self._buffer()
        y = apply_channel(x, IDEAL_CHANNEL, NoiseSpec(snr_db=np.inf, seed=1))
        np.testing.assert_array_equal(y.samples, x.samples)

    def test_out_of_cp_delay_sets_flag(self):
        x = self._buffer(cp=288)
        h = ChannelRealization(delays=np.array([0, 300]),
                               gains=np.array([1.0, 0.1]))
        assert apply_channel(x, h, None).cp_exceeded
        h2 = ChannelRealization(delays=np.array([0, 288]),
                                gains=np.array([1.0, 0.1]))
        assert not apply_channel(x, h2, None).cp_exceeded


class TestEffectiveResponse:
    def test_single_tap_is_flat(self):
        layout = SymbolLayout(m=2400, rs_len=139, guard=67)
        cfg = WaveformConfig(scs_hz=120e3, n_fft=4096, n_prb=200,
                             extension_fraction=0.05, cp_samples=288, layout=layout)
        filt = design_shaping_filter(cfg.m, cfg.v)
        g = 0.8 - 0.6j
        h = ChannelRealization(delays=np.array([0]), gains=np.array([g]))
        resp = effective_bin_response(h, cfg, filt)
        np.testing.assert_allclose(resp, g, atol=1e-12)
