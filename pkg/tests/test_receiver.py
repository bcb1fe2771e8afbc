import numpy as np
import pytest
import scipy.fft as sfft

from otfdm.channel import (ChannelRealization, IDEAL_CHANNEL, NoiseSpec,
                           apply_channel, effective_bin_response)
from otfdm.receiver import (estimate_channel, fold_combine, otfdm_demodulate)
from otfdm.symbol_builder import (ModulationScheme, RsSequence, SymbolLayout,
                                  build_symbol_sequence, demap, generate_rs,
                                  modulate)
from otfdm.waveform import (WaveformConfig, design_shaping_filter,
                            dft_precode_and_extend, otfdm_modulate)


def _setup(ext=0.05):
    layout = SymbolLayout(m=2400, rs_len=139, guard=67)
    cfg = WaveformConfig(scs_hz=120e3, n_fft=4096, n_prb=200,
                         extension_fraction=ext, cp_samples=288, layout=layout)
    return cfg, design_shaping_filter(cfg.m, cfg.v), generate_rs(139, 1)


def _tx(cfg, filt, rs, scheme=ModulationScheme.QPSK, seed=0):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, cfg.layout.data_len * scheme.bits_per_symbol,
                        dtype=np.uint8)
    data = modulate(bits, scheme)
    x = otfdm_modulate(build_symbol_sequence(data, rs, cfg.layout), cfg, filt)
    return bits, data, x


def _brute_force_folded_response(h, cfg, filt):
    # independent oracle: evaluate each tap's phasor on every occupied FFT
    # bin, then fold the band edges with squared filter weights
    n, m, v = cfg.n_fft, cfg.m, cfg.v
    out = np.zeros(m, dtype=complex)
    for b in range(m):
        aliases = [b + v]
        if b < v:
            aliases.append(b + v + m)
        if b >= m - v:
            aliases.append(b + v - m)
        for j in aliases:
            k = cfg.offset + j - n // 2
            resp = sum(g * np.exp(-2j * np.pi * k * d / n)
                       for d, g in zip(h.delays, h.gains))
            out[b] += filt.weights[j] ** 2 * resp
    return out


class TestFoldCombine:
    def test_zero_extension_is_identity(self):
        filt = design_shaping_filter(64, 0)
        rng = np.random.default_rng(0)
        y = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        np.testing.assert_array_equal(fold_combine(y, filt), y)

    def test_ideal_loopback_recovers_spectrum(self):
        cfg, filt, _ = _setup()
        rng = np.random.default_rng(1)
        s = rng.standard_normal(cfg.m) + 1j * rng.standard_normal(cfg.m)
        spec = sfft.fft(s, norm="ortho")
        e = dft_precode_and_extend(s, cfg.v)
        recovered = fold_combine(filt.weights * e, filt)
        assert np.abs(recovered - spec).max() <= 1e-10

    def test_white_noise_variance_preserved(self):
        # alias weights have unit sum of squares, so folding keeps the
        # per-bin noise variance
        cfg, filt, _ = _setup()
        rng = np.random.default_rng(2)
        noise = (rng.standard_normal((200, cfg.occupied))
                 + 1j * rng.standard_normal((200, cfg.occupied))) / np.sqrt(2)
        folded = fold_combine(noise, filt)
        assert np.mean(np.abs(folded) ** 2) == pytest.approx(1.0, abs=0.02)

    def test_length_mismatch(self):
        cfg, filt, _ = _setup()
        with pytest.raises(ValueError):
            fold_combine(np.zeros(cfg.m), filt)


class TestEstimateChannel:
    def test_single_tap_exact(self):
        cfg, filt, rs = _setup()
        _, _, x = _tx(cfg, filt, rs)
        g = np.exp(1j * 1.234) * 0.7
        y = apply_channel(x, ChannelRealization(delays=np.array([0]),
                                                gains=np.array([g])), None)
        _, est = otfdm_demodulate(y, cfg, filt, rs)
        assert np.abs(est.h_eff_bins - g).max() <= 1e-10

    def test_two_tap_against_brute_force(self):
        # taps at 0 and ~20 pre-DFT samples (34 at the FFT rate)
        cfg, filt, rs = _setup()
        _, _, x = _tx(cfg, filt, rs)
        h = ChannelRealization(delays=np.array([0, 34]),
                               gains=np.array([1.0, 0.4 - 0.3j]))
        y = apply_channel(x, h, None)
        _, est = otfdm_demodulate(y, cfg, filt, rs)
        truth = _brute_force_folded_response(h, cfg, filt)
        nmse = (np.sum(np.abs(est.h_eff_bins - truth) ** 2)
                / np.sum(np.abs(truth) ** 2))
        assert 10 * np.log10(nmse) <= -40.0

    def test_brute_force_matches_production_truth(self):
        cfg, filt, _ = _setup()
        h = ChannelRealization(delays=np.array([0, 17, 34]),
                               gains=np.array([1.0, 0.2j, 0.1 - 0.1j]))
        np.testing.assert_allclose(effective_bin_response(h, cfg, filt),
                                   _brute_force_folded_response(h, cfg, filt),
                                   atol=1e-10)

    def test_delay_beyond_guard_degrades_but_returns(self):
        cfg, filt, rs = _setup()
        _, _, x = _tx(cfg, filt, rs)
        # 200 FFT-rate samples = ~117 pre-DFT samples, far past the 67 guard
        h = ChannelRealization(delays=np.array([0, 200]),
                               gains=np.array([1.0, 0.8]))
        y = apply_channel(x, h, None)
        _, est = otfdm_demodulate(y, cfg, filt, rs)
        truth = effective_bin_response(h, cfg, filt)
        nmse = (np.sum(np.abs(est.h_eff_bins - truth) ** 2)
                / np.sum(np.abs(truth) ** 2))
        assert 10 * np.log10(nmse) > -20.0  # visibly degraded
        assert not est.guard_exceeded  # within CP, so no channel flag

    def test_impulse_consistency_invariant(self):
        cfg, filt, rs = _setup()
        _, _, x = _tx(cfg, filt, rs)
        h = ChannelRealization(delays=np.array([0, 34]),
                               gains=np.array([1.0, 0.3]))
        y = apply_channel(x, h, None)
        _, est = otfdm_demodulate(y, cfg, filt, rs)
        rebuilt = np.fft.fft(est.impulse_on_grid(cfg.m))
        assert np.abs(rebuilt - est.h_eff_bins).max() <= 1e-12

    def test_window_validation(self):
        cfg, _, rs = _setup()
        z = np.zeros(cfg.m, dtype=complex)
        with pytest.raises(ValueError):
            estimate_channel(z, rs, cfg.layout, window_taps=0)
        with pytest.raises(ValueError):
            estimate_channel(z, rs, cfg.layout, window_taps=140)

    def test_malformed_rs_rejected(self):
        cfg, _, _ = _setup()
        # an all-ones sequence has a pure-delta spectrum (null bins), which
        # would blow up the division
        bad = RsSequence(length=139, root=1, samples=np.ones(139, dtype=complex))
        with pytest.raises(ValueError):
            estimate_channel(np.zeros(cfg.m, dtype=complex), bad, cfg.layout)


class TestDemodulate:
    @pytest.mark.parametrize("scheme", list(ModulationScheme))
    @pytest.mark.parametrize("ext", [0.0, 0.05, 0.10])
    def test_noiseless_loopback_all_schemes(self, scheme, ext):
        cfg, filt, rs = _setup(ext)
        bits, data, x = _tx(cfg, filt, rs, scheme)
        out, est = otfdm_demodulate(x, cfg, filt, rs)
        assert np.array_equal(demap(out, scheme), bits)
        evm = 10 * np.log10(np.sum(np.abs(out - data) ** 2)
                            / np.sum(np.abs(data) ** 2))
        assert evm <= -100.0

    def test_single_tap_phase_channel_recovered(self):
        cfg, filt, rs = _setup()
        _, data, x = _tx(cfg, filt, rs)
        h = ChannelRealization(delays=np.array([0]),
                               gains=np.array([np.exp(1j * 0.9)]))
        y = apply_channel(x, h, None)
        out, _ = otfdm_demodulate(y, cfg, filt, rs)
        assert np.abs(out - data).max() <= 1e-9

    def test_oracle_equalizer_beats_self_estimation(self):
        cfg, filt, rs = _setup()
        _, data, x = _tx(cfg, filt, rs, ModulationScheme.QAM64)
        h = ChannelRealization(delays=np.array([0, 20, 41]),
                               gains=np.array([0.9, 0.3 - 0.2j, 0.1j]))
        y = apply_channel(x, h, None)
        truth = effective_bin_response(h, cfg, filt)
        out_oracle, _ = otfdm_demodulate(y, cfg, filt, rs, channel_override=truth)
        out_self, _ = otfdm_demodulate(y, cfg, filt, rs)

        def evm(rx):
            return 10 * np.log10(np.sum(np.abs(rx - data) ** 2)
                                 / np.sum(np.abs(data) ** 2))

        assert evm(out_oracle) <= -60.0
        assert evm(out_self) >= evm(out_oracle) - 1e-6

    def test_channel_flag_propagates(self):
        cfg, filt, rs = _setup()
        _, _, x = _tx(cfg, filt, rs)
        h = ChannelRealization(delays=np.array([0, 400]),
                               gains=np.array([1.0, 0.05]))
        y = apply_channel(x, h, None)
        _, est = otfdm_demodulate(y, cfg, filt, rs)
        assert est.guard_exceeded

    def test_mmse_reduces_to_zf_without_noise_var(self):
        cfg, filt, rs = _setup()
        _, data, x = _tx(cfg, filt, rs)
        y = apply_channel(x, IDEAL_CHANNEL, None)
        out_zf, _ = otfdm_demodulate(y, cfg, filt, rs, noise_var=None)
        out_zero, _ = otfdm_demodulate(y, cfg, filt, rs, noise_var=0.0)
        np.testing.assert_array_equal(out_zf, out_zero)

    def test_length_mismatch_rejected(self):
        cfg, filt, rs = _setup()
        from otfdm.waveform import IqBuffer
        bad = IqBuffer(samples=np.zeros(100, dtype=complex),
                       sample_rate=cfg.sample_rate, cp_samples=0)
        with pytest.raises(ValueError):
            otfdm_demodulate(bad, cfg, filt, rs)

    def test_median_evm_monotone_in_snr(self):
        cfg, filt, rs = _setup()
        rng_master = 77
        medians = []
        for snr in (0.0, 10.0, 20.0, 30.0, 40.0):
            evms = []
            for trial in range(12):
                bits, data, x = _tx(cfg, filt, rs, seed=1000 + trial)
                y = apply_channel(x, IDEAL_CHANNEL,
                                  NoiseSpec(snr_db=snr, seed=(rng_master, trial)))
                out, _ = otfdm_demodulate(y, cfg, filt, rs,
                                          noise_var=10 ** (-snr / 10))
                evms.append(10 * np.log10(np.sum(np.abs(out - data) ** 2)
                                          / np.sum(np.abs(data) ** 2)))
            medians.append(np.median(evms))
        diffs = np.diff(medians)
        assert np.all(diffs < 0.5)  # non-increasing within sampling slack
