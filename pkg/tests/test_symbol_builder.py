import numpy as np
import pytest

from otfdm.symbol_builder import (ModulationScheme, SymbolLayout,
                                  build_symbol_sequence, decide_symbols, demap,
                                  generate_rs, modulate)

ALL_SCHEMES = list(ModulationScheme)
SQRT2 = np.sqrt(2.0)


class TestModulation:
    def test_qpsk_00_maps_to_first_quadrant(self):
        out = modulate(np.array([0, 0], dtype=np.uint8), ModulationScheme.QPSK)
        assert out[0] == pytest.approx((1 + 1j) / SQRT2)

    def test_qam256_outer_corner(self):
        # per-axis bits (0,1,1,1) reach amplitude +15; interleaved I/Q
        bits = np.array([0, 0, 1, 1, 1, 1, 1, 1], dtype=np.uint8)
        out = modulate(bits, ModulationScheme.QAM256)
        assert out[0] == pytest.approx((15 + 15j) / np.sqrt(170.0))

    def test_pi2_bpsk_rotation(self):
        out = modulate(np.array([0, 0, 1, 1], dtype=np.uint8),
                       ModulationScheme.PI2_BPSK)
        expected = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / SQRT2
        np.testing.assert_allclose(out, expected, atol=1e-15)

    def test_rotation_restarts_per_row(self):
        bits = np.zeros((2, 3), dtype=np.uint8)
        out = modulate(bits, ModulationScheme.PI2_BPSK)
        np.testing.assert_allclose(out[0], out[1])

    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_unit_average_power(self, scheme):
        # Monte-Carlo oracle: empirical mean power over 1e6 symbols
        rng = np.random.default_rng(1234)
        bits = rng.integers(0, 2, 1_000_000 * scheme.bits_per_symbol,
                            dtype=np.uint8)
        power = np.mean(np.abs(modulate(bits, scheme)) ** 2)
        assert abs(power - 1.0) < 0.01

    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_exact_constellation_power(self, scheme):
        # all points enumerated (one symbol per row): average power exactly 1
        bps = scheme.bits_per_symbol
        idx_bits = ((np.arange(2 ** bps)[:, None] >> np.arange(bps - 1, -1, -1)) & 1)
        pts = modulate(idx_bits.astype(np.uint8), scheme)
        assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_ragged_bit_count(self):
        with pytest.raises(ValueError):
            modulate(np.array([0, 1, 0], dtype=np.uint8), ModulationScheme.QPSK)

    def test_parse_aliases(self):
        assert ModulationScheme.parse("256QAM") is ModulationScheme.QAM256
        assert ModulationScheme.parse("pi/2-bpsk") is ModulationScheme.PI2_BPSK
        with pytest.raises(ValueError):
            ModulationScheme.parse("qam12")


class TestDemap:
    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_noiseless_round_trip(self, scheme):
        rng = np.random.default_rng(7)
        n_bits = (100_000 // scheme.bits_per_symbol) * scheme.bits_per_symbol
        bits = rng.integers(0, 2, n_bits, dtype=np.uint8)
        assert np.array_equal(demap(modulate(bits, scheme), scheme), bits)

    def test_qpsk_nearest_point(self):
        noisy = np.array([(0.9 + 1.1j) / SQRT2])
        assert demap(noisy, ModulationScheme.QPSK).tolist() == [0, 0]

    def test_pi2_derotation_before_slicing(self):
        tx = modulate(np.array([1, 0, 1], dtype=np.uint8), ModulationScheme.PI2_BPSK)
        noisy = tx * np.exp(1j * 0.2) * 0.9
        assert demap(noisy, ModulationScheme.PI2_BPSK).tolist() == [1, 0, 1]

    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_decide_matches_demap(self, scheme):
        rng = np.random.default_rng(3)
        bits = rng.integers(0, 2, 6000 * scheme.bits_per_symbol, dtype=np.uint8)
        tx = modulate(bits, scheme)
        noisy = tx + 0.05 * (rng.standard_normal(tx.size)
                             + 1j * rng.standard_normal(tx.size))
        ids_equal = decide_symbols(noisy, scheme) == decide_symbols(tx, scheme)
        bit_rows = (demap(noisy, scheme) == bits).reshape(-1, scheme.bits_per_symbol)
        assert np.array_equal(ids_equal, bit_rows.all(axis=1))


class TestReferenceSignal:
    def test_constant_amplitude(self):
        rs = generate_rs(139, 1)
        np.testing.assert_allclose(np.abs(rs.samples), 1.0, atol=1e-12)

    def test_flat_spectrum(self):
        rs = generate_rs(139, 1)
        mags = np.abs(np.fft.fft(rs.samples))
        assert (mags.max() - mags.min()) / mags.max() < 1e-9

    def test_longer_prime_length_accepted(self):
        rs = generate_rs(197, 1)
        assert rs.length == 197
        np.testing.assert_allclose(np.abs(rs.samples), 1.0, atol=1e-12)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            generate_rs(21, 7)  # shared factor
        with pytest.raises(ValueError):
            generate_rs(138, 1)  # even length
        with pytest.raises(ValueError):
            generate_rs(139, 0)


class TestLayout:
    def test_main_geometry(self):
        layout = SymbolLayout(m=2400, rs_len=139, guard=67)
        assert layout.data_len == 2400 - 139 - 134 == 2127
        assert layout.rs_slice == slice(67, 67 + 139)
        assert layout.data_slice == slice(273, 2400)

    def test_overhead_rows(self):
        # four (rs_len, guard) pairs on a 198-PRB block: overhead samples
        # and percentages as printed (12, 12, 16.5, 16.5)
        rows = [(197, 47, 291, 12.0, 0), (197, 47, 291, 12.0, 0),
                (197, 97, 391, 16.5, 1), (197, 97, 391, 16.5, 1)]
        for rs_len, guard, samples, printed_pct, nd in rows:
            layout = SymbolLayout(m=2376, rs_len=rs_len, guard=guard)
            assert rs_len + 2 * guard == samples
            assert round(100 * layout.overhead_fraction, nd) == printed_pct
        assert SymbolLayout(m=2376, rs_len=197, guard=47).overhead_fraction \
            == pytest.approx(0.1225, abs=5e-5)

    def test_rejects_overflowing_layout(self):
        with pytest.raises(ValueError):
            SymbolLayout(m=100, rs_len=90, guard=10)


class TestBuildSymbolSequence:
    def _parts(self):
        rng = np.random.default_rng(0)
        layout = SymbolLayout(m=480, rs_len=139, guard=67)
        rs = generate_rs(139, 1)
        data = (rng.standard_normal(layout.data_len)
                + 1j * rng.standard_normal(layout.data_len)) / SQRT2
        return layout, rs, data

    def test_regions_are_circular(self):
        layout, rs, data = self._parts()
        s = build_symbol_sequence(data, rs, layout)
        w, l = layout.guard, layout.rs_len
        assert s.shape == (layout.m,)
        np.testing.assert_array_equal(s[layout.rs_slice], rs.samples)
        np.testing.assert_array_equal(s[:w], rs.samples[l - w:])
        np.testing.assert_array_equal(s[w + l:2 * w + l], rs.samples[:w])
        np.testing.assert_array_equal(s[layout.data_slice], data)

    def test_zero_guard_degenerates(self):
        rng = np.random.default_rng(1)
        layout = SymbolLayout(m=200, rs_len=13, guard=0)
        rs = generate_rs(13, 1)
        data = rng.standard_normal(layout.data_len) + 0j
        s = build_symbol_sequence(data, rs, layout)
        np.testing.assert_array_equal(s[:13], rs.samples)
        np.testing.assert_array_equal(s[13:], data)

    def test_batched_rows(self):
        layout, rs, _ = self._parts()
        rng = np.random.default_rng(2)
        data = rng.standard_normal((5, layout.data_len)) + 0j
        s = build_symbol_sequence(data, rs, layout)
        assert s.shape == (5, layout.m)
        for i in range(5):
            np.testing.assert_array_equal(
                s[i], build_symbol_sequence(data[i], rs, layout))

    def test_dimension_errors(self):
        layout, rs, data = self._parts()
        with pytest.raises(ValueError):
            build_symbol_sequence(data[:-1], rs, layout)
        with pytest.raises(ValueError):
            build_symbol_sequence(data, generate_rs(137, 1), layout)
        big_guard = SymbolLayout(m=480, rs_len=19, guard=31)
        with pytest.raises(ValueError):
            build_symbol_sequence(np.zeros(big_guard.data_len), generate_rs(19, 1),
                                  big_guard)
