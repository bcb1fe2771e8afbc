"""Transmitter chain: DFT precoding, bandwidth expansion, frequency-domain
spectrum shaping, subcarrier mapping, IFFT and CP addition.

Conventions used throughout the package:

* All DFT/IFFT pairs are unitary (norm="ortho"), so Parseval holds exactly
  and SNR bookkeeping is transform-independent.
* The occupied band is described on the fftshifted grid
  (lowest-frequency-first); ``subcarrier_offset`` is the index of the first
  occupied bin on that axis. The default centers the block around DC.
* The shaping filter's rising/falling edges are half-sine, which satisfies
  the folded-Nyquist constraint (per-bin alias sum of squared weights = 1)
  exactly in finite precision.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .symbol_builder import SymbolLayout


@dataclass(frozen=True)
class IqBuffer:
    """Complex baseband samples plus their sample rate.

    ``cp_samples`` marks how many leading samples are cyclic prefix;
    ``cp_exceeded`` is a diagnostic set by the channel when a tap delay
    falls outside the CP.
    """

    samples: np.ndarray
    sample_rate: float
    cp_samples: int = 0
    cp_exceeded: bool = False


@dataclass(frozen=True)
class ShapingFilter:
    """Real nonnegative weights over the m + 2v extended subcarriers."""

    m: int
    v: int
    weights: np.ndarray


def extension_subcarriers(extension_fraction: float, m: int) -> int:
    """One-sided extension v from the excess-bandwidth fraction.

    Rounds to the nearest subcarrier, ties up: 5% of 2400 gives exactly 60.
    """
    if not 0.0 <= extension_fraction <= 0.5:
        raise ValueError(f"extension fraction must be in [0, 0.5], got {extension_fraction}")
    return int(np.floor(extension_fraction * m / 2.0 + 0.5))


@dataclass(frozen=True)
class WaveformConfig:
    """Static waveform geometry; all lengths are validated on construction."""

    scs_hz: float
    n_fft: int
    n_prb: int
    extension_fraction: float
    cp_samples: int
    layout: SymbolLayout
    subcarrier_offset: int | None = None

    def __post_init__(self):
        if self.scs_hz <= 0:
            raise ValueError("scs_hz must be positive")
        if self.n_fft < 1 or (self.n_fft & (self.n_fft - 1)) != 0:
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 0 <= self.cp_samples < self.n_fft:
            raise ValueError("cp_samples must be in [0, n_fft)")
        if self.layout.m != self.m:
            raise ValueError(f"layout.m={self.layout.m} != 12*n_prb={self.m}")
        if self.v > self.m:
            raise ValueError("extension v may not exceed m")
        if self.occupied > self.n_fft:
            raise ValueError(
                f"occupied band m+2v={self.occupied} exceeds n_fft={self.n_fft}"
            )
        off = self.offset
        if off < 0 or off + self.occupied > self.n_fft:
            raise ValueError(f"mapped band [{off}, {off + self.occupied}) exceeds the FFT grid")

    @property
    def m(self) -> int:
        return 12 * self.n_prb

    @property
    def v(self) -> int:
        return extension_subcarriers(self.extension_fraction, self.m)

    @property
    def occupied(self) -> int:
        return self.m + 2 * self.v

    @property
    def offset(self) -> int:
        if self.subcarrier_offset is not None:
            return self.subcarrier_offset
        return (self.n_fft - self.occupied) // 2

    @property
    def sample_rate(self) -> float:
        return self.scs_hz * self.n_fft


def design_shaping_filter(m: int, v: int) -> ShapingFilter:
    """Square-root-Nyquist taper with half-sine edges over m + 2v bins.

    weights[j] = sin(pi*(j+0.5)/(4v)) on the rising edge j in [0, 2v),
    1 on the flat section, cos(pi*(j-m+0.5)/(4v)) on the falling edge.
    v = 0 degenerates to all-ones.
    """
    if v < 0 or 2 * v > m:
        raise ValueError(f"need 0 <= 2v <= m, got m={m}, v={v}")
    w = np.ones(m + 2 * v)
    if v > 0:
        j = np.arange(2 * v)
        w[:2 * v] = np.sin(np.pi * (j + 0.5) / (4 * v))
        w[m:] = np.cos(np.pi * (j + 0.5) / (4 * v))
    return ShapingFilter(m=m, v=v, weights=w)


def dft_precode_and_extend(s, v: int) -> np.ndarray:
    """Unitary M-point DFT followed by cyclic bandwidth expansion.

    Output e of length m + 2v: e = [S[m-v:], S, S[:v]] so the first and the
    last v bins alias the opposite band edge.
    """
    s = np.asarray(s)
    m = s.shape[-1]
    if v < 0 or v > m:
        raise ValueError(f"need 0 <= v <= m, got v={v}, m={m}")
    spec = sfft.fft(s, axis=-1, norm="ortho")
    if v == 0:
        return spec
    return np.concatenate([spec[..., m - v:], spec, spec[..., :v]], axis=-1)


def place_on_grid(bins, grid_len: int, offset: int) -> np.ndarray:
    """Embed occupied bins into an all-zero fftshifted grid at ``offset``."""
    bins = np.asarray(bins)
    width = bins.shape[-1]
    if offset < 0 or offset + width > grid_len:
        raise ValueError(f"band [{offset}, {offset + width}) exceeds grid of {grid_len}")
    grid = np.zeros(bins.shape[:-1] + (grid_len,), dtype=np.result_type(bins, np.complex64))
    grid[..., offset:offset + width] = bins
    return grid


def grid_to_time(grid_shifted) -> np.ndarray:
    """Unitary IFFT of an fftshifted spectrum (last axis)."""
    return sfft.ifft(np.fft.ifftshift(grid_shifted, axes=-1), axis=-1, norm="ortho")


def _add_cp(x, cp_samples: int) -> np.ndarray:
    if cp_samples == 0:
        return x
    return np.concatenate([x[..., -cp_samples:], x], axis=-1)


def modulate_rows(s, cfg: WaveformConfig, weights: np.ndarray) -> np.ndarray:
    """Vectorized transmitter core: pre-DFT rows -> time-domain rows with CP.

    ``weights`` must cover exactly the mapped band; its length fixes the
    extension (len(weights) - m) / 2 regardless of cfg.extension_fraction,
    which lets the same path serve the v = 0 baseline.
    """
    s = np.asarray(s, dtype=np.complex128)
    if s.shape[-1] != cfg.m:
        raise ValueError(f"pre-DFT length {s.shape[-1]} != m = {cfg.m}")
    width = len(weights)
    v = (width - cfg.m) // 2
    if width != cfg.m + 2 * v:
        raise ValueError("weights length must be m + 2v")
    e = dft_precode_and_extend(s, v)
    offset = (cfg.n_fft - width) // 2 if cfg.subcarrier_offset is None else cfg.subcarrier_offset
    grid = place_on_grid(weights * e, cfg.n_fft, offset)
    x = grid_to_time(grid)
    return _add_cp(x, cfg.cp_samples)


def otfdm_modulate(s, cfg: WaveformConfig, filt: ShapingFilter) -> IqBuffer:
    """Full transmitter for one pre-DFT sequence of length M.

    Output length is n_fft + cp_samples at sample rate scs * n_fft.
    """
    if filt.m != cfg.m or filt.v != cfg.v:
        raise ValueError(
            f"filter geometry (m={filt.m}, v={filt.v}) does not match config "
            f"(m={cfg.m}, v={cfg.v})"
        )
    x = modulate_rows(np.asarray(s, dtype=np.complex128), cfg, filt.weights)
    return IqBuffer(samples=x, sample_rate=cfg.sample_rate, cp_samples=cfg.cp_samples)


def two_tap_weights(m: int) -> np.ndarray:
    """Frequency response of the circular two-tap impulse [0.5, 0.5]:
    w[k] = cos(pi*k/m) * exp(-j*pi*k/m)."""
    k = np.arange(m)
    return np.cos(np.pi * k / m) * np.exp(-1j * np.pi * k / m)


def dfts_ofdm_modulate(s, cfg: WaveformConfig, two_tap_shaping: bool = False) -> IqBuffer:
    """Reference DFT-s-OFDM transmitter: the same chain with v = 0.

    With ``two_tap_shaping`` the M DFT bins are weighted by the circular
    two-tap response (the low-PAPR shaping used with pi/2-BPSK); no
    bandwidth expansion is applied in either case. The shaped spectrum is
    mapped with the filter zero at the allocation edges (the weighted bins
    are rotated by m/2 before placement); splitting the filter's passband
    humps across the allocation edges would forfeit the entire PAPR
    benefit of the shaping.
    """
    s = np.asarray(s, dtype=np.complex128)
    if s.shape[-1] != cfg.m:
        raise ValueError(f"pre-DFT length {s.shape[-1]} != m = {cfg.m}")
    spec = sfft.fft(s, axis=-1, norm="ortho")
    if two_tap_shaping:
        spec = np.fft.fftshift(spec * two_tap_weights(cfg.m), axes=-1)
    offset = (cfg.n_fft - cfg.m) // 2
    grid = place_on_grid(spec, cfg.n_fft, offset)
    x = _add_cp(grid_to_time(grid), cfg.cp_samples)
    return IqBuffer(samples=x, sample_rate=cfg.sample_rate, cp_samples=cfg.cp_samples)
