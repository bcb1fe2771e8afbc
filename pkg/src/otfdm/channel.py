"""Propagation models: tapped-delay-line fading realizations drawn from a
profile file, plus calibrated AWGN injection.

Tap delays are quantized to the sample grid (no fractional-delay
interpolation); at the ~0.5 GHz sample rates used here the grid error is
a small fraction of the delay spreads of interest. Channels are static
within a symbol (block fading), one realization per trial.
"""

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .kernels import tap_convolve_rows
from .waveform import IqBuffer, ShapingFilter, WaveformConfig

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class TdlProfile:
    """Normalized tap table: delays scale with the RMS delay spread."""

    name: str
    delays_norm: np.ndarray
    powers_db: np.ndarray
    rice_k_db: np.ndarray  # nan = Rayleigh tap


def load_tdl_profile(name: str = "tdl-d") -> TdlProfile:
    """Load a tap profile, either a bundled name ('tdl-d') or a CSV path."""
    key = name.strip().lower().replace("-", "_")
    if key == "tdl_d":
        path = resources.files("otfdm.data").joinpath("tdl_d.csv")
    elif Path(name).exists():
        path = Path(name)
    else:
        raise ValueError(f"unknown TDL profile {name!r}")
    delays, powers, ks = [], [], []
    with path.open() as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#") or row[0] == "delay_normalized":
                continue
            delays.append(float(row[0]))
            powers.append(float(row[1]))
            ks.append(float(row[2]) if len(row) > 2 and row[2].strip() else np.nan)
    if not delays:
        raise ValueError(f"profile file {path} contains no taps")
    return TdlProfile(
        name=name,
        delays_norm=np.asarray(delays),
        powers_db=np.asarray(powers),
        rice_k_db=np.asarray(ks),
    )


@dataclass(frozen=True)
class ChannelRealization:
    """Discrete tap line: strictly increasing integer delays, complex gains."""

    delays: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        if self.delays.size == 0:
            raise ValueError("realization needs at least one tap")
        if np.any(np.diff(self.delays) <= 0):
            raise ValueError("tap delays must be strictly increasing")

    @property
    def max_delay(self) -> int:
        return int(self.delays[-1])


def realize_tdl(profile: TdlProfile, ds_ns: float, fs: float, seed) -> ChannelRealization:
    """Draw one block-fading realization of the profile.

    Profile delays are scaled by ds_ns and rounded to samples at rate fs;
    taps landing on the same sample add. The first tap carries the
    profile's Ricean component (random specular phase), the rest are
    Rayleigh. Mean total power over realizations is 1.

    ``seed`` is anything numpy's default_rng accepts, including an
    existing Generator.
    """
    if ds_ns < 0:
        raise ValueError("delay spread must be nonnegative")
    if fs <= 0:
        raise ValueError("sample rate must be positive")
    rng = np.random.default_rng(seed)

    powers = 10.0 ** (profile.powers_db / 10.0)
    powers = powers / powers.sum()
    n_taps = powers.size

    # Fixed draw order: scattered normals for every tap, then specular
    # phases for the Ricean ones.
    normals = rng.standard_normal((n_taps, 2))
    scatter = (normals[:, 0] + 1j * normals[:, 1]) / _SQRT2
    gains = np.empty(n_taps, dtype=np.complex128)
    for i in range(n_taps):
        k_db = profile.rice_k_db[i]
        if np.isnan(k_db):
            gains[i] = np.sqrt(powers[i]) * scatter[i]
        else:
            k_lin = 10.0 ** (k_db / 10.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            specular = np.sqrt(powers[i] * k_lin / (k_lin + 1.0)) * np.exp(1j * phase)
            gains[i] = specular + np.sqrt(powers[i] / (k_lin + 1.0)) * scatter[i]

    delay_samples = np.rint(profile.delays_norm * ds_ns * 1e-9 * fs).astype(np.int64)
    order = np.argsort(delay_samples, kind="stable")
    delay_samples = delay_samples[order]
    gains = gains[order]
    uniq, inverse = np.unique(delay_samples, return_inverse=True)
    merged = np.zeros(uniq.size, dtype=np.complex128)
    np.add.at(merged, inverse, gains)
    return ChannelRealization(delays=uniq, gains=merged)


IDEAL_CHANNEL = ChannelRealization(delays=np.array([0]), gains=np.array([1.0 + 0.0j]))


@dataclass(frozen=True)
class NoiseSpec:
    """AWGN at a target Es/N0.

    snr_db is the ratio of the mean pre-DFT symbol energy (1 for this
    package's modulators) to the per-subcarrier noise variance; with the
    unitary transform chain that variance equals the per-time-sample
    variance, independent of the FFT size. ``seed``: int or Generator.
    """

    snr_db: float
    seed: object = 0


def noise_variance(snr_db: float) -> float:
    """Per-subcarrier (= per-sample) complex noise variance for unit Es."""
    return 10.0 ** (-snr_db / 10.0)


def apply_channel(x: IqBuffer, h: ChannelRealization, noise: NoiseSpec | None = None) -> IqBuffer:
    """Convolve with the tap line (truncated to the input length) and
    optionally add calibrated AWGN.

    Tap delays beyond the CP break the circular-convolution assumption;
    the returned buffer flags that condition rather than failing.
    """
    samples = np.ascontiguousarray(x.samples, dtype=np.complex128)[None, :]
    delays = np.ascontiguousarray(h.delays, dtype=np.int64)[None, :]
    gains = np.ascontiguousarray(h.gains, dtype=np.complex128)[None, :]
    n_taps = np.array([h.delays.size], dtype=np.int64)
    y = tap_convolve_rows(samples, delays, gains, n_taps)[0]
    if noise is not None and np.isfinite(noise.snr_db):
        rng = np.random.default_rng(noise.seed)
        sigma = np.sqrt(noise_variance(noise.snr_db) / 2.0)
        y = y + sigma * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    exceeded = x.cp_exceeded or h.max_delay > x.cp_samples
    return IqBuffer(samples=y, sample_rate=x.sample_rate,
                    cp_samples=x.cp_samples, cp_exceeded=exceeded)


def effective_bin_response(h: ChannelRealization, cfg: WaveformConfig,
                           filt: ShapingFilter) -> np.ndarray:
    """True folded per-bin response seen at the receiver slicer.

    Evaluates the tap line's frequency response on the occupied FFT bins
    and folds the band-edge aliases with the squared filter weights; this
    is the quantity the in-symbol RS estimator targets.
    """
    n, m, v = cfg.n_fft, cfg.m, cfg.v
    j = np.arange(m + 2 * v)
    k = cfg.offset + j - n // 2  # natural-order bin index (periodic in n)
    h_ext = np.zeros(m + 2 * v, dtype=np.complex128)
    for d, g in zip(h.delays, h.gains):
        h_ext += g * np.exp(-2j * np.pi * k * d / n)
    w2 = filt.weights**2
    folded = w2 * h_ext
    out = folded[v:v + m].copy()
    if v > 0:
        out[:v] += folded[m + v:]
        out[m - v:] += folded[:v]
    return out
