"""Seed-reproducible experiment engine: PAPR CCDF measurement and
link-level SER/EVM/NMSE sweeps.

Reproducibility contract: every result is a pure function of (config,
seed). Randomness is derived counter-style from the master seed and the
trial (or fixed-size chunk) index via numpy SeedSequence spawn keys, and
per-unit outputs are assembled by index before any reduction, so outputs
are byte-identical for any worker count and for repeated runs.
"""

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .channel import (ChannelRealization, IDEAL_CHANNEL, effective_bin_response,
                      load_tdl_profile, noise_variance, realize_tdl)
from .kernels import papr_row_stats, tap_convolve_rows
from .receiver import demodulate_rows
from .symbol_builder import (ModulationScheme, RsSequence, SymbolLayout,
                             build_symbol_sequence, decide_symbols, generate_rs,
                             modulate)
from .waveform import (IqBuffer, ShapingFilter, WaveformConfig,
                       design_shaping_filter, modulate_rows, two_tap_weights)

# Stream ids keep the PAPR and link-level seed spaces disjoint.
_STREAM_PAPR = 1
_STREAM_LINK = 2

# Fixed work-unit sizes; results must never depend on worker count, so
# chunk boundaries are constants rather than knobs. 128 PAPR symbols keep
# the batched polyphase grids inside the last-level cache.
_PAPR_CHUNK = 128
_LINK_CHUNK = 64


def _spawned_rng(seed, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _config_payload(cfg: WaveformConfig) -> dict:
    return {
        "scs_hz": cfg.scs_hz, "n_fft": cfg.n_fft, "n_prb": cfg.n_prb,
        "extension_fraction": cfg.extension_fraction, "cp_samples": cfg.cp_samples,
        "rs_len": cfg.layout.rs_len, "guard": cfg.layout.guard,
        "subcarrier_offset": cfg.subcarrier_offset,
    }


@dataclass(frozen=True)
class SimulationSetup:
    """Config plus the matched filter and RS it implies."""

    cfg: WaveformConfig
    filt: ShapingFilter
    rs: RsSequence


def make_setup(n_prb: int, extension_fraction: float, rs_len: int, rs_guard: int,
               scs_hz: float = 120e3, n_fft: int = 4096,
               cp_samples: int | None = None, rs_root: int = 1) -> SimulationSetup:
    """Assemble a consistent (config, shaping filter, RS) triple."""
    from .numerology import default_cp_samples

    if cp_samples is None:
        cp_samples = default_cp_samples(n_fft)
    layout = SymbolLayout(m=12 * n_prb, rs_len=rs_len, guard=rs_guard)
    cfg = WaveformConfig(scs_hz=scs_hz, n_fft=n_fft, n_prb=n_prb,
                         extension_fraction=extension_fraction,
                         cp_samples=cp_samples, layout=layout)
    return SimulationSetup(cfg=cfg, filt=design_shaping_filter(cfg.m, cfg.v),
                           rs=generate_rs(rs_len, rs_root))


# ---------------------------------------------------------------------------
# PAPR
# ---------------------------------------------------------------------------

@dataclass
class CcdfCurve:
    thresholds_db: np.ndarray
    prob: np.ndarray
    n_symbols: int
    seed: int
    config_digest: str
    papr_samples_db: np.ndarray = field(repr=False, default=None)

    def level_db(self, p: float) -> float:
        """PAPR threshold where the CCDF crosses probability p."""
        return float(np.quantile(self.papr_samples_db, 1.0 - p, method="higher"))


def default_papr_thresholds() -> np.ndarray:
    return np.round(np.arange(0.0, 13.0 + 1e-9, 0.01), 2)


def compute_papr_db(x: IqBuffer, oversample: int = 4) -> float:
    """PAPR of one symbol, measured on an oversampled time grid.

    The CP is excluded; the spectrum of the remaining symbol is zero-padded
    by the oversampling factor (>= 4) and transformed back before taking
    10*log10(peak/mean instantaneous power).
    """
    if oversample < 4:
        raise ValueError(f"oversample must be >= 4, got {oversample}")
    samples = np.asarray(x.samples, dtype=np.complex128)[x.cp_samples:]
    if samples.size == 0 or not np.any(samples):
        raise ValueError("cannot measure PAPR of an empty or all-zero symbol")
    spectrum = np.fft.fftshift(sfft.fft(samples, norm="ortho"))
    return float(_papr_rows(spectrum[None, :],
                            (oversample - 1) * (samples.size // 2),
                            samples.size, oversample)[0])


def _papr_rows(bins, offset_os: int, n_fft: int, oversample: int,
               twiddles=None) -> np.ndarray:
    """Per-row PAPR (dB) of fftshifted-axis spectra embedded at offset_os
    into an oversample*n_fft grid.

    The oversampled time signal is computed polyphase-wise: sample stream
    x[oversample*q + r] is the n_fft-point IFFT of the band folded mod
    n_fft and twiddled by r. That is exactly the zero-padded-spectrum
    signal, at a fraction of the cost of one huge transform (the small
    IFFTs stay cache-resident). Runs in the input dtype; the Monte-Carlo
    path feeds complex64, whose ~1e-5 dB quantization is far below
    measurement resolution.
    """
    n_rows, width = bins.shape
    grid_len = oversample * n_fft
    if width > n_fft:
        raise ValueError("band wider than the base grid")
    if twiddles is None:
        twiddles = _papr_twiddles(width, n_fft, oversample, bins.dtype)
    start = (offset_os - grid_len // 2) % n_fft  # natural-order mod n_fft
    head = min(width, n_fft - start)
    # All polyphase grids go through one batched transform; small separate
    # batches pay disproportionate per-call cost.
    grid = np.zeros((oversample * n_rows, n_fft), dtype=bins.dtype)
    twiddled = np.empty_like(bins)
    for r in range(oversample):
        rows = slice(r * n_rows, (r + 1) * n_rows)
        np.multiply(bins, twiddles[r], out=twiddled)
        grid[rows, start:start + head] = twiddled[:, :head]
        if head < width:
            grid[rows, :width - head] = twiddled[:, head:]
    x = sfft.ifft(grid, axis=1, overwrite_x=True)
    p, s = papr_row_stats(x)
    peak = p.reshape(oversample, n_rows).max(axis=0)
    sumsq = s.reshape(oversample, n_rows).sum(axis=0)
    return 10.0 * np.log10(peak * grid_len / sumsq)


def _papr_twiddles(width: int, n_fft: int, oversample: int, dtype):
    t = np.arange(width)
    return [np.exp(2j * np.pi * r / (oversample * n_fft) * t).astype(dtype)
            for r in range(oversample)]


def _papr_payload_tables(scheme: ModulationScheme):
    """Constellation lookup used by the PAPR chunks.

    Payload symbols are drawn as uniform constellation indices rather than
    as packed bits; the resulting symbol distribution is identical and the
    per-chunk cost is far lower. The pi/2-BPSK table holds the unrotated
    points; the chunk applies the per-index rotation.
    """
    if scheme is ModulationScheme.PI2_BPSK:
        return (np.array([1 + 1j, -1 - 1j]) / np.sqrt(2.0)).astype(np.complex64)
    bps = scheme.bits_per_symbol
    idx_bits = ((np.arange(2 ** bps)[:, None] >> np.arange(bps - 1, -1, -1)) & 1)
    return modulate(idx_bits.astype(np.uint8).ravel(), scheme).astype(np.complex64)


def _papr_chunk(cfg: WaveformConfig, scheme: ModulationScheme, baseline: bool,
                weights: np.ndarray, rs_c64, points, twiddles, count: int,
                seed: int, chunk_index: int, oversample: int) -> np.ndarray:
    rng = _spawned_rng(seed, _STREAM_PAPR, chunk_index)
    layout = cfg.layout
    n_data = cfg.m if baseline else layout.data_len
    idx = rng.integers(0, len(points), size=(count, n_data))
    payload = points[idx]
    if scheme is ModulationScheme.PI2_BPSK:
        rot = np.ones(n_data, dtype=np.complex64)
        rot[1::2] = 1j
        payload *= rot
    if baseline:
        rows = payload
    else:
        w, l = layout.guard, layout.rs_len
        rows = np.empty((count, cfg.m), dtype=np.complex64)
        rows[:, :w] = rs_c64[l - w:]
        rows[:, w:w + l] = rs_c64
        rows[:, w + l:2 * w + l] = rs_c64[:w]
        rows[:, 2 * w + l:] = payload
    # Single-precision throughout; the unitary 1/sqrt(m) scaling is
    # dropped, PAPR is scale-invariant.
    spec = sfft.fft(rows, axis=1)
    v = (len(weights) - cfg.m) // 2
    if v > 0:
        spec = np.concatenate([spec[:, cfg.m - v:], spec, spec[:, :v]], axis=1)
    spec *= weights
    if baseline and np.iscomplexobj(weights):
        # two-tap shaping: filter zero to the allocation edges
        spec = np.fft.fftshift(spec, axes=1)
    offset = (cfg.n_fft - cfg.m) // 2 if baseline else cfg.offset
    offset_os = offset + (oversample - 1) * (cfg.n_fft // 2)
    return _papr_rows(spec, offset_os, cfg.n_fft, oversample, twiddles)


def run_papr_ccdf(cfg: WaveformConfig, scheme: ModulationScheme,
                  baseline: bool = False, n_symbols: int = 10_000,
                  seed: int = 0, thresholds: np.ndarray | None = None,
                  oversample: int = 4, rs_root: int = 1,
                  threads: int | None = None) -> CcdfCurve:
    """Empirical PAPR CCDF over i.i.d. payload symbols.

    ``baseline`` switches to the v = 0 DFT-s-OFDM reference: payload-only
    (no in-symbol RS) and, for PI2_BPSK, the circular two-tap shaping.
    Seeding is counter-based per fixed 512-symbol chunk, so curves are
    byte-identical across runs and worker counts.
    """
    if oversample < 4:
        raise ValueError(f"oversample must be >= 4, got {oversample}")
    if thresholds is None:
        thresholds = default_papr_thresholds()
    if baseline:
        if scheme is ModulationScheme.PI2_BPSK:
            weights = two_tap_weights(cfg.m).astype(np.complex64)
        else:
            weights = np.ones(cfg.m, dtype=np.float32)
        rs_c64 = None
        width = cfg.m
    else:
        weights = design_shaping_filter(cfg.m, cfg.v).weights.astype(np.float32)
        rs_c64 = generate_rs(cfg.layout.rs_len, rs_root).samples.astype(np.complex64)
        width = cfg.occupied
    points = _papr_payload_tables(scheme)
    twiddles = _papr_twiddles(width, cfg.n_fft, oversample, np.complex64)

    n_chunks = (n_symbols + _PAPR_CHUNK - 1) // _PAPR_CHUNK
    out = np.empty(n_symbols)

    def work(ci: int):
        lo = ci * _PAPR_CHUNK
        hi = min(lo + _PAPR_CHUNK, n_symbols)
        out[lo:hi] = _papr_chunk(cfg, scheme, baseline, weights, rs_c64, points,
                                 twiddles, hi - lo, seed, ci, oversample)

    n_workers = threads if threads is not None else (os.cpu_count() or 1)
    if n_workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(work, range(n_chunks)))
    else:
        for ci in range(n_chunks):
            work(ci)

    sorted_papr = np.sort(out)
    prob = (n_symbols - np.searchsorted(sorted_papr, thresholds, side="right")) / n_symbols
    payload = dict(_config_payload(cfg), scheme=scheme.value, baseline=baseline,
                   n_symbols=n_symbols, oversample=oversample)
    return CcdfCurve(thresholds_db=np.asarray(thresholds, dtype=float), prob=prob,
                     n_symbols=n_symbols, seed=seed, config_digest=_digest(payload),
                     papr_samples_db=out)


# ---------------------------------------------------------------------------
# Link level
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelSpec:
    """What the per-trial channel draw looks like.

    kind 'ideal' is a single unit tap (pure AWGN once noise is added);
    'tdl' draws a fresh fading realization per trial. known_channel hands
    the true folded response to the equalizer instead of self-estimating.
    """

    kind: str = "tdl"
    profile: str = "tdl-d"
    ds_ns: float = 10.0
    known_channel: bool = False

    def __post_init__(self):
        if self.kind not in ("ideal", "tdl"):
            raise ValueError(f"channel kind must be 'ideal' or 'tdl', got {self.kind!r}")


@dataclass(frozen=True)
class LinkLevelPoint:
    snr_db: float
    trials: int
    symbol_errors: int
    ser: float
    mean_evm_db: float
    mean_chest_nmse_db: float
    flagged_trials: int


@dataclass
class LinkLevelResult:
    points: list
    data_len: int
    seed: int
    config_digest: str
    # Per-trial metrics, populated only when keep_trials is requested.
    evm_db: np.ndarray | None = None
    nmse_db: np.ndarray | None = None


def _lin_to_db(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def _link_chunk(setup: SimulationSetup, scheme: ModulationScheme, chan: ChannelSpec,
                profile, snr_db: float, point_index: int, trial_lo: int, trial_hi: int,
                equalizer: str, seed: int):
    cfg, filt, rs = setup.cfg, setup.filt, setup.rs
    n = trial_hi - trial_lo
    data_len = cfg.layout.data_len
    bps = scheme.bits_per_symbol
    sym_len = cfg.n_fft + cfg.cp_samples
    sigma2 = noise_variance(snr_db) if np.isfinite(snr_db) else 0.0

    data = np.empty((n, data_len), dtype=np.complex128)
    realizations = []
    noise_rngs = []
    for i, t in enumerate(range(trial_lo, trial_hi)):
        ss = np.random.SeedSequence(seed, spawn_key=(_STREAM_LINK, point_index, t))
        bits_rng, chan_rng, noise_rng = map(np.random.default_rng, ss.spawn(3))
        bits = bits_rng.integers(0, 2, size=data_len * bps, dtype=np.uint8)
        data[i] = modulate(bits, scheme)
        if chan.kind == "ideal":
            realizations.append(IDEAL_CHANNEL)
        else:
            realizations.append(realize_tdl(profile, chan.ds_ns, cfg.sample_rate, chan_rng))
        noise_rngs.append(noise_rng)

    s = build_symbol_sequence(data, rs, cfg.layout)
    x = modulate_rows(s, cfg, filt.weights)

    max_taps = max(r.delays.size for r in realizations)
    delays = np.zeros((n, max_taps), dtype=np.int64)
    gains = np.zeros((n, max_taps), dtype=np.complex128)
    n_taps = np.empty(n, dtype=np.int64)
    flagged = np.zeros(n, dtype=bool)
    for i, r in enumerate(realizations):
        k = r.delays.size
        delays[i, :k] = r.delays
        gains[i, :k] = r.gains
        n_taps[i] = k
        flagged[i] = r.max_delay > cfg.cp_samples
    y = tap_convolve_rows(np.ascontiguousarray(x), delays, gains, n_taps)

    if sigma2 > 0.0:
        sigma = np.sqrt(sigma2 / 2.0)
        for i in range(n):
            rng = noise_rngs[i]
            y[i] += sigma * (rng.standard_normal(sym_len) + 1j * rng.standard_normal(sym_len))

    truth = np.empty((n, cfg.m), dtype=np.complex128)
    for i, r in enumerate(realizations):
        truth[i] = effective_bin_response(r, cfg, filt)

    override = truth if chan.known_channel else None
    noise_var = sigma2 if equalizer == "mmse" else 0.0
    rx_data, h_eff, _, _ = demodulate_rows(y, cfg, filt, rs, noise_var,
                                           channel_override=override)

    tx_ids = decide_symbols(data, scheme)
    rx_ids = decide_symbols(rx_data, scheme)
    errors = np.count_nonzero(tx_ids != rx_ids, axis=1)
    evm = np.sum(np.abs(rx_data - data) ** 2, axis=1) / np.sum(np.abs(data) ** 2, axis=1)
    if chan.known_channel:
        nmse = np.full(n, np.nan)
    else:
        nmse = (np.sum(np.abs(h_eff - truth) ** 2, axis=1)
                / np.sum(np.abs(truth) ** 2, axis=1))
    return errors, evm, nmse, flagged


def run_link_level(setup: SimulationSetup, scheme: ModulationScheme,
                   chan: ChannelSpec, snr_list, trials_per_snr: int,
                   seed: int = 0, equalizer: str = "mmse",
                   threads: int | None = None,
                   keep_trials: bool = False) -> LinkLevelResult:
    """Full TX -> channel -> RX Monte Carlo over a list of SNR points.

    Each trial draws a fresh payload, channel realization and noise from
    its own counter-derived stream; aggregation is index-ordered sums, so
    results do not depend on worker count or execution order.
    """
    if trials_per_snr < 1:
        raise ValueError("trials_per_snr must be >= 1")
    if equalizer not in ("mmse", "zf"):
        raise ValueError(f"equalizer must be 'mmse' or 'zf', got {equalizer!r}")
    snr_list = [float(s) for s in snr_list]
    profile = load_tdl_profile(chan.profile) if chan.kind == "tdl" else None
    cfg = setup.cfg
    data_len = cfg.layout.data_len

    n_pts = len(snr_list)
    errors = np.zeros((n_pts, trials_per_snr), dtype=np.int64)
    evm = np.zeros((n_pts, trials_per_snr))
    nmse = np.zeros((n_pts, trials_per_snr))
    flagged = np.zeros((n_pts, trials_per_snr), dtype=bool)

    tasks = []
    for pi in range(n_pts):
        for lo in range(0, trials_per_snr, _LINK_CHUNK):
            tasks.append((pi, lo, min(lo + _LINK_CHUNK, trials_per_snr)))

    def work(task):
        pi, lo, hi = task
        e, v, q, f = _link_chunk(setup, scheme, chan, profile, snr_list[pi],
                                 pi, lo, hi, equalizer, seed)
        errors[pi, lo:hi] = e
        evm[pi, lo:hi] = v
        nmse[pi, lo:hi] = q
        flagged[pi, lo:hi] = f

    n_workers = threads if threads is not None else (os.cpu_count() or 1)
    if n_workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(work, tasks))
    else:
        for task in tasks:
            work(task)

    points = []
    for pi, snr in enumerate(snr_list):
        total_err = int(errors[pi].sum())
        points.append(LinkLevelPoint(
            snr_db=snr,
            trials=trials_per_snr,
            symbol_errors=total_err,
            ser=total_err / (trials_per_snr * data_len),
            mean_evm_db=float(_lin_to_db(evm[pi].mean())),
            mean_chest_nmse_db=float(_lin_to_db(np.nanmean(nmse[pi]))
                                     if not np.all(np.isnan(nmse[pi])) else np.nan),
            flagged_trials=int(flagged[pi].sum()),
        ))
    payload = dict(_config_payload(cfg), scheme=scheme.value, chan_kind=chan.kind,
                   ds_ns=chan.ds_ns, known=chan.known_channel, snr=snr_list,
                   trials=trials_per_snr, equalizer=equalizer)
    result = LinkLevelResult(points=points, data_len=data_len, seed=seed,
                             config_digest=_digest(payload))
    if keep_trials:
        result.evm_db = _lin_to_db(evm)
        result.nmse_db = _lin_to_db(nmse)
    return result
