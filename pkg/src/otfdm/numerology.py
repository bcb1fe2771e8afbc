"""Symbol-timing numerology: sampling time, symbol/CP durations and TTI
as functions of subcarrier spacing and FFT size.

All durations are stored in seconds; unit scaling (ns/us) happens only at
the presentation layer.
"""

from dataclasses import dataclass

# Normal-CP ratio: 288 CP samples per 4096-point FFT.
_CP_REF_SAMPLES = 288
_CP_REF_FFT = 4096


@dataclass(frozen=True)
class NumerologyRow:
    scs_hz: float
    n_fft: int
    sampling_time_s: float
    symbol_duration_s: float
    cp_samples: int
    cp_duration_s: float
    tti_s: float


def default_cp_samples(n_fft: int) -> int:
    """CP length in samples for a given FFT size (normal-CP ratio),
    rounded half-up."""
    return int(_CP_REF_SAMPLES * n_fft / _CP_REF_FFT + 0.5)


def derive_numerology(scs_hz: float, n_fft: int, cp_samples: int | None = None) -> NumerologyRow:
    """Compute one numerology row from subcarrier spacing and FFT size.

    scs_hz must be positive, n_fft a power of two, and cp_samples (default:
    the normal-CP ratio scaled to n_fft) smaller than n_fft.
    """
    if scs_hz <= 0:
        raise ValueError(f"subcarrier spacing must be positive, got {scs_hz}")
    if n_fft < 1 or (n_fft & (n_fft - 1)) != 0:
        raise ValueError(f"FFT size must be a power of two, got {n_fft}")
    if cp_samples is None:
        cp_samples = default_cp_samples(n_fft)
    if not 0 <= cp_samples < n_fft:
        raise ValueError(f"cp_samples must be in [0, n_fft), got {cp_samples}")

    sampling_time = 1.0 / (scs_hz * n_fft)
    symbol_duration = 1.0 / scs_hz
    cp_duration = cp_samples * sampling_time
    return NumerologyRow(
        scs_hz=scs_hz,
        n_fft=n_fft,
        sampling_time_s=sampling_time,
        symbol_duration_s=symbol_duration,
        cp_samples=cp_samples,
        cp_duration_s=cp_duration,
        tti_s=symbol_duration + cp_duration,
    )
