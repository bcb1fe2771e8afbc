"""Bit-to-symbol modulation, reference-signal generation, and the
time-multiplex layout that packs RS and data into one pre-DFT block.

Block layout (lengths in pre-DFT samples, M total):

    [ RS tail (W) | RS (L) | RS head (W) | data (M - L - 2W) ]

The W-sample guards are a circular prefix/suffix of the RS itself, so the
RS region behaves as a circular convolution under any channel shorter than
W samples, which is what makes plain FFT-division channel estimation exact.

Constellation bit conventions (documented in README): bits map MSB-first,
even-position bits drive the I axis and odd-position bits the Q axis, each
axis using the reflected-Gray amplitude rule with levels +-1..+-(2^(k)-1)
and normalizers sqrt(2), sqrt(10), sqrt(42), sqrt(170).
"""

from dataclasses import dataclass
from enum import Enum
from math import gcd

import numpy as np

_SQRT2 = np.sqrt(2.0)


class ModulationScheme(Enum):
    PI2_BPSK = "pi2_bpsk"
    QPSK = "qpsk"
    QAM16 = "qam16"
    QAM64 = "qam64"
    QAM256 = "qam256"

    @property
    def bits_per_symbol(self) -> int:
        return _BITS[self]

    @classmethod
    def parse(cls, name: str) -> "ModulationScheme":
        key = name.strip().lower().replace("/", "").replace("-", "_")
        aliases = {
            "pi2bpsk": cls.PI2_BPSK,
            "pi_2_bpsk": cls.PI2_BPSK,
            "16qam": cls.QAM16,
            "64qam": cls.QAM64,
            "256qam": cls.QAM256,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown modulation scheme {name!r}") from None


_BITS = {
    ModulationScheme.PI2_BPSK: 1,
    ModulationScheme.QPSK: 2,
    ModulationScheme.QAM16: 4,
    ModulationScheme.QAM64: 6,
    ModulationScheme.QAM256: 8,
}


def _axis_amplitude(bits: tuple[int, ...]) -> float:
    # Reflected-Gray rule, built inside-out: innermost term 2-(1-2b_last),
    # then 2^d - (1-2b)*inner at each depth, sign from the leading bit.
    amp = 1.0
    for depth, b in enumerate(reversed(bits[1:]), start=1):
        amp = 2**depth - (1 - 2 * b) * amp
    return (1 - 2 * bits[0]) * amp


def _build_qam_table(bps: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Constellation lookup for square QAM with interleaved I/Q bits.

    Returns (points[2^bps], axis_bits[n_levels, k], norm) where axis_bits
    maps an ascending per-axis level index back to its k Gray bits.
    """
    k = bps // 2
    n_levels = 2**k
    norm = np.sqrt(2.0 / 3.0 * (4**k - 1))  # sqrt of 2x per-axis mean power
    points = np.empty(2**bps, dtype=np.complex128)
    for idx in range(2**bps):
        bits = [(idx >> (bps - 1 - i)) & 1 for i in range(bps)]
        i_amp = _axis_amplitude(tuple(bits[0::2]))
        q_amp = _axis_amplitude(tuple(bits[1::2]))
        points[idx] = (i_amp + 1j * q_amp) / norm
    # Inverse per-axis map: level index (0 -> -(n_levels-1), ascending by 2).
    axis_bits = np.empty((n_levels, k), dtype=np.uint8)
    seen = {}
    for idx in range(n_levels):
        bits = tuple((idx >> (k - 1 - i)) & 1 for i in range(k))
        amp = _axis_amplitude(bits)
        seen[amp] = bits
    for li, amp in enumerate(range(-(n_levels - 1), n_levels, 2)):
        axis_bits[li] = seen[float(amp)]
    return points, axis_bits, norm


_QAM_TABLES = {
    s: _build_qam_table(_BITS[s])
    for s in (ModulationScheme.QPSK, ModulationScheme.QAM16,
              ModulationScheme.QAM64, ModulationScheme.QAM256)
}


def _pack_bits(bits: np.ndarray, bps: int) -> np.ndarray:
    b = bits.reshape(-1, bps)
    idx = b[:, 0].astype(np.int64)
    for i in range(1, bps):
        idx <<= 1
        idx |= b[:, i]
    return idx


def modulate(bits, scheme: ModulationScheme) -> np.ndarray:
    """Map bits to unit-average-power constellation symbols.

    The last axis is one bit sequence; its length must divide evenly into
    symbols (leading axes are independent sequences). PI2_BPSK applies the
    per-index pi/2 rotation, restarting at each sequence:
    x[n] = j^(n mod 2) * ((1-2b)+j(1-2b))/sqrt(2).
    """
    bits = np.asarray(bits, dtype=np.uint8)
    bps = scheme.bits_per_symbol
    if bits.shape[-1] % bps != 0:
        raise ValueError(f"bit count {bits.shape[-1]} not divisible by {bps}")
    n_sym = bits.shape[-1] // bps
    out_shape = bits.shape[:-1] + (n_sym,)
    if scheme is ModulationScheme.PI2_BPSK:
        base = (1.0 - 2.0 * bits.astype(np.float64)) * ((1 + 1j) / _SQRT2)
        rot = np.ones(n_sym, dtype=np.complex128)
        rot[1::2] = 1j
        return base.reshape(out_shape) * rot
    points, _, _ = _QAM_TABLES[scheme]
    return points[_pack_bits(bits, bps)].reshape(out_shape)


def _qam_axis_indices(values: np.ndarray, scheme: ModulationScheme):
    """Nearest per-axis level indices (0..n_levels-1) for I and Q."""
    _, axis_bits, norm = _QAM_TABLES[scheme]
    n_levels = axis_bits.shape[0]
    scaled_i = values.real * norm
    scaled_q = values.imag * norm
    idx_i = np.clip(np.round((scaled_i + n_levels - 1) / 2.0), 0, n_levels - 1)
    idx_q = np.clip(np.round((scaled_q + n_levels - 1) / 2.0), 0, n_levels - 1)
    return idx_i.astype(np.int64), idx_q.astype(np.int64)


def demap(symbols, scheme: ModulationScheme) -> np.ndarray:
    """Hard-decision demapping (minimum Euclidean distance), inverse of
    :func:`modulate` in the noiseless case. Last axis = one sequence."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    n_sym = symbols.shape[-1]
    if scheme is ModulationScheme.PI2_BPSK:
        derot = np.ones(n_sym, dtype=np.complex128)
        derot[1::2] = -1j
        z = symbols * derot
        return ((z.real + z.imag) < 0).astype(np.uint8)
    _, axis_bits, _ = _QAM_TABLES[scheme]
    idx_i, idx_q = _qam_axis_indices(symbols, scheme)
    k = axis_bits.shape[1]
    out = np.empty(symbols.shape + (2 * k,), dtype=np.uint8)
    out[..., 0::2] = axis_bits[idx_i]
    out[..., 1::2] = axis_bits[idx_q]
    return out.reshape(symbols.shape[:-1] + (n_sym * 2 * k,))


def decide_symbols(symbols, scheme: ModulationScheme) -> np.ndarray:
    """Hard decisions as integer constellation identities (for SER counts).
    Last axis = one sequence (pi/2 rotation phase restarts per sequence)."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if scheme is ModulationScheme.PI2_BPSK:
        derot = np.ones(symbols.shape[-1], dtype=np.complex128)
        derot[1::2] = -1j
        z = symbols * derot
        return ((z.real + z.imag) < 0).astype(np.int64)
    idx_i, idx_q = _qam_axis_indices(symbols, scheme)
    n_levels = _QAM_TABLES[scheme][1].shape[0]
    return idx_i * n_levels + idx_q


@dataclass(frozen=True)
class RsSequence:
    """Constant-amplitude reference signal (Zadoff-Chu family)."""

    length: int
    root: int
    samples: np.ndarray


def generate_rs(length: int, root: int) -> RsSequence:
    """Zadoff-Chu sequence zc[n] = exp(-j*pi*root*n*(n+1)/length).

    Requires odd length and a root coprime to it; both cited RS lengths in
    the bundled configurations (139, 197) are prime.
    """
    if length <= 0 or length % 2 == 0:
        raise ValueError(f"RS length must be a positive odd integer, got {length}")
    if root <= 0 or gcd(root, length) != 1:
        raise ValueError(f"RS root {root} must be positive and coprime to {length}")
    n = np.arange(length, dtype=np.float64)
    samples = np.exp(-1j * np.pi * root * n * (n + 1) / length)
    return RsSequence(length=length, root=root, samples=samples)


@dataclass(frozen=True)
class SymbolLayout:
    """Pre-DFT block geometry: total length m, RS length, guard width."""

    m: int
    rs_len: int
    guard: int

    def __post_init__(self):
        if self.m <= 0 or self.rs_len <= 0 or self.guard < 0:
            raise ValueError(f"invalid layout {self}")
        if self.data_len < 0:
            raise ValueError(
                f"layout overflows the block: m={self.m} < rs_len + 2*guard = "
                f"{self.rs_len + 2 * self.guard}"
            )

    @property
    def data_len(self) -> int:
        return self.m - self.rs_len - 2 * self.guard

    @property
    def overhead_fraction(self) -> float:
        return (self.rs_len + 2 * self.guard) / self.m

    @property
    def rs_slice(self) -> slice:
        return slice(self.guard, self.guard + self.rs_len)

    @property
    def data_slice(self) -> slice:
        return slice(2 * self.guard + self.rs_len, self.m)


def build_symbol_sequence(data, rs: RsSequence, layout: SymbolLayout) -> np.ndarray:
    """Assemble the length-M pre-DFT sequence [RS tail | RS | RS head | data]."""
    data = np.asarray(data, dtype=np.complex128)
    if data.shape[-1] != layout.data_len:
        raise ValueError(
            f"data length {data.shape[-1]} != layout data_len {layout.data_len}"
        )
    if rs.length != layout.rs_len:
        raise ValueError(f"RS length {rs.length} != layout rs_len {layout.rs_len}")
    if layout.guard > rs.length:
        raise ValueError(f"guard {layout.guard} exceeds RS length {rs.length}")
    w, l = layout.guard, layout.rs_len
    shape = data.shape[:-1] + (layout.m,)
    s = np.empty(shape, dtype=np.complex128)
    s[..., 0:w] = rs.samples[l - w:]
    s[..., w:w + l] = rs.samples
    s[..., w + l:2 * w + l] = rs.samples[:w]
    s[..., 2 * w + l:] = data
    return s
