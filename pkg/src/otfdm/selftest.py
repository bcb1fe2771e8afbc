"""Built-in invariant suite behind the `selftest` subcommand: quick checks
of the folded-Nyquist filter property, noiseless loopback, the AWGN
calibration anchor, and Monte-Carlo determinism across worker counts.
"""

import numpy as np
from scipy.special import erfc

from .montecarlo import ChannelSpec, make_setup, run_link_level, run_papr_ccdf
from .receiver import otfdm_demodulate
from .symbol_builder import (ModulationScheme, build_symbol_sequence, demap,
                             modulate)
from .waveform import design_shaping_filter, otfdm_modulate


def _alias_sumsq_error(m: int, v: int) -> float:
    w2 = design_shaping_filter(m, v).weights ** 2
    folded = w2[v:v + m].copy()
    if v:
        folded[:v] += w2[m + v:]
        folded[m - v:] += w2[:v]
    return float(np.abs(folded - 1.0).max())


def _check_folded_nyquist() -> tuple[bool, str]:
    worst = max(_alias_sumsq_error(m, v)
                for m, v in [(2400, 60), (2400, 120), (2376, 59), (48, 4)])
    return worst <= 1e-12, f"max alias-power error {worst:.2e}"


def _check_loopback(seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    setup = make_setup(n_prb=200, extension_fraction=0.05, rs_len=139, rs_guard=67)
    worst_evm = -np.inf
    for scheme in (ModulationScheme.QPSK, ModulationScheme.QAM256):
        bits = rng.integers(0, 2, setup.cfg.layout.data_len * scheme.bits_per_symbol,
                            dtype=np.uint8)
        data = modulate(bits, scheme)
        x = otfdm_modulate(build_symbol_sequence(data, setup.rs, setup.cfg.layout),
                           setup.cfg, setup.filt)
        out, _ = otfdm_demodulate(x, setup.cfg, setup.filt, setup.rs)
        if np.any(demap(out, scheme) != bits):
            return False, f"bit errors in noiseless loopback ({scheme.value})"
        evm = 10 * np.log10(np.sum(np.abs(out - data) ** 2) / np.sum(np.abs(data) ** 2))
        worst_evm = max(worst_evm, evm)
    return worst_evm <= -100.0, f"worst loopback EVM {worst_evm:.1f} dB"


def _qpsk_ser_closed_form(snr_db: float) -> float:
    p = 0.5 * erfc(np.sqrt(10 ** (snr_db / 10.0) / 2.0))
    return 2 * p - p * p


def _effective_snr_db(ser: float, lo: float = -5.0, hi: float = 30.0) -> float:
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _qpsk_ser_closed_form(mid) > ser:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_awgn_anchor(seed: int, threads) -> tuple[bool, str]:
    setup = make_setup(n_prb=24, extension_fraction=0.0, rs_len=13, rs_guard=6,
                       n_fft=512)
    target = 8.2
    res = run_link_level(setup, ModulationScheme.QPSK,
                         ChannelSpec(kind="ideal", known_channel=True),
                         [target], 2000, seed=seed, threads=threads)
    eff = _effective_snr_db(res.points[0].ser)
    # Smoke-test tolerance; the full-size anchor in the acceptance suite
    # uses the contractual 0.2 dB.
    return abs(eff - target) <= 0.3, f"effective SNR {eff:.2f} dB vs {target}"


def _check_papr_determinism(seed: int) -> tuple[bool, str]:
    setup = make_setup(n_prb=200, extension_fraction=0.05, rs_len=139, rs_guard=67)
    a = run_papr_ccdf(setup.cfg, ModulationScheme.QPSK, n_symbols=1024,
                      seed=seed, threads=1)
    b = run_papr_ccdf(setup.cfg, ModulationScheme.QPSK, n_symbols=1024,
                      seed=seed, threads=2)
    same = (np.array_equal(a.papr_samples_db, b.papr_samples_db)
            and np.array_equal(a.prob, b.prob))
    return same, "curves identical across worker counts" if same else "curves differ"


def run_selftest(seed: int = 0, threads=None) -> bool:
    checks = [
        ("folded_nyquist", lambda: _check_folded_nyquist()),
        ("noiseless_loopback", lambda: _check_loopback(seed)),
        ("awgn_anchor", lambda: _check_awgn_anchor(seed, threads)),
        ("papr_determinism", lambda: _check_papr_determinism(seed)),
    ]
    all_ok = True
    for name, fn in checks:
        ok, detail = fn()
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        all_ok = all_ok and ok
    return all_ok
