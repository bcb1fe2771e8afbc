"""OTFDM link-level simulation toolkit.

Single-symbol waveform with time-multiplexed in-symbol reference signals,
DFT precoding, excess-bandwidth spectrum shaping, per-symbol FFT-based
channel estimation and equalization, plus PAPR/SER Monte-Carlo engines,
numerology and link-budget calculators.
"""

__version__ = "0.1.0"

from .channel import (ChannelRealization, NoiseSpec, TdlProfile, apply_channel,
                      effective_bin_response, load_tdl_profile, realize_tdl)
from .link_budget import (LinkBudgetParams, LinkBudgetRow, link_budget_sweep,
                          max_range_m, o2i_loss_db, path_loss)
from .montecarlo import (CcdfCurve, ChannelSpec, LinkLevelPoint, LinkLevelResult,
                         SimulationSetup, compute_papr_db, make_setup,
                         run_link_level, run_papr_ccdf)
from .numerology import NumerologyRow, default_cp_samples, derive_numerology
from .receiver import (ChannelEstimate, estimate_channel, fold_combine,
                       otfdm_demodulate)
from .symbol_builder import (ModulationScheme, RsSequence, SymbolLayout,
                             build_symbol_sequence, demap, generate_rs, modulate)
from .waveform import (IqBuffer, ShapingFilter, WaveformConfig,
                       design_shaping_filter, dft_precode_and_extend,
                       dfts_ofdm_modulate, otfdm_modulate)

__all__ = [
    "__version__",
    "ChannelRealization", "NoiseSpec", "TdlProfile", "apply_channel",
    "effective_bin_response", "load_tdl_profile", "realize_tdl",
    "LinkBudgetParams", "LinkBudgetRow", "link_budget_sweep", "max_range_m",
    "o2i_loss_db", "path_loss",
    "CcdfCurve", "ChannelSpec", "LinkLevelPoint", "LinkLevelResult",
    "SimulationSetup", "compute_papr_db", "make_setup", "run_link_level",
    "run_papr_ccdf",
    "NumerologyRow", "default_cp_samples", "derive_numerology",
    "ChannelEstimate", "estimate_channel", "fold_combine", "otfdm_demodulate",
    "ModulationScheme", "RsSequence", "SymbolLayout", "build_symbol_sequence",
    "demap", "generate_rs", "modulate",
    "IqBuffer", "ShapingFilter", "WaveformConfig", "design_shaping_filter",
    "dft_precode_and_extend", "dfts_ofdm_modulate", "otfdm_modulate",
]
