"""Deterministic DL/UL link-budget calculator for macro-cell coverage
studies: received power from transmit power and antenna gains minus path
loss and building penetration, against the thermal noise floor.

Path-loss formula coefficients are transcribed from the external channel
model standard into data/pathloss_macro.csv (one annotated row per value);
this module only supplies the formula shapes.
"""

import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@lru_cache(maxsize=1)
def _coefficients() -> dict:
    path = resources.files("otfdm.data").joinpath("pathloss_macro.csv")
    table: dict[tuple[str, str], float] = {}
    with path.open() as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#") or row[0] == "scenario":
                continue
            table[(row[0], row[1])] = float(row[2])
    return table


def _c(scenario: str, name: str) -> float:
    return _coefficients()[(scenario, name)]


def _d3d(d2d, hbs_m: float, hue_m: float):
    return np.sqrt(np.square(d2d) + (hbs_m - hue_m) ** 2)


def _uma_los(d2d, fc_ghz, hbs_m, hue_m):
    c = lambda n: _c("uma_los", n)
    he = c("effective_env_height")
    dbp = 4.0 * (hbs_m - he) * (hue_m - he) * (fc_ghz * 1e9) / SPEED_OF_LIGHT
    d3d = _d3d(d2d, hbs_m, hue_m)
    pl1 = c("const") + c("dist_slope1") * np.log10(d3d) + c("freq_slope") * np.log10(fc_ghz)
    pl2 = (c("const") + c("dist_slope2") * np.log10(d3d) + c("freq_slope") * np.log10(fc_ghz)
           - c("bp_correction") * np.log10(dbp**2 + (hbs_m - hue_m) ** 2))
    return np.where(d2d <= dbp, pl1, pl2)


def _uma_nlos(d2d, fc_ghz, hbs_m, hue_m):
    c = lambda n: _c("uma_nlos", n)
    d3d = _d3d(d2d, hbs_m, hue_m)
    pl = (c("const") + c("dist_slope") * np.log10(d3d)
          + c("freq_slope") * np.log10(fc_ghz) - c("ue_height_corr") * (hue_m - 1.5))
    return np.maximum(_uma_los(d2d, fc_ghz, hbs_m, hue_m), pl)


def _rma_los(d2d, fc_ghz, hbs_m, hue_m):
    c = lambda n: _c("rma_los", n)
    h = c("avg_building_height")
    dbp = 2.0 * np.pi * hbs_m * hue_m * (fc_ghz * 1e9) / SPEED_OF_LIGHT
    d3d = _d3d(d2d, hbs_m, hue_m)

    def pl1(d):
        return (20.0 * np.log10(40.0 * np.pi * d * fc_ghz / 3.0)
                + min(c("building_coeff") * h ** c("building_exp"), c("building_cap")) * np.log10(d)
                - min(c("offset_coeff") * h ** c("building_exp"), c("offset_cap"))
                + c("linear_coeff") * np.log10(h) * d)

    d3d_bp = np.sqrt(dbp**2 + (hbs_m - hue_m) ** 2)
    return np.where(d2d <= dbp, pl1(d3d), pl1(d3d_bp) + c("dist_slope2") * np.log10(d3d / d3d_bp))


def _rma_nlos(d2d, fc_ghz, hbs_m, hue_m):
    c = lambda n: _c("rma_nlos", n)
    h = _c("rma_los", "avg_building_height")
    w = _c("rma_los", "avg_street_width")
    d3d = _d3d(d2d, hbs_m, hue_m)
    pl = (c("const") - c("street_coeff") * np.log10(w) + c("building_coeff") * np.log10(h)
          - (c("bs_coeff_a") - c("bs_coeff_b") * (h / hbs_m) ** 2) * np.log10(hbs_m)
          + (c("dist_coeff_a") - c("dist_coeff_b") * np.log10(hbs_m)) * (np.log10(d3d) - 3.0)
          + c("freq_slope") * np.log10(fc_ghz)
          - (c("ue_coeff_a") * np.log10(c("ue_coeff_b") * hue_m) ** 2 - c("ue_coeff_c")))
    return np.maximum(_rma_los(d2d, fc_ghz, hbs_m, hue_m), pl)


def path_loss(scenario: str, fc_hz: float, d2d_m, hbs_m: float, hue_m: float,
              los: bool = False):
    """Macro-cell path loss in dB; scenario 'uma' or 'rma'.

    Distances below the model validity floor (10 m) are clamped with a
    warning. Accepts scalar or array distances; non-decreasing in distance.
    """
    scenario = scenario.strip().lower()
    if scenario not in ("uma", "rma"):
        raise ValueError(f"scenario must be 'uma' or 'rma', got {scenario!r}")
    if fc_hz <= 0:
        raise ValueError("carrier frequency must be positive")
    d2d = np.asarray(d2d_m, dtype=float)
    scalar = d2d.ndim == 0
    d2d = np.atleast_1d(d2d)
    if np.any(d2d < 1.0):
        raise ValueError("distance must be >= 1 m")
    d_min = _c(f"{scenario}_los", "d2d_min")
    if np.any(d2d < d_min):
        warnings.warn(f"distances below {d_min} m clamped to the model floor",
                      stacklevel=2)
        d2d = np.maximum(d2d, d_min)
    fc_ghz = fc_hz / 1e9
    fn = {("uma", True): _uma_los, ("uma", False): _uma_nlos,
          ("rma", True): _rma_los, ("rma", False): _rma_nlos}[(scenario, los)]
    out = fn(d2d, fc_ghz, hbs_m, hue_m)
    return float(out[0]) if scalar else out


def o2i_loss_db(model: str, fc_hz: float, depth_m: float = 0.0) -> float:
    """Building-penetration loss: through-wall term plus indoor distance.

    model: 'o2i-low' (standard glass facade) or 'o2i-high' (IRR glass).
    """
    key = model.strip().lower().replace("-", "_")
    if key not in ("o2i_low", "o2i_high"):
        raise ValueError(f"unknown O2I model {model!r}")
    fc_ghz = fc_hz / 1e9
    c = lambda n: _c(key, n)
    concrete = c("concrete_a") + c("concrete_b") * fc_ghz
    if key == "o2i_low":
        glass = c("glass_a") + c("glass_b") * fc_ghz
        frac = c("glass_frac")
        mix = frac * 10 ** (-glass / 10.0) + (1 - frac) * 10 ** (-concrete / 10.0)
    else:
        irr = c("irr_glass_a") + c("irr_glass_b") * fc_ghz
        frac = c("irr_glass_frac")
        mix = frac * 10 ** (-irr / 10.0) + (1 - frac) * 10 ** (-concrete / 10.0)
    return c("const") - 10.0 * np.log10(mix) + c("depth_slope") * depth_m


@dataclass(frozen=True)
class LinkBudgetParams:
    """Everything needed to turn a distance into an SNR.

    Antenna gains and noise figure are explicit (the conventional DL/UL
    preset values live in the CLI, not here). indoor_model is 'none',
    'fixed' (uses indoor_loss_db) or an O2I model name.
    """

    fc_hz: float
    tx_power_dbm: float
    tx_gain_db: float
    rx_gain_db: float
    bandwidth_hz: float
    noise_figure_db: float
    noise_density_dbm_hz: float = -174.0
    bs_height_m: float = 25.0
    ue_height_m: float = 1.5
    scenario: str = "uma"
    los: bool = False
    link_direction: str = "dl"
    indoor_model: str = "none"
    indoor_loss_db: float = 0.0
    indoor_depth_m: float = 0.0

    def __post_init__(self):
        if self.fc_hz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("carrier frequency and bandwidth must be positive")
        if self.link_direction not in ("dl", "ul"):
            raise ValueError("link_direction must be 'dl' or 'ul'")

    @property
    def effective_indoor_loss_db(self) -> float:
        if self.indoor_model == "none":
            return 0.0
        if self.indoor_model == "fixed":
            return self.indoor_loss_db
        return o2i_loss_db(self.indoor_model, self.fc_hz, self.indoor_depth_m)

    @property
    def noise_floor_dbm(self) -> float:
        return (self.noise_density_dbm_hz + 10.0 * np.log10(self.bandwidth_hz)
                + self.noise_figure_db)


@dataclass(frozen=True)
class LinkBudgetRow:
    distance_m: float
    path_loss_db: float
    rx_power_dbm: float
    noise_floor_dbm: float
    snr_db: float


def link_budget_sweep(params: LinkBudgetParams, distances) -> list[LinkBudgetRow]:
    """Evaluate the budget at each distance:
    rx = tx + gains - path loss - indoor loss; snr = rx - noise floor."""
    distances = np.atleast_1d(np.asarray(distances, dtype=float))
    if distances.size == 0:
        raise ValueError("need at least one distance")
    pl = np.atleast_1d(path_loss(params.scenario, params.fc_hz, distances,
                                 params.bs_height_m, params.ue_height_m, params.los))
    indoor = params.effective_indoor_loss_db
    noise = params.noise_floor_dbm
    rows = []
    for d, loss in zip(distances, pl):
        rx = params.tx_power_dbm + params.tx_gain_db + params.rx_gain_db - loss - indoor
        rows.append(LinkBudgetRow(distance_m=float(d), path_loss_db=float(loss),
                                  rx_power_dbm=float(rx), noise_floor_dbm=float(noise),
                                  snr_db=float(rx - noise)))
    return rows


def max_range_m(params: LinkBudgetParams, target_snr_db: float,
                d_lo: float = 10.0, d_hi: float = 200_000.0) -> float:
    """Largest distance achieving the target SNR (bisection on the
    monotone budget); returns d_lo if even that misses the target."""
    snr_at = lambda d: link_budget_sweep(params, [d])[0].snr_db
    if snr_at(d_lo) < target_snr_db:
        return d_lo
    if snr_at(d_hi) >= target_snr_db:
        return d_hi
    lo, hi = d_lo, d_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if snr_at(mid) >= target_snr_db:
            lo = mid
        else:
            hi = mid
    return lo
