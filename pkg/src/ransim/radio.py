"""Link-budget physics shared by every experiment.

All functions accept scalars; the ones used in inner loops also accept numpy
arrays and broadcast.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Shannon fit standing in for link adaptation
DEFAULT_EFFICIENCY = 0.6
DEFAULT_MAX_SE = 6.0

THERMAL_DBM_HZ = -174.0
DEFAULT_NOISE_FIGURE_DB = 9.0

MIN_DISTANCE_M = 10.0

FQAM_GAIN_MAX_DB = 3.0
FQAM_PIVOT_DB = 0.0
FQAM_ZERO_DB = 10.0


@dataclass(frozen=True)
class AivProfile:
    name: str
    carrier_ghz: float
    rb_count: int
    rb_bandwidth_hz: float
    tti_ticks: int
    efficiency: float = DEFAULT_EFFICIENCY
    max_se: float = DEFAULT_MAX_SE

    def __post_init__(self):
        if self.tti_ticks not in (1, 5):
            raise ValueError(f"tti_ticks must be 1 or 5, got {self.tti_ticks}")
        if self.carrier_ghz <= 0 or self.rb_count < 0 or self.rb_bandwidth_hz < 0:
            raise ValueError("invalid AIV profile")

    @property
    def bandwidth_hz(self) -> float:
        return self.rb_count * self.rb_bandwidth_hz


def lte_profile(bandwidth_mhz: float = 20.0) -> AivProfile:
    # 180 kHz RBs at 15 kHz numerology
    return AivProfile("LTE", 2.0, int(round(bandwidth_mhz * 5)), 180e3, 5)


def nr_profile(bandwidth_mhz: float = 20.0, carrier_ghz: float = 15.0) -> AivProfile:
    # 0.2 ms TTI: 75 kHz subcarriers, 900 kHz RBs, fewer sub-bands
    return AivProfile("NR5G", carrier_ghz, int(round(bandwidth_mhz / 0.9)), 900e3, 1)


def mmw_profile(carrier_ghz: float = 60.0) -> AivProfile:
    return AivProfile("MMW", carrier_ghz, 1, 2.16e9, 1)


@dataclass(frozen=True)
class Beam:
    """Parabolic main lobe with a flat floor at ``peak - front_to_back``."""

    boresight_deg: float
    beamwidth_deg: float
    peak_gain_db: float
    front_to_back_db: float

    def gain_db(self, azimuth_deg):
        return beam_gain_db(azimuth_deg, self.boresight_deg, self.beamwidth_deg,
                            self.peak_gain_db, self.front_to_back_db)


def wrap_deg(angle):
    """Wrap into [-180, 180)."""
    return (np.asarray(angle) + 180.0) % 360.0 - 180.0


def beam_gain_db(azimuth_deg, boresight_deg, beamwidth_deg, peak_db, ftb_db):
    off = wrap_deg(np.asarray(azimuth_deg, dtype=float) - boresight_deg)
    g = peak_db - np.minimum(12.0 * (off / beamwidth_deg) ** 2, ftb_db)
    return float(g) if np.ndim(g) == 0 else g


def sector_beam(boresight_deg: float) -> Beam:
    return Beam(boresight_deg, 70.0, 14.0, 20.0)


def azimuth_deg(dx, dy):
    return np.degrees(np.arctan2(dy, dx))


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float
    tx_gain_db: float = 0.0
    rx_gain_db: float = 0.0
    pathloss_db: float = 0.0
    shadowing_db: float = 0.0


def pathloss_db(distance_m, carrier_ghz):
    """UMa distance law with a free-space carrier correction relative to 2 GHz.

    Distances under 10 m are clamped to 10 m.
    """
    if np.any(np.asarray(carrier_ghz) <= 0):
        raise ValueError("carrier frequency must be positive")
    d_km = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M) / 1000.0
    pl = 128.1 + 37.6 * np.log10(d_km) + 20.0 * np.log10(np.asarray(carrier_ghz) / 2.0)
    return float(pl) if np.ndim(pl) == 0 else pl


def rx_power_dbm(budget: LinkBudget) -> float:
    return (budget.tx_power_dbm + budget.tx_gain_db + budget.rx_gain_db
            - budget.pathloss_db - budget.shadowing_db)


def noise_dbm(bandwidth_hz: float, noise_figure_db: float = DEFAULT_NOISE_FIGURE_DB) -> float:
    return THERMAL_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def db_to_lin(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def lin_to_db(lin):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(lin)


@dataclass(frozen=True)
class Sinr:
    linear: float

    def __post_init__(self):
        if not self.linear >= 0:
            raise ValueError(f"SINR must be non-negative, got {self.linear}")

    @property
    def db(self) -> float:
        return -math.inf if self.linear == 0 else 10.0 * math.log10(self.linear)

    @classmethod
    def from_db(cls, db: float) -> "Sinr":
        return cls(0.0 if db == -math.inf else 10.0 ** (db / 10.0))


def sinr(serving_dbm: float, interferers_dbm, noise_dbm: float | None) -> Sinr:
    """S / (sum(I) + N) in the linear domain. ``noise_dbm=None`` gives C/I."""
    s = 10.0 ** (serving_dbm / 10.0)
    i = sum(10.0 ** (x / 10.0) for x in interferers_dbm)
    n = 0.0 if noise_dbm is None else 10.0 ** (noise_dbm / 10.0)
    if i + n == 0.0:
        return Sinr(math.inf)
    return Sinr(s / (i + n))


def spectral_efficiency(sinr_linear, efficiency=DEFAULT_EFFICIENCY, max_se=DEFAULT_MAX_SE):
    se = efficiency * np.minimum(np.log2(1.0 + np.asarray(sinr_linear, dtype=float)), max_se)
    return float(se) if np.ndim(se) == 0 else se


def rate_bps(s, bandwidth_hz, aiv: AivProfile | None = None):
    """Achievable rate: eta * B * min(log2(1 + SINR), cap)."""
    if np.any(np.asarray(bandwidth_hz) < 0):
        raise ValueError("bandwidth must be non-negative")
    lin = s.linear if isinstance(s, Sinr) else s
    eta = aiv.efficiency if aiv is not None else DEFAULT_EFFICIENCY
    cap = aiv.max_se if aiv is not None else DEFAULT_MAX_SE
    r = np.asarray(bandwidth_hz, dtype=float) * spectral_efficiency(lin, eta, cap)
    return float(r) if np.ndim(r) == 0 else r


def fqam_gain_db(sinr_db, g_max_db=FQAM_GAIN_MAX_DB, pivot_db=FQAM_PIVOT_DB,
                 zero_db=FQAM_ZERO_DB):
    """Uplift: flat g_max up to the pivot, linear taper to 0 at ``zero_db``."""
    x = np.asarray(sinr_db, dtype=float)
    taper = g_max_db * (zero_db - x) / (zero_db - pivot_db)
    g = np.where(x <= pivot_db, g_max_db, np.where(x >= zero_db, 0.0, taper))
    return float(g) if np.ndim(g) == 0 else g


def fqam_effective_sinr(s: Sinr, dominant_interferer_fqam: bool,
                        g_max_db: float = FQAM_GAIN_MAX_DB) -> Sinr:
    if not dominant_interferer_fqam or s.linear == 0 or math.isinf(s.linear):
        return s
    return Sinr.from_db(s.db + fqam_gain_db(s.db, g_max_db))
