"""3GPP InH / UMi reference path loss and ASA lognormal parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C_3GPP = 3.0e8  # the standard uses c = 3e8 m/s in the breakpoint formula


@dataclass(frozen=True)
class BaselineQuery:
    scenario: str  # "InH" or "UMi"
    los: str  # "LoS" or "NLoS"
    fc_GHz: float
    d_m: float = 10.0
    h_bs_m: float = 10.0
    h_ut_m: float = 1.5

    def __post_init__(self):
        _check_scenario(self.scenario, self.los)
        _check_fc(self.fc_GHz)


def _check_scenario(scenario, los):
    if scenario not in ("InH", "UMi"):
        raise ValueError(f"unknown scenario {scenario!r}")
    if los not in ("LoS", "NLoS"):
        raise ValueError(f"los must be 'LoS' or 'NLoS', got {los!r}")


def _check_fc(fc):
    if not 0.5 <= fc <= 100.0:
        raise ValueError(f"fc {fc} GHz outside 0.5-100 GHz")


def _check_d(d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return d


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def inh_los(d, fc):
    d = _check_d(d)
    return _out(32.4 + 17.3 * np.log10(d) + 20.0 * math.log10(fc))


def inh_nlos(d, fc):
    d = _check_d(d)
    return _out(np.maximum(inh_los(d, fc), 17.3 + 38.3 * np.log10(d) + 24.9 * math.log10(fc)))


def breakpoint_distance(fc, h_bs=10.0, h_ut=1.5):
    return 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc * 1e9 / C_3GPP


def umi_los(d, fc, h_bs=10.0, h_ut=1.5):
    """Street-canyon LoS, dual slope in the 3D distance ``d``.

    The slope switches where the ground distance reaches the breakpoint, which
    makes the two branches meet exactly.
    """
    d = _check_d(d)
    dh = h_bs - h_ut
    d2 = np.sqrt(np.maximum(d**2 - dh**2, 0.0))
    dbp = breakpoint_distance(fc, h_bs, h_ut)
    pl1 = 32.4 + 21.0 * np.log10(d) + 20.0 * math.log10(fc)
    pl2 = 32.4 + 40.0 * np.log10(d) + 20.0 * math.log10(fc) - 9.5 * math.log10(dbp**2 + dh**2)
    return _out(np.where(d2 <= dbp, pl1, pl2))


def umi_nlos(d, fc, h_bs=10.0, h_ut=1.5):
    d = _check_d(d)
    pl = 22.4 + 35.3 * np.log10(d) + 21.3 * math.log10(fc) - 0.3 * (h_ut - 1.5)
    return _out(np.maximum(umi_los(d, fc, h_bs, h_ut), pl))


def pathloss_inh(q: BaselineQuery) -> float:
    if q.scenario != "InH":
        raise ValueError("pathloss_inh needs an InH query")
    return inh_los(q.d_m, q.fc_GHz) if q.los == "LoS" else inh_nlos(q.d_m, q.fc_GHz)


def pathloss_umi(q: BaselineQuery) -> float:
    if q.scenario != "UMi":
        raise ValueError("pathloss_umi needs a UMi query")
    f = umi_los if q.los == "LoS" else umi_nlos
    return f(q.d_m, q.fc_GHz, q.h_bs_m, q.h_ut_m)


def pathloss(q: BaselineQuery) -> float:
    return pathloss_inh(q) if q.scenario == "InH" else pathloss_umi(q)


# (mu slope, mu intercept, sigma slope, sigma intercept) in log10(1 + fc)
ASA_TABLE = {
    ("InH", "LoS"): (-0.19, 1.781, 0.12, 0.119),
    ("InH", "NLoS"): (-0.11, 1.863, 0.12, 0.059),
    ("UMi", "LoS"): (-0.08, 1.73, 0.014, 0.28),
    ("UMi", "NLoS"): (-0.08, 1.81, 0.05, 0.3),
}

# Shadow-fading sigmas (dB), exposed for reference only.
SHADOW_FADING_DB = {("InH", "LoS"): 3.0, ("InH", "NLoS"): 8.03, ("UMi", "LoS"): 4.0, ("UMi", "NLoS"): 7.82}


def asa_params(scenario: str, los: str, fc_GHz: float) -> tuple:
    """(mu, sigma) of log10(ASA / 1 deg)."""
    _check_scenario(scenario, los)
    _check_fc(fc_GHz)
    a, b, c, d = ASA_TABLE[(scenario, los)]
    x = math.log10(1.0 + fc_GHz)
    return a * x + b, c * x + d


def pl_curve(scenario: str, los: str, fc_GHz: float, d_min=1.0, d_max=100.0, n=50, h_bs=10.0, h_ut=1.5):
    """Log-spaced (d, PL) grid."""
    d = np.logspace(math.log10(d_min), math.log10(d_max), n)
    if scenario == "InH":
        pl = inh_los(d, fc_GHz) if los == "LoS" else inh_nlos(d, fc_GHz)
    else:
        pl = umi_los(d, fc_GHz, h_bs, h_ut) if los == "LoS" else umi_nlos(d, fc_GHz, h_bs, h_ut)
    return d, np.asarray(pl)


# Tabulated cells that disagree with the formulas above. Reports print them
# next to the formula value rather than silently replacing either one.
TABULATED_DISCREPANCIES = {("UMi", "NLoS", 27.0): {"sigma": 1.6827}}


def tabulated_discrepancy(scenario: str, los: str, fc_GHz: float) -> dict:
    for (s, l, f), cells in TABULATED_DISCREPANCIES.items():
        if s == scenario and l == los and abs(f - fc_GHz) < 1e-9:
            return dict(cells)
    return {}
