"""Channel observables computed from traced ChannelResults."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import em
from .tracer import CLASSES, ChannelResult

FLOOR_DBM = -200.0


def to_dB(p_lin, floor=FLOOR_DBM):
    """10 log10 with the no-power sentinel instead of -inf."""
    p = np.asarray(p_lin, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(p > 0, 10.0 * np.log10(np.where(p > 0, p, 1.0)), floor)
    return np.maximum(out, floor) if out.ndim else float(max(out, floor))


@dataclass(frozen=True)
class _Stack:
    """All paths of a result flattened to rows (one per path, or per tile)."""

    jones: np.ndarray  # (K, 2, 2)
    dep: np.ndarray  # (K, 3)
    arr: np.ndarray  # (K, 3)
    coherent: np.ndarray  # (K,) bool
    owner: np.ndarray  # (K,) path index


def _stack(result: ChannelResult) -> _Stack:
    J, dep, arr, coh, own = [], [], [], [], []
    for i, p in enumerate(result.paths):
        if p.tiles is None:
            J.append(p.jones[None])
            dep.append(p.aod_dir[None])
            arr.append(p.aoa_dir[None])
            k = 1
        else:
            J.append(p.tiles.jones)
            dep.append(p.tiles.aod_dirs)
            arr.append(p.tiles.aoa_dirs)
            k = len(p.tiles.jones)
        coh.append(np.full(k, p.coherent))
        own.append(np.full(k, i))
    if not J:
        z = np.zeros((0, 3))
        return _Stack(np.zeros((0, 2, 2), dtype=complex), z, z, np.zeros(0, bool), np.zeros(0, int))
    return _Stack(np.concatenate(J), np.concatenate(dep), np.concatenate(arr), np.concatenate(coh),
                  np.concatenate(own))


def _voltages(st: _Stack, tx_pattern, rx_pattern):
    """Complex received amplitude per row and unit transmit power."""
    p_tx = em.polarization_vector(tx_pattern.polarization)
    p_rx = em.polarization_vector(rx_pattern.polarization)
    g = em.antenna_gain(tx_pattern, st.dep) + em.antenna_gain(rx_pattern, st.arr)
    v = np.einsum("i,kij,j->k", p_rx, st.jones, p_tx)
    return v * 10.0 ** (np.asarray(g) / 20.0)


def path_powers(result: ChannelResult, tx_pattern=None, rx_pattern=None, ptx_dBm=None) -> np.ndarray:
    """Per-path received power in linear units (mW at ptx_dBm)."""
    tx_pattern = tx_pattern or em.isotropic()
    rx_pattern = rx_pattern or em.isotropic()
    ptx = result.ptx_dBm if ptx_dBm is None else ptx_dBm
    st = _stack(result)
    out = np.zeros(len(result.paths))
    np.add.at(out, st.owner, np.abs(_voltages(st, tx_pattern, rx_pattern)) ** 2)
    return 10.0 ** (ptx / 10.0) * out


def _total_dBm(st: _Stack, tx_pattern, rx_pattern, ptx, floor_dBm):
    v = _voltages(st, tx_pattern, rx_pattern)
    total = abs(v[st.coherent].sum()) ** 2 + float(np.sum(np.abs(v[~st.coherent]) ** 2))
    if total <= 0:
        return floor_dBm
    return max(ptx + 10.0 * math.log10(total), floor_dBm)


def received_power(result: ChannelResult, tx_pattern=None, rx_pattern=None, ptx_dBm=None,
                   floor_dBm: float = FLOOR_DBM) -> float:
    """Coherent sum over specular paths plus power sum over scattering tiles, in dBm."""
    ptx = result.ptx_dBm if ptx_dBm is None else ptx_dBm
    return _total_dBm(_stack(result), tx_pattern or em.isotropic(), rx_pattern or em.isotropic(), ptx, floor_dBm)


def path_loss(result: ChannelResult, ptx_dBm=None, floor_dBm: float = FLOOR_DBM) -> float:
    """PL with isotropic, co-polarized (V) unit-gain antennas at both ends."""
    ptx = result.ptx_dBm if ptx_dBm is None else ptx_dBm
    return ptx - received_power(result, em.isotropic(), em.isotropic(), ptx, floor_dBm)


@dataclass
class PowerAngleProfile:
    rx_id: str
    azimuth_deg: np.ndarray
    power_dBm: np.ndarray
    freq_GHz: float

    def __post_init__(self):
        az = np.asarray(self.azimuth_deg, dtype=float)
        if np.any(az < 0) or np.any(az >= 360) or len(np.unique(az)) != len(az):
            raise ValueError("azimuth grid must cover [0, 360) without duplicates")
        self.azimuth_deg = az
        self.power_dBm = np.asarray(self.power_dBm, dtype=float)


def synthesize_scan(result: ChannelResult, rx_horn=None, step_deg: float = 15.0, tx_pattern=None,
                    ptx_dBm=None, elevation_deg: float = 0.0, azimuths_deg=None) -> PowerAngleProfile:
    """Rotate the RX antenna in azimuth and record received power per pointing.

    Pointings are ``0, step, 2 step, ...`` unless ``azimuths_deg`` is given.
    """
    if azimuths_deg is None:
        if step_deg <= 0 or abs(360.0 / step_deg - round(360.0 / step_deg)) > 1e-9:
            raise ValueError("step must divide 360")
        az = np.arange(int(round(360.0 / step_deg))) * step_deg
    else:
        az = np.asarray(azimuths_deg, dtype=float)
    rx_horn = rx_horn or em.horn(result.freq_GHz)
    el = math.radians(elevation_deg)
    tx_pattern = tx_pattern or em.isotropic()
    ptx = result.ptx_dBm if ptx_dBm is None else ptx_dBm
    st = _stack(result)
    out = np.empty(len(az))
    for i, a in enumerate(np.radians(az)):
        b = (math.cos(el) * math.cos(a), math.cos(el) * math.sin(a), math.sin(el))
        out[i] = _total_dBm(st, tx_pattern, rx_horn.pointed(b), ptx, FLOOR_DBM)
    return PowerAngleProfile(result.rx_id, az, out, result.freq_GHz)


def _wrap180(x):
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


def _spread_at(theta, w, delta):
    """Circular spread for a batch of rotations ``delta`` (shape (K,))."""
    th = _wrap180(theta[None, :] + delta[:, None])
    mu = (th * w).sum(axis=1) / w.sum()
    dev = _wrap180(th - mu[:, None])
    return np.sqrt((dev**2 * w).sum(axis=1) / w.sum())


def angle_spread(azimuth_deg, weights, resolution_deg: float = 1.0) -> float:
    """Circular angle spread: minimum weighted deviation over rotations of the axis."""
    th = np.asarray(azimuth_deg, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if th.shape != w.shape:
        raise ValueError("angles and weights differ in length")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("angle spread needs at least one positive weight")
    delta = np.arange(0.0, 360.0, resolution_deg)
    return float(_spread_at(th, w, delta).min())


def pap_angle_spread(pap: PowerAngleProfile, floor_dBm: float = FLOOR_DBM) -> float:
    p = np.where(pap.power_dBm > floor_dBm, 10.0 ** (pap.power_dBm / 10.0), 0.0)
    return angle_spread(pap.azimuth_deg, p)


def ray_angle_spread(result: ChannelResult, tx_pattern=None, rx_pattern=None) -> float:
    """Spread of raw arrival azimuths weighted by per-path power."""
    w = path_powers(result, tx_pattern, rx_pattern)
    az = [p.aoa[0] for p in result.paths]
    return angle_spread(az, w)


@dataclass
class AngleSpreadSample:
    rx_id: str
    AS_deg: float
    los_class: str = "LoS"

    @property
    def AS_log(self) -> float:
        return math.log10(self.AS_deg) if self.AS_deg > 0 else -math.inf


def fit_gaussian(samples) -> tuple:
    """Sample mean and population (n-denominator) standard deviation."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    return float(x.mean()), float(x.std())


def empirical_cdf(samples) -> tuple:
    """Right-continuous ECDF as sorted distinct x with F(x) = #(s <= x) / n."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("no samples")
    ux = np.unique(x)
    F = np.searchsorted(x, ux, side="right") / x.size
    return ux, F


def ecdf_eval(samples, at):
    x = np.sort(np.asarray(samples, dtype=float))
    return np.searchsorted(x, np.asarray(at, dtype=float), side="right") / x.size


@dataclass
class MechanismBreakdown:
    rx_id: str
    fractions: dict
    orders: dict = field(default_factory=dict)
    total_dBm: float = FLOOR_DBM

    def row(self) -> list:
        return [self.fractions.get(c, 0.0) for c in CLASSES]


def mechanism_breakdown(result: ChannelResult, rx_pattern=None, tx_pattern=None,
                        exclude=()) -> MechanismBreakdown:
    """Share of received power per mechanism class, summing path powers.

    Orders: pure reflections and pure diffractions by order, i.e. the R1..R5
    and D1..D2 entries, collected separately for convenience.
    """
    pw = path_powers(result, tx_pattern, rx_pattern)
    sums: dict = {}
    for p, w in zip(result.paths, pw):
        if p.signature in exclude:
            continue
        sums[p.signature] = sums.get(p.signature, 0.0) + float(w)
    total = sum(sums.values())
    if total <= 0:
        return MechanismBreakdown(result.rx_id, {}, {}, FLOOR_DBM)
    fr = {k: v / total for k, v in sums.items()}
    orders = {k: v for k, v in fr.items() if k[0] in "RD" and k[1:].isdigit()}
    return MechanismBreakdown(result.rx_id, fr, orders, float(10.0 * math.log10(total)))


@dataclass
class ComparisonReport:
    scenario: str
    keys: list
    measured_dB: np.ndarray
    simulated_dB: np.ndarray
    unmatched: list = field(default_factory=list)

    @property
    def error_dB(self) -> np.ndarray:
        return self.simulated_dB - self.measured_dB

    @property
    def rmse_dB(self) -> float:
        return rmse(self.measured_dB, self.simulated_dB)


def rmse(measured, simulated) -> float:
    m = np.asarray(measured, dtype=float)
    s = np.asarray(simulated, dtype=float)
    if m.shape != s.shape or m.size == 0:
        raise ValueError("rmse needs equal-length non-empty inputs")
    return float(np.sqrt(np.mean((s - m) ** 2)))


def compare(measured: dict, simulated: dict, scenario: str = "") -> ComparisonReport:
    """Pair two key -> dB maps; keys present on one side only are listed as unmatched."""
    keys = sorted(set(measured) & set(simulated), key=lambda k: (str(k[0]), k[1:]) if isinstance(k, tuple) else str(k))
    unmatched = sorted(map(str, set(measured) ^ set(simulated)))
    m = np.array([measured[k] for k in keys], dtype=float)
    s = np.array([simulated[k] for k in keys], dtype=float)
    return ComparisonReport(scenario, keys, m, s, unmatched)


def los_class(scene, tx, rx, freq_GHz: float, threshold: float = 0.2, n_rings: int = 3, n_az: int = 8) -> str:
    """LoS, quasi-LoS (clear direct segment, first Fresnel zone obstructed by
    at least ``threshold``) or NLoS (direct segment crosses any facet,
    penetrable walls included)."""
    from .scene import intersect_segment

    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if intersect_segment(tx, rx, scene):
        return "NLoS"
    d = rx - tx
    D = np.linalg.norm(d)
    u = d / D
    a = np.cross(u, [0.0, 0.0, 1.0])
    if np.linalg.norm(a) < 1e-9:
        a = np.cross(u, [1.0, 0.0, 0.0])
    a /= np.linalg.norm(a)
    b = np.cross(u, a)
    lam = em.wavelength(freq_GHz)
    frac = np.linspace(0.1, 0.9, 9)[:, None, None]
    rr = np.sqrt(lam * frac * (1 - frac) * D) * (np.arange(1, n_rings + 1) / n_rings)[None, :, None]
    ang = (2 * np.pi * np.arange(n_az) / n_az)[None, None, :]
    off = rr[..., None] * (np.cos(ang)[..., None] * a + np.sin(ang)[..., None] * b)
    P = (tx + frac[..., None] * d + off).reshape(-1, 3)
    n = len(P)
    seg, _, _, _ = scene.index.crossings(np.vstack([np.broadcast_to(tx, P.shape), P]),
                                         np.vstack([P, np.broadcast_to(rx, P.shape)]))
    hit = np.zeros(n, dtype=bool)
    hit[seg % n] = True
    return "quasi-LoS" if hit.mean() >= threshold else "LoS"
