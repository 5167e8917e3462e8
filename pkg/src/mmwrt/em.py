"""Electromagnetic interaction kernels.

Time convention is exp(+j*omega*t); lossy media have Im(eps_r) <= 0.
Reflection coefficients follow the Fresnel form

    r_TE = (cos(th) - sqrt(eps - sin^2 th)) / (cos(th) + sqrt(eps - sin^2 th))
    r_TM = (eps cos(th) - sqrt(eps - sin^2 th)) / (eps cos(th) + sqrt(eps - sin^2 th))

so that a perfect conductor gives r_TE = -1 and r_TM = +1.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.special

C0 = 299_792_458.0


def wavelength(freq_GHz: float) -> float:
    return C0 / (freq_GHz * 1e9)


def wavenumber(freq_GHz: float) -> float:
    return 2.0 * math.pi / wavelength(freq_GHz)


# ---------------------------------------------------------------------------
# free space


def free_space_field(d, freq_GHz: float):
    """Complex free-space amplitude lambda/(4 pi d) * exp(-j k d)."""
    d = np.asarray(d, dtype=float)
    lam = wavelength(freq_GHz)
    return lam / (4.0 * np.pi * d) * np.exp(-1j * 2.0 * np.pi / lam * d)


def fspl_dB(d, freq_GHz: float):
    d = np.asarray(d, dtype=float)
    return 20.0 * np.log10(4.0 * np.pi * d / wavelength(freq_GHz))


# ---------------------------------------------------------------------------
# Fresnel / slab


def _sqrt_term(cos_t, eps):
    sin2 = 1.0 - cos_t * cos_t
    return np.sqrt(np.asarray(eps, dtype=complex) - sin2)


def fresnel(theta_i, eps_r, pol: str, pec: bool = False):
    """Air-to-halfspace Fresnel reflection and transmission coefficients.

    ``theta_i`` is measured from the surface normal. Returns ``(r, t)``.
    At grazing incidence the limits r_TE = -1, r_TM = +1 are returned.
    """
    theta_i = np.asarray(theta_i, dtype=float)
    pol = pol.upper()
    if pol not in ("TE", "TM"):
        raise ValueError(f"unknown polarization {pol!r}")
    shape = np.broadcast(theta_i, np.asarray(eps_r)).shape
    if pec:
        r = np.full(shape, -1.0 + 0j if pol == "TE" else 1.0 + 0j)
        return r, np.zeros(shape, dtype=complex)
    cos_t = np.cos(theta_i)
    eps = np.asarray(eps_r, dtype=complex)
    root = _sqrt_term(cos_t, eps)
    if pol == "TE":
        den = cos_t + root
        r = (cos_t - root) / den
        t = 2.0 * cos_t / den
    else:
        den = eps * cos_t + root
        r = (eps * cos_t - root) / den
        t = 2.0 * np.sqrt(eps) * cos_t / den
    grazing = np.broadcast_to(np.abs(cos_t) < 1e-15, shape)
    if np.any(grazing):
        r = np.where(grazing, -1.0 + 0j if pol == "TE" else 1.0 + 0j, r)
        t = np.where(grazing, 0j, t)
    return r, t


@dataclass(frozen=True)
class SlabResponse:
    R: complex
    T: complex


def slab_coefficients(theta_i, eps_r, thickness_m, freq_GHz, pol: str):
    """Vectorized slab reflection/transmission (R, T) arrays.

    Multiple internal reflections are summed in closed form. R is referenced
    to the front face; T is referenced to free-space propagation along the
    slab normal, so a vanishing slab gives T = 1.
    """
    theta_i = np.asarray(theta_i, dtype=float)
    r, _ = fresnel(theta_i, eps_r, pol)
    k0 = wavenumber(freq_GHz)
    cos_t = np.cos(theta_i)
    q = k0 * thickness_m * _sqrt_term(cos_t, eps_r)
    q0 = k0 * thickness_m * cos_t
    ph2 = np.exp(-2j * q)
    den = 1.0 - r * r * ph2
    R = r * (1.0 - ph2) / den
    T = (1.0 - r * r) * np.exp(-1j * (q - q0)) / den
    return R, T


def slab(theta_i: float, eps_r: complex, thickness_m: float, freq_GHz: float, pol: str) -> SlabResponse:
    if thickness_m <= 0:
        raise ValueError("slab thickness must be positive")
    R, T = slab_coefficients(theta_i, eps_r, thickness_m, freq_GHz, pol)
    return SlabResponse(complex(R), complex(T))


def material_coefficients(material, theta_i, freq_GHz: float):
    """(r_te, r_tm, t_te, t_tm) arrays for a scene Material."""
    theta_i = np.asarray(theta_i, dtype=float)
    if material.pec:
        r_te, _ = fresnel(theta_i, 1.0, "TE", pec=True)
        r_tm, _ = fresnel(theta_i, 1.0, "TM", pec=True)
        z = np.zeros_like(r_te)
        return r_te, r_tm, z, z
    r_te, t_te = slab_coefficients(theta_i, material.eps_r, material.thickness_m, freq_GHz, "TE")
    r_tm, t_tm = slab_coefficients(theta_i, material.eps_r, material.thickness_m, freq_GHz, "TM")
    return r_te, r_tm, t_te, t_tm


# ---------------------------------------------------------------------------
# UTD


def transition_function(x):
    """Kouyoumjian-Pathak transition function F(x), x >= 0."""
    x = np.asarray(x, dtype=float)
    sx = np.sqrt(np.maximum(x, 0.0))
    fm = scipy.special.modfresnelm(sx)[0]
    return 2j * sx * np.exp(1j * x) * fm


_SING_TOL = 1e-6


def _utd_term(n, beta, sigma, kL):
    """cot((pi + sigma*beta)/2n) * F(kL a^sigma(beta)) with the boundary limit."""
    N = np.round((beta + sigma * np.pi) / (2.0 * np.pi * n))
    eps = np.pi + sigma * (beta - 2.0 * np.pi * n * N)
    a = 2.0 * np.cos((2.0 * np.pi * n * N - beta) / 2.0) ** 2
    eps, a, kL_b, beta_b, n_b = np.broadcast_arrays(eps, a, kL, beta, n)
    out = np.empty(eps.shape, dtype=complex)
    near = np.abs(eps) < _SING_TOL
    far = ~near
    if np.any(far):
        arg = (np.pi + sigma * beta_b[far]) / (2.0 * n_b[far])
        out[far] = np.cos(arg) / np.sin(arg) * transition_function(kL_b[far] * a[far])
    if np.any(near):
        e = eps[near]
        sgn = np.where(e >= 0.0, 1.0, -1.0)
        k = kL_b[near]
        out[near] = n_b[near] * (np.sqrt(2.0 * np.pi * k) * sgn - 2.0 * k * e * np.exp(1j * np.pi / 4)) \
            * np.exp(1j * np.pi / 4)
    return out


def luebbers_angles(phi, phip, n):
    """Incidence angles (from face normals) used for the face reflection terms.

    The grazing angles (phi' + pi - phi)/2 and (pi + phi - phi')/2 reduce to the
    classical Luebbers choice on the reflection shadow boundaries and keep the
    coefficient symmetric under source/observer exchange.
    """
    psi0 = np.abs(np.sin((phip + np.pi - phi) / 2.0))
    psin = np.abs(np.sin((np.pi + phi - phip) / 2.0))
    return np.arccos(np.clip(psi0, 0.0, 1.0)), np.arccos(np.clip(psin, 0.0, 1.0))


def utd_coefficients(n, phi, phip, L, k, sin_beta0, r0=(-1.0, 1.0), rn=(-1.0, 1.0)):
    """UTD wedge diffraction coefficients (D_te, D_tm).

    ``n`` is the exterior wedge parameter (exterior angle n*pi), ``phi`` and
    ``phip`` the diffraction and incidence angles measured from face 0,
    ``L`` the distance parameter. ``r0``/``rn`` hold the (TE, TM) reflection
    coefficients of the two faces; the defaults are a perfect conductor.
    D_te applies to the field component parallel to the edge.
    """
    phi = np.asarray(phi, dtype=float)
    phip = np.asarray(phip, dtype=float)
    kL = k * np.asarray(L, dtype=float)
    pref = -np.exp(-1j * np.pi / 4) / (2.0 * n * np.sqrt(2.0 * np.pi * k) * np.asarray(sin_beta0))
    bm = phi - phip
    bp = phi + phip
    d1 = _utd_term(n, bm, +1, kL)
    d2 = _utd_term(n, bm, -1, kL)
    d3 = _utd_term(n, bp, +1, kL)
    d4 = _utd_term(n, bp, -1, kL)
    d_te = pref * (d1 + d2 + rn[0] * d3 + r0[0] * d4)
    d_tm = pref * (d1 + d2 + rn[1] * d3 + r0[1] * d4)
    return d_te, d_tm


def utd_diffraction(
    n: float,
    phi: float,
    phip: float,
    beta0: float,
    s_i: float,
    s_d: float,
    freq_GHz: float,
    face0=None,
    facen=None,
):
    """Diffraction coefficients plus spherical-wave spreading factor.

    Returns ``(D_te, D_tm, A)`` with A = sqrt(s_i / (s_d (s_i + s_d))).
    ``face0``/``facen`` are Materials (None means perfect conductor).
    """
    k = wavenumber(freq_GHz)
    sb = math.sin(beta0)
    L = s_i * s_d / (s_i + s_d) * sb * sb
    th0, thn = luebbers_angles(phi, phip, n)
    r0 = _face_coeffs(face0, th0, freq_GHz)
    rn = _face_coeffs(facen, thn, freq_GHz)
    d_te, d_tm = utd_coefficients(n, phi, phip, L, k, sb, r0, rn)
    A = math.sqrt(s_i / (s_d * (s_i + s_d)))
    return complex(d_te), complex(d_tm), A


def _face_coeffs(material, theta, freq_GHz):
    if material is None:
        return (-1.0, 1.0)
    r_te, r_tm, _, _ = material_coefficients(material, theta, freq_GHz)
    return (r_te, r_tm)


# ---------------------------------------------------------------------------
# Effective Roughness diffuse scattering

_GL_T, _GL_TW = np.polynomial.legendre.leggauss(64)
_GL_P, _GL_PW = np.polynomial.legendre.leggauss(128)


def hemisphere_quadrature():
    """Gauss-Legendre nodes over the hemisphere: (theta, dphi, weight)."""
    th = (_GL_T + 1.0) * np.pi / 4.0
    ph = (_GL_P + 1.0) * np.pi
    w = np.outer(_GL_TW * np.pi / 4.0 * np.sin(th), _GL_PW * np.pi)
    T, P = np.meshgrid(th, ph, indexing="ij")
    return T, P, w


def _directive_lobe(theta_i, theta_s, dphi, alpha):
    cos_psi = np.cos(theta_s) * np.cos(theta_i) + np.sin(theta_s) * np.sin(theta_i) * np.cos(dphi)
    return ((1.0 + cos_psi) / 2.0) ** alpha


@functools.lru_cache(maxsize=64)
def _directive_norm_table(alpha: int):
    grid = np.linspace(0.0, np.pi / 2, 181)
    T, P, w = hemisphere_quadrature()
    vals = np.array([np.sum(_directive_lobe(ti, T, P, alpha) * w) for ti in grid])
    return grid, vals


def directive_norm(theta_i, alpha: int):
    grid, vals = _directive_norm_table(int(alpha))
    return np.interp(theta_i, grid, vals)


def scatter_lobe(theta_i, theta_s, dphi=0.0, variant: str = "lambertian", alpha: int = 1):
    """Normalized scattering lobe (1/sr); integrates to 1 over the hemisphere.

    ``dphi`` is the azimuth of the scattered direction measured from the
    specular direction's azimuth.
    """
    theta_s = np.asarray(theta_s, dtype=float)
    if variant == "lambertian":
        return np.cos(theta_s) / np.pi
    if variant == "directive":
        return _directive_lobe(theta_i, theta_s, dphi, alpha) / directive_norm(theta_i, alpha)
    raise ValueError(f"unknown scattering variant {variant!r}")


def er_scatter(
    incident_power_density,
    theta_i,
    theta_s,
    tile_area: float,
    r_s,
    S: float,
    variant: str = "lambertian",
    alpha: int = 1,
    dphi=0.0,
):
    """Power density scattered by one surface tile at distance ``r_s``.

    S^2 of the power intercepted by the tile (area * cos(theta_i)) is
    re-radiated with the selected lobe.
    """
    if not 0.0 <= S <= 1.0:
        raise ValueError("scattering coefficient must lie in [0, 1]")
    lobe = scatter_lobe(theta_i, theta_s, dphi, variant, alpha)
    return S * S * np.asarray(incident_power_density) * tile_area * np.cos(theta_i) * lobe / np.asarray(r_s) ** 2


# ---------------------------------------------------------------------------
# antennas

_Z = np.array([0.0, 0.0, 1.0])


def _normalize(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n


def polarization_basis(d):
    """Unit (v, h) vectors transverse to propagation direction(s) ``d``.

    h is horizontal (z x d); v = d x h points upward. v is unchanged and h
    flips sign when d is reversed.
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    h = np.cross(_Z, d)
    hn = np.linalg.norm(h, axis=-1)
    bad = hn < 1e-12
    if np.any(bad):
        h[bad] = np.cross(np.array([1.0, 0.0, 0.0]), d[bad])
        hn[bad] = np.linalg.norm(h[bad], axis=-1)
    h = h / hn[:, None]
    v = np.cross(d, h)
    return v, h


_POL = {
    "V": np.array([1.0, 0.0], dtype=complex),
    "H": np.array([0.0, 1.0], dtype=complex),
    "RHCP": np.array([1.0, -1j], dtype=complex) / math.sqrt(2.0),
    "LHCP": np.array([1.0, 1j], dtype=complex) / math.sqrt(2.0),
}


def polarization_vector(pol: str) -> np.ndarray:
    """Jones vector (v, h) of an antenna polarization in its own transmit basis."""
    try:
        return _POL[pol.upper()]
    except KeyError:
        raise ValueError(f"unknown polarization {pol!r}") from None


@dataclass(frozen=True)
class AntennaPattern:
    kind: str = "isotropic"
    boresight: tuple = (1.0, 0.0, 0.0)
    max_gain_dBi: float = 0.0
    hpbw_e_deg: float = 360.0
    hpbw_h_deg: float = 360.0
    front_to_back_dB: float = 25.0
    polarization: str = "V"
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("isotropic", "gaussian_horn", "omni_vertical", "sector_array"):
            raise ValueError(f"unknown antenna kind {self.kind!r}")
        if self.hpbw_e_deg <= 0 or self.hpbw_h_deg <= 0:
            raise ValueError("beamwidths must be positive")
        polarization_vector(self.polarization)
        b = np.asarray(self.boresight, dtype=float)
        object.__setattr__(self, "boresight", tuple(float(x) for x in b / np.linalg.norm(b)))

    def pointed(self, boresight) -> AntennaPattern:
        return _replace(self, boresight=tuple(boresight))

    def gain_dBi(self, dirs):
        return antenna_gain(self, dirs)


def _replace(obj, **kw):
    import dataclasses

    return dataclasses.replace(obj, **kw)


def _frame(boresight):
    b = _normalize(boresight)
    up = _Z - np.dot(_Z, b) * b
    if np.linalg.norm(up) < 1e-9:
        up = np.array([1.0, 0.0, 0.0]) - b[0] * b
    up = up / np.linalg.norm(up)
    side = np.cross(up, b)
    return b, up, side


def antenna_gain(pattern: AntennaPattern, dirs):
    """Gain in dBi toward unit direction(s) ``dirs`` (shape (3,) or (N, 3))."""
    d = np.asarray(dirs, dtype=float)
    scalar = d.ndim == 1
    d = np.atleast_2d(d)
    if pattern.kind == "isotropic":
        g = np.full(len(d), float(pattern.max_gain_dBi))
    elif pattern.kind == "omni_vertical":
        axis = np.asarray(pattern.boresight)
        # boresight is the dipole axis here
        cos_el = np.sqrt(np.clip(1.0 - (d @ axis) ** 2, 0.0, 1.0))
        floor = pattern.max_gain_dBi - pattern.front_to_back_dB
        with np.errstate(divide="ignore"):
            g = np.maximum(pattern.max_gain_dBi + 20.0 * np.log10(cos_el), floor)
    else:
        b, up, side = _frame(pattern.boresight)
        x = d @ b
        th_v = np.degrees(np.arctan2(d @ up, x))
        th_s = np.degrees(np.arctan2(d @ side, x))
        if pattern.polarization.upper() == "H":
            th_e, th_h = th_s, th_v
        else:
            th_e, th_h = th_v, th_s
        if pattern.kind == "gaussian_horn":
            att = 12.0 * ((th_e / pattern.hpbw_e_deg) ** 2 + (th_h / pattern.hpbw_h_deg) ** 2)
            g = pattern.max_gain_dBi - np.minimum(att, pattern.front_to_back_dB)
        else:
            a_h = np.minimum(12.0 * (th_h / pattern.hpbw_h_deg) ** 2, pattern.front_to_back_dB)
            a_v = np.minimum(12.0 * (th_e / pattern.hpbw_e_deg) ** 2, pattern.front_to_back_dB)
            g = pattern.max_gain_dBi - np.minimum(a_h + a_v, pattern.front_to_back_dB)
    return float(g[0]) if scalar else g


# Measured horn data (gain, E-plane and H-plane HPBW) of the directional setup.
HORN_TABLE = {27: (20.5, 14.0, 17.5), 38: (21.5, 11.5, 13.0)}


def horn(freq_GHz: float, boresight=(1.0, 0.0, 0.0), polarization: str = "V") -> AntennaPattern:
    key = min(HORN_TABLE, key=lambda f: abs(f - freq_GHz))
    g, e, h = HORN_TABLE[key]
    return AntennaPattern("gaussian_horn", tuple(boresight), g, e, h, 25.0, polarization, f"horn@{key}")


def isotropic(polarization: str = "V") -> AntennaPattern:
    return AntennaPattern("isotropic", polarization=polarization, label="isotropic")


def sector_array(boresight=(1.0, 0.0, 0.0), polarization: str = "RHCP") -> AntennaPattern:
    # 12 dBi, 60 deg horizontal HPBW; the vertical HPBW is assumed, 40 deg keeps
    # the directivity budget consistent with 12 dBi
    return AntennaPattern("sector_array", tuple(boresight), 12.0, 40.0, 60.0, 25.0, polarization, "sector_array")


def omni_vertical(gain_dBi: float = 3.0) -> AntennaPattern:
    return AntennaPattern("omni_vertical", (0.0, 0.0, 1.0), gain_dBi, 78.0, 360.0, 30.0, "V", "omni_vertical")


PRESETS = {
    "isotropic": lambda b: isotropic(),
    "horn@27": lambda b: horn(27, b),
    "horn@38": lambda b: horn(38, b),
    "sector_array": lambda b: sector_array(b),
    "omni_v3": lambda b: omni_vertical(3.0),
}


def antenna_from_spec(spec, default_boresight=(1.0, 0.0, 0.0)) -> AntennaPattern:
    """Build a pattern from a preset name ("horn@27") or a dict of fields."""
    if spec is None:
        return isotropic()
    if isinstance(spec, AntennaPattern):
        return spec
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ValueError(f"unknown antenna preset {spec!r}")
        return PRESETS[spec](tuple(default_boresight))
    spec = dict(spec)
    preset = spec.pop("preset", None)
    bore = tuple(spec.pop("boresight", default_boresight))
    if preset is not None:
        base = antenna_from_spec(preset, bore)
        return _replace(base, **spec) if spec else base
    return AntennaPattern(boresight=bore, **spec)


# ---------------------------------------------------------------------------
# permittivity fitting


@dataclass
class PermittivityFit:
    eps_r: complex
    residual_rms_dB: float
    converged: bool
    ambiguous: bool
    restarts: list = field(default_factory=list)


def slab_power_dB(freqs_GHz, eps_r, thickness_m, theta_i, pol, kinds):
    """Model |R|^2 or |T|^2 in dB per sample; ``kinds`` holds 'R'/'T' flags."""
    freqs = np.asarray(freqs_GHz, dtype=float)
    R, T = slab_coefficients(theta_i, eps_r, thickness_m, freqs, pol)
    isR = np.array([k == "R" for k in kinds], dtype=bool)
    v = np.where(isR, np.abs(R) ** 2, np.abs(T) ** 2)
    return 10.0 * np.log10(np.maximum(v, 1e-30))


def _grid_seeds(freqs, meas, kinds, thickness_m, theta_i, pol, n_seeds):
    """Starting points from distinct basins of the loss-profiled cost.

    Slab responses are periodic in sqrt(eps) * thickness * f, so the cost has
    many local minima along Re(eps). The real index n' is gridded finely
    enough to resolve them; for every n' the loss n'' is optimized by a
    golden-section search, and the lowest local minima become seeds.
    """
    k_max = wavenumber(float(np.max(freqs)))
    n_re = np.arange(1.0, 4.5, 0.25 / (2.0 * k_max * thickness_m))
    isR = np.array([k == "R" for k in kinds], dtype=bool)

    def cost(n_im):
        N = n_re - 1j * n_im
        eps = N * N
        c = np.zeros(len(n_re))
        for f, m, r in zip(freqs, meas, isR):
            R, T = slab_coefficients(theta_i, eps, thickness_m, f, pol)
            v = np.abs(R if r else T) ** 2
            c += (10.0 * np.log10(np.maximum(v, 1e-30)) - m) ** 2
        return c

    # golden-section search in n'' for every n' at once
    g = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.zeros(len(n_re))
    hi = np.minimum(20.0 / (2.0 * wavenumber(float(np.mean(freqs))) * thickness_m), 0.5 * n_re)
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = cost(c), cost(d)
    for _ in range(40):
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c_new, d_new = hi - g * (hi - lo), lo + g * (hi - lo)
        f_new = cost(np.where(left, c_new, d_new))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = np.where(left, c_new, d), np.where(left, c, d_new)
    n_im = (lo + hi) / 2.0
    prof = cost(n_im)
    interior = np.r_[True, prof[1:] <= prof[:-1]] & np.r_[prof[:-1] <= prof[1:], True]
    seeds = []
    for i in np.argsort(np.where(interior, prof, np.inf), kind="stable"):
        if not interior[i]:
            break
        e = (n_re[i] - 1j * n_im[i]) ** 2
        if all(abs(e.real - q.real) > 0.05 * q.real for q in seeds):
            seeds.append(e)
        if len(seeds) == n_seeds:
            break
    return seeds


def fit_permittivity(
    samples,
    thickness_m: float,
    theta_i: float = 0.0,
    pol: str = "TE",
    initial_guess: complex = 4.0 - 0.1j,
    restarts: int = 3,
    max_iter: int = 2000,
) -> PermittivityFit:
    """Least-squares slab permittivity from (freq_GHz, value_dB, kind) samples.

    Nelder-Mead runs from the initial guess and from ``restarts`` starting
    points taken from distinct basins of a coarse grid; the best residual
    wins. The fit is flagged ambiguous when converged restarts with
    comparable residuals disagree by more than 5% in Re(eps_r).
    """
    samples = list(samples)
    if len(samples) < 8:
        raise ValueError(f"need at least 8 frequency samples, got {len(samples)}")
    if thickness_m <= 0:
        raise ValueError("thickness must be positive")
    freqs = np.array([float(s[0]) for s in samples])
    meas = np.array([float(s[1]) for s in samples])
    kinds = [str(s[2]).upper() if len(s) > 2 else "T" for s in samples]
    for k in kinds:
        if k not in ("R", "T"):
            raise ValueError(f"sample kind must be R or T, got {k!r}")

    def unpack(x):
        return complex(max(x[0], 1.0), min(x[1], 0.0))

    def cost(x):
        pen = max(0.0, 1.0 - x[0]) ** 2 + max(0.0, x[1]) ** 2
        model = slab_power_dB(freqs, unpack(x), thickness_m, theta_i, pol, kinds)
        return float(np.mean((model - meas) ** 2)) + 1e3 * pen

    g = complex(initial_guess)
    starts = [(g.real, g.imag)]
    starts += [(e.real, e.imag) for e in _grid_seeds(freqs, meas, kinds, thickness_m, theta_i, pol, restarts)]
    runs = []
    for x0 in starts:
        res = scipy.optimize.minimize(
            cost, np.array(x0), method="Nelder-Mead",
            options={"maxiter": max_iter, "xatol": 1e-7, "fatol": 1e-12},
        )
        runs.append((float(res.fun), unpack(res.x), bool(res.success)))
    runs.sort(key=lambda r: r[0])
    best_cost, best_eps, ok = runs[0]
    # restarts landing on a comparable minimum but a different Re(eps) signal
    # a plateau in the cost surface
    close = [r for r in runs if r[2] and r[0] <= 1.5 * best_cost + 1e-6]
    ambiguous = any(abs(r[1].real - best_eps.real) > 0.05 * best_eps.real for r in close)
    return PermittivityFit(
        eps_r=best_eps,
        residual_rms_dB=math.sqrt(max(best_cost, 0.0)),
        converged=ok,
        ambiguous=ambiguous,
        restarts=[(r[1], math.sqrt(max(r[0], 0.0))) for r in runs],
    )
