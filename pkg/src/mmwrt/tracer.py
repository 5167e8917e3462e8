"""Image-method multipath search with reflection, transmission, UTD
diffraction and Effective-Roughness scattering.

Tracing runs in two stages. :func:`find_geometry` enumerates and validates
interaction chains; it does not depend on frequency. :func:`evaluate` turns
the geometry into complex fields at one frequency. :func:`trace` chains both
and :func:`sweep` reuses geometry across frequencies.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import em
from .scene import GEOM_TOL, Scene

log = logging.getLogger(__name__)

C0 = em.C0
TOL = GEOM_TOL


@dataclass(frozen=True)
class TraceConfig:
    max_interactions: int = 7
    max_reflections: int = 5
    max_diffractions: int = 2
    max_transmissions: int = 2
    max_scatterings: int = 1
    max_mixed_refl_diff_events: int = 3
    max_refl_combined_with_scatter: int = 1
    scatter_tile_size_m: float = 0.5
    min_path_power_dBm: float = -150.0
    mode: str = "full"
    ptx_dBm: float = 0.0
    tx_polarization: str = "V"
    max_candidates: int = 3_000_000

    def __post_init__(self):
        if self.mode not in ("full", "simplified"):
            raise ValueError(f"unknown trace mode {self.mode!r}")
        caps = (self.max_reflections, self.max_diffractions, self.max_transmissions, self.max_scatterings)
        if min(caps) < 0 or self.max_interactions < 0:
            raise ValueError("interaction caps must be non-negative")
        if self.max_scatterings > 1:
            raise ValueError("at most one scattering event per ray is supported")
        if self.scatter_tile_size_m <= 0:
            raise ValueError("scatter tile size must be positive")

    def effective(self) -> TraceConfig:
        """Caps clipped to max_interactions; simplified mode keeps LoS, walls and one bounce."""
        c = self
        if c.mode == "simplified":
            c = dataclasses.replace(c, max_reflections=min(c.max_reflections, 1), max_diffractions=0, max_scatterings=0)
        m = c.max_interactions
        return dataclasses.replace(
            c,
            max_reflections=min(c.max_reflections, m),
            max_diffractions=min(c.max_diffractions, m),
            max_transmissions=min(c.max_transmissions, m),
            max_scatterings=min(c.max_scatterings, m),
            max_mixed_refl_diff_events=min(c.max_mixed_refl_diff_events, m),
        )


@dataclass(frozen=True)
class Interaction:
    kind: str  # "R", "T", "D" or "S"
    point: tuple
    ref: int  # facet id (R, T, S) or edge id (D)
    angle_deg: float  # incidence from the facet normal; for D the edge-to-ray angle


@dataclass
class TileBundle:
    """Per-tile contributions of one scattering path, summed in power."""

    points: np.ndarray  # (K, 3) tile centers
    aod_dirs: np.ndarray  # (K, 3)
    aoa_dirs: np.ndarray  # (K, 3) unit vectors from RX toward arrival
    jones: np.ndarray  # (K, 2, 2)


@dataclass
class RayPath:
    interactions: tuple
    jones: np.ndarray  # (2, 2): RX (v, h) response to TX (v, h) excitation
    field: np.ndarray  # (2,) complex field for the traced TX polarization
    length_m: float
    aod_dir: np.ndarray
    aoa_dir: np.ndarray
    signature: str
    power_dBm_iso: float
    coherent: bool = True
    tiles: TileBundle | None = None

    @property
    def delay_s(self) -> float:
        return self.length_m / C0

    @property
    def aod(self) -> tuple:
        return direction_to_angles(self.aod_dir)

    @property
    def aoa(self) -> tuple:
        return direction_to_angles(self.aoa_dir)

    @property
    def kinds(self) -> tuple:
        return tuple(i.kind for i in self.interactions)

    @property
    def chain(self) -> tuple:
        return tuple((i.kind, i.ref) for i in self.interactions)


@dataclass
class ChannelResult:
    tx_id: str
    rx_id: str
    tx: tuple
    rx: tuple
    freq_GHz: float
    paths: list
    flags: dict = field(default_factory=dict)
    ptx_dBm: float = 0.0
    tx_polarization: str = "V"
    error: str | None = None

    @property
    def truncated(self) -> bool:
        return bool(self.flags.get("candidates_capped") or self.flags.get("cutoff_dropped")
                    or self.flags.get("degenerate_dropped"))


def direction_to_angles(d) -> tuple:
    d = np.asarray(d, dtype=float)
    return (
        float(np.degrees(math.atan2(d[1], d[0]))),
        float(np.degrees(math.asin(max(-1.0, min(1.0, d[2]))))),
    )


# ---------------------------------------------------------------------------
# mechanism classes

CLASSES = ("L", "R1", "R2", "R3", "R4", "R5", "D1", "D2", "RD", "S", "RS", "T", "TR", "TD", "TS")


def signature_of(kinds) -> str:
    """Canonical mechanism class of an interaction-kind sequence."""
    kinds = tuple(kinds)
    nr = kinds.count("R")
    nd = kinds.count("D")
    ns = kinds.count("S")
    nt = kinds.count("T")
    if not kinds:
        return "L"
    if nt:
        if ns:
            return "TS"
        if nd:
            return "TD"
        if nr:
            return "TR"
        return "T"
    if ns:
        return "RS" if nr else "S"
    if nd:
        return "RD" if nr else f"D{nd}"
    return f"R{nr}"


def mechanism_signature(path: RayPath) -> str:
    return signature_of(path.kinds)


# ---------------------------------------------------------------------------
# geometry stage


@dataclass
class Batch:
    """Chains sharing one interaction-kind sequence.

    refs (B, K) holds facet/edge ids, pts (B, K + 2, 3) the polylines from TX
    to RX. Scattering batches carry tile areas and a bundle key per row; rows
    with equal keys are summed in power.
    """

    kinds: tuple
    refs: np.ndarray
    pts: np.ndarray
    areas: np.ndarray | None = None
    keys: list | None = None


@dataclass
class Geometry:
    tx: np.ndarray
    rx: np.ndarray
    batches: list
    flags: dict


class _Tree:
    """Reflection image tree of one source point, level by level."""

    def __init__(self, seqs, imgs):
        self.seqs = seqs  # list per level: (M, k) int
        self.imgs = imgs  # list per level: (M, k, 3)

    def level(self, k, src):
        if k == 0:
            return np.zeros((1, 0), dtype=int), np.zeros((1, 0, 3)) + 0.0, src[None]
        if k - 1 >= len(self.seqs):
            return np.zeros((0, k), dtype=int), np.zeros((0, k, 3)), np.zeros((0, 3))
        s, im = self.seqs[k - 1], self.imgs[k - 1]
        return s, im, im[:, -1]


class _Ctx:
    def __init__(self, scene: Scene, cfg: TraceConfig):
        self.scene = scene
        self.cfg = cfg
        self.idx = scene.index
        self.flags = {"candidates_capped": False, "cutoff_dropped": 0}
        idx = self.idx
        F = idx.F
        self.F = F
        # vertex sides of every facet relative to every facet plane
        if F:
            self.vside = np.einsum("jvc,ic->ijv", idx.verts, idx.normals) - idx.offsets[:, None, None]
        else:
            self.vside = np.zeros((0, 0, 0))
        self.convex = np.array([_is_convex(f.poly2d) for f in scene.facets], dtype=bool)
        self.centroids = np.array([f.vertices.mean(axis=0) for f in scene.facets]).reshape(F, 3)
        edges = scene.edges
        self.E = len(edges)
        if edges:
            self.e_p0 = np.array([e.p0 for e in edges], dtype=float)
            self.e_dir = np.array([e.direction for e in edges])
            self.e_len = np.array([e.length for e in edges])
            self.e_t0 = np.array([e.face0_tangent for e in edges], dtype=float)
            self.e_n0 = np.array([e.face0_normal for e in edges], dtype=float)
            self.e_n = np.array([e.n for e in edges])
            ex = np.full((len(edges), 2), -1, dtype=int)
            for i, e in enumerate(edges):
                ex[i, : len(e.facets)] = e.facets
            self.e_facets = ex
        self.diff_edges = np.array(scene.diffracting_edges, dtype=int)
        self.budget = 0

    # -- image tree
    def tree(self, src, max_order) -> _Tree:
        idx = self.idx
        seqs, imgs = [], []
        if max_order <= 0 or self.F == 0:
            return _Tree(seqs, imgs)
        s = idx.side(src[None])[0]
        ok = np.where(idx.two_sided, np.abs(s) > TOL, s > TOL)
        f = np.nonzero(ok)[0]
        seq = f[:, None]
        img = (src[None] - 2.0 * s[f][:, None] * idx.normals[f])[:, None, :]
        seqs.append(seq)
        imgs.append(img)
        for _ in range(2, max_order + 1):
            seq, img = self._grow(seqs[-1], imgs[-1])
            if len(seq) == 0:
                break
            seqs.append(seq)
            imgs.append(img)
        return _Tree(seqs, imgs)

    def _grow(self, seq, imgs):
        idx = self.idx
        out_s, out_i = [], []
        chunk = max(1, 200_000 // max(1, self.F * idx.verts.shape[1] ** 2))
        total = 0
        for c0 in range(0, len(seq), chunk):
            sq = seq[c0 : c0 + chunk]
            im = imgs[c0 : c0 + chunk]
            par = sq[:, -1]
            apex = im[:, -1]
            sj = apex @ idx.normals.T - idx.offsets
            mask = np.where(idx.two_sided[None], np.abs(sj) > TOL, sj > TOL)
            sgn = -np.sign(idx.side(apex, par))
            mask &= np.any(self.vside[par] * sgn[:, None, None] > TOL, axis=2)
            mask &= ~self._beam_excludes(apex, par)
            mask[np.arange(len(sq)), par] = False
            pi, fj = np.nonzero(mask)
            if len(pi) == 0:
                continue
            total += len(pi)
            new_img = apex[pi] - 2.0 * sj[pi, fj][:, None] * idx.normals[fj]
            out_s.append(np.concatenate([sq[pi], fj[:, None]], axis=1))
            out_i.append(np.concatenate([im[pi], new_img[:, None]], axis=1))
            self.budget += len(pi)
            if self.budget > self.cfg.max_candidates:
                self.flags["candidates_capped"] = True
                log.warning("image-tree candidate cap reached; result truncated")
                break
        if not out_s:
            k = seq.shape[1] + 1
            return np.zeros((0, k), dtype=int), np.zeros((0, k, 3))
        return np.concatenate(out_s), np.concatenate(out_i)

    def _beam_excludes(self, apex, par):
        """True where facet j lies entirely outside the beam from apex through par."""
        idx = self.idx
        P = idx.verts[par]  # (M, V, 3)
        Q = np.roll(P, -1, axis=1)
        m = np.cross(P - apex[:, None], Q - apex[:, None])
        nm = np.linalg.norm(m, axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            m = np.where(nm > 1e-12, m / nm, 0.0)
        c = self.centroids[par] - apex
        orient = np.sign(np.einsum("mvc,mc->mv", m, c))
        m = m * orient[:, :, None]
        m[~self.convex[par]] = 0.0
        off = np.einsum("mvc,mc->mv", m, apex)
        val = np.einsum("mec,jvc->mejv", m, idx.verts) - off[:, :, None, None]
        return np.any(np.all(val < -TOL, axis=3), axis=1)

    # -- backtracking through image chains
    def backtrack(self, dest, seq, imgs):
        """Reflection points from ``dest`` back toward the source of an image chain."""
        idx = self.idx
        M, k = seq.shape
        X = np.zeros((M, k, 3))
        ok = np.ones(M, dtype=bool)
        P = dest
        for lvl in range(k - 1, -1, -1):
            f = seq[:, lvl]
            I = imgs[:, lvl]
            sP = idx.side(P, f)
            sI = idx.side(I, f)
            ok &= (sP * sI < 0) & (np.abs(sP) > TOL)
            with np.errstate(invalid="ignore", divide="ignore"):
                t = sP / (sP - sI)
            t = np.where(ok, t, 0.0)
            Xl = P + t[:, None] * (I - P)
            ok &= idx.interior(f, Xl)
            X[:, lvl] = Xl
            P = Xl
        return X, ok

    # -- validation
    def validate(self, pts, excl):
        """Check polylines for opaque blockage and collect penetrable crossings.

        pts (M, n, 3), excl (M, n - 1, 4) facet ids excluded per segment.
        Returns ok mask and the sparse hits (path, segment, facet, t, point).
        """
        M, n, _ = pts.shape
        A = pts[:, :-1].reshape(-1, 3)
        B = pts[:, 1:].reshape(-1, 3)
        ex = excl.reshape(-1, excl.shape[-1])
        sis, fis, ts, Ps = [], [], [], []
        step = 20_000
        for c0 in range(0, len(A), step):
            si, fi, t, P = self.idx.crossings(A[c0 : c0 + step], B[c0 : c0 + step], ex[c0 : c0 + step])
            sis.append(si + c0)
            fis.append(fi)
            ts.append(t)
            Ps.append(P)
        si = np.concatenate(sis) if sis else np.zeros(0, dtype=int)
        fi = np.concatenate(fis) if fis else np.zeros(0, dtype=int)
        t = np.concatenate(ts) if ts else np.zeros(0)
        P = np.concatenate(Ps) if Ps else np.zeros((0, 3))
        path = si // (n - 1)
        seg = si % (n - 1)
        ok = np.ones(M, dtype=bool)
        opaque = self.idx.opaque[fi] if len(fi) else np.zeros(0, dtype=bool)
        ok[path[opaque]] = False
        ntr = np.bincount(path, minlength=M)
        return ok, ntr, (path, seg, fi, t, P)

    def emit(self, kinds, refs, pts, excl, n_fixed, areas=None, keys=None):
        """Validate chains and append batches with transmissions inserted."""
        cfg = self.cfg
        if len(pts) == 0:
            return []
        ok, ntr, hits = self.validate(pts, excl)
        ok &= ntr <= cfg.max_transmissions
        ok &= ntr + n_fixed <= cfg.max_interactions
        good = np.nonzero(ok)[0]
        if len(good) == 0:
            return []
        path, seg, fi, t, P = hits
        sel = ok[path]
        path, seg, fi, t, P = path[sel], seg[sel], fi[sel], t[sel], P[sel]
        plain = good[ntr[good] == 0]
        out = []
        if len(plain):
            out.append(
                Batch(
                    tuple(kinds),
                    refs[plain],
                    pts[plain],
                    None if areas is None else areas[plain],
                    None if keys is None else [keys[i] for i in plain],
                )
            )
        withT = good[ntr[good] > 0]
        if len(withT) == 0:
            return out
        order = np.lexsort((t, seg, path))
        path, seg, fi, P = path[order], seg[order], fi[order], P[order]
        keep = np.isin(path, withT)
        path, seg, fi, P = path[keep], seg[keep], fi[keep], P[keep]
        starts = np.searchsorted(path, withT)
        nseg = len(kinds) + 1
        cnt = np.zeros((len(withT), nseg), dtype=int)
        np.add.at(cnt, (np.searchsorted(withT, path), seg), 1)
        # rows with the same transmissions-per-segment pattern share a batch
        patterns, inv = np.unique(cnt, axis=0, return_inverse=True)
        inv = inv.ravel()
        for pi, pat in enumerate(patterns):
            sub = np.nonzero(inv == pi)[0]
            rows = withT[sub]
            hidx = starts[sub][:, None] + np.arange(int(pat.sum()))[None, :]
            new_k, cols_r, cols_p = [], [], [pts[rows, 0]]
            h = 0
            for sgi in range(nseg):
                for _ in range(pat[sgi]):
                    new_k.append("T")
                    cols_r.append(fi[hidx[:, h]])
                    cols_p.append(P[hidx[:, h]])
                    h += 1
                if sgi < len(kinds):
                    new_k.append(kinds[sgi])
                    cols_r.append(refs[rows, sgi])
                    cols_p.append(pts[rows, sgi + 1])
            cols_p.append(pts[rows, -1])
            new_keys = None
            if keys is not None:
                tf = fi[hidx].tolist()
                new_keys = [keys[r] + (tuple(tr),) for r, tr in zip(rows.tolist(), tf)]
            out.append(
                Batch(
                    tuple(new_k),
                    np.stack(cols_r, axis=1).astype(int),
                    np.stack(cols_p, axis=1),
                    None if areas is None else areas[rows],
                    new_keys,
                )
            )
        return out

    # -- wedge angle helpers
    def wedge_angles(self, e, Q, toward):
        """Angle (radians, [0, 2pi)) of direction Q -> toward around edge e."""
        w = toward - Q
        a = np.arctan2(np.einsum("ij,ij->i", w, self.e_n0[e]), np.einsum("ij,ij->i", w, self.e_t0[e]))
        return np.mod(a, 2.0 * np.pi)

    def in_wedge(self, e, Q, toward):
        phi = self.wedge_angles(e, Q, toward)
        lim = self.e_n[e] * np.pi
        return (phi > 1e-9) & (phi < lim - 1e-9)

    def keller_param(self, e, S, O):
        p0, u = self.e_p0[e], self.e_dir[e]
        ts = np.einsum("ij,ij->i", S - p0, u)
        to = np.einsum("ij,ij->i", O - p0, u)
        rs = np.linalg.norm(S - p0 - ts[:, None] * u, axis=1)
        ro = np.linalg.norm(O - p0 - to[:, None] * u, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            t = (ts * ro + to * rs) / (rs + ro)
        return np.nan_to_num(t, nan=-1.0), rs, ro


def _is_convex(p2) -> bool:
    n = len(p2)
    sgn = 0
    for i in range(n):
        a, b, c = p2[i], p2[(i + 1) % n], p2[(i + 2) % n]
        cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if abs(cr) < 1e-12:
            continue
        s = 1 if cr > 0 else -1
        if sgn == 0:
            sgn = s
        elif s != sgn:
            return False
    return True


def _excl_for(n_seg, M):
    return np.full((M, n_seg, 4), -1, dtype=int)


def _set_excl(excl, col_ids, pos):
    """Exclude facets ``col_ids`` (M, 2) on both segments touching interior point ``pos``."""
    excl[:, pos - 1, 2:4] = col_ids
    excl[:, pos, 0:2] = col_ids


def _pair(ids):
    ids = np.asarray(ids, dtype=int)
    return np.stack([ids, np.full_like(ids, -1)], axis=1)


def find_geometry(scene: Scene, tx, rx, cfg: TraceConfig | None = None) -> Geometry:
    """Enumerate every valid interaction chain between ``tx`` and ``rx``."""
    cfg = (cfg or TraceConfig()).effective()
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if np.linalg.norm(tx - rx) < TOL:
        raise ValueError("tx and rx coincide")
    scene.check_point(tx, "tx")
    scene.check_point(rx, "rx")
    ctx = _Ctx(scene, cfg)
    batches: list = []

    # line of sight (possibly through walls)
    pts = np.stack([tx, rx])[None]
    batches += ctx.emit((), np.zeros((1, 0), dtype=int), pts, _excl_for(1, 1), 0)

    n_pre = max(
        cfg.max_reflections,
        min(cfg.max_mixed_refl_diff_events - 1, cfg.max_reflections) if cfg.max_diffractions else 0,
        min(cfg.max_refl_combined_with_scatter, cfg.max_reflections) if cfg.max_scatterings else 0,
    )
    n_post = max(
        min(cfg.max_mixed_refl_diff_events - 1, cfg.max_reflections) if cfg.max_diffractions else 0,
        min(cfg.max_refl_combined_with_scatter, cfg.max_reflections) if cfg.max_scatterings else 0,
    )
    ttree = ctx.tree(tx, n_pre)
    rtree = ctx.tree(rx, n_post) if n_post else _Tree([], [])

    batches += _reflections(ctx, ttree, tx, rx)
    if cfg.max_diffractions >= 1 and ctx.E and len(ctx.diff_edges):
        batches += _single_diffraction(ctx, ttree, rtree, tx, rx)
        if cfg.max_diffractions >= 2:
            batches += _double_diffraction(ctx, ttree, rtree, tx, rx)
    if cfg.max_scatterings >= 1:
        batches += _scattering(ctx, ttree, rtree, tx, rx)
    return Geometry(tx, rx, batches, ctx.flags)


def _reflections(ctx: _Ctx, tree: _Tree, tx, rx):
    cfg = ctx.cfg
    out = []
    for k in range(1, cfg.max_reflections + 1):
        if k > cfg.max_interactions:
            break
        seq, imgs, _ = tree.level(k, tx)
        if len(seq) == 0:
            break
        for c0 in range(0, len(seq), 100_000):
            sq, im = seq[c0 : c0 + 100_000], imgs[c0 : c0 + 100_000]
            dest = np.broadcast_to(rx, (len(sq), 3)).copy()
            X, ok = ctx.backtrack(dest, sq, im)
            sq, X = sq[ok], X[ok]
            M = len(sq)
            if M == 0:
                continue
            pts = np.concatenate([np.broadcast_to(tx, (M, 1, 3)), X, np.broadcast_to(rx, (M, 1, 3))], axis=1)
            excl = _excl_for(k + 1, M)
            for j in range(k):
                _set_excl(excl, _pair(sq[:, j]), j + 1)
            out += ctx.emit(("R",) * k, sq, pts, excl, k)
    return out


def _chain_budgets(cfg: TraceConfig, n_pivot_refl_cap: int):
    """(a, c) pre/post reflection counts allowed around a pivot."""
    for total in range(0, n_pivot_refl_cap + 1):
        for a in range(total + 1):
            yield a, total - a


def _pre_post(ctx, ttree, rtree, tx, rx, a, c):
    sa, ia, Sa = ttree.level(a, tx)
    sc, ic, Oc = rtree.level(c, rx)
    return sa, ia, Sa, sc, ic, Oc


def _assemble(tx, rx, pre_X, pivots, post_X):
    """Polyline TX, pre reflections, pivot points, post reflections (RX side reversed), RX."""
    M = len(pivots[0])
    parts = [np.broadcast_to(tx, (M, 1, 3))]
    if pre_X.shape[1]:
        parts.append(pre_X)
    for p in pivots:
        parts.append(p[:, None])
    if post_X.shape[1]:
        parts.append(post_X[:, ::-1])
    parts.append(np.broadcast_to(rx, (M, 1, 3)))
    return np.concatenate(parts, axis=1)


def _single_diffraction(ctx: _Ctx, ttree, rtree, tx, rx):
    cfg = ctx.cfg
    out = []
    E = ctx.diff_edges
    cap = min(cfg.max_mixed_refl_diff_events - 1, cfg.max_reflections)
    for a, c in _chain_budgets(cfg, max(cap, 0)):
        if a + c + 1 > cfg.max_interactions:
            continue
        sa, ia, Sa, sc, ic, Oc = _pre_post(ctx, ttree, rtree, tx, rx, a, c)
        if len(sa) == 0 or len(sc) == 0:
            continue
        # all (pre, post, edge) combinations, chunked
        Ma, Mc, Ne = len(sa), len(sc), len(E)
        total = Ma * Mc * Ne
        step = 200_000
        for c0 in range(0, total, step):
            lin = np.arange(c0, min(total, c0 + step))
            ie = E[lin % Ne]
            ic_ = (lin // Ne) % Mc
            ia_ = lin // (Ne * Mc)
            S = Sa[ia_]
            O = Oc[ic_]
            t, rs, ro = ctx.keller_param(ie, S, O)
            ok = (t > TOL) & (t < ctx.e_len[ie] - TOL) & (rs > TOL) & (ro > TOL)
            Q = ctx.e_p0[ie] + t[:, None] * ctx.e_dir[ie]
            ok &= ctx.in_wedge(ie, Q, S) & ctx.in_wedge(ie, Q, O)
            if a:
                ok &= sa[ia_, -1] != ctx.e_facets[ie, 0]
            sel = np.nonzero(ok)[0]
            if len(sel) == 0:
                continue
            ie, ia_, ic_, Q = ie[sel], ia_[sel], ic_[sel], Q[sel]
            Xa, oka = ctx.backtrack(Q, sa[ia_], ia[ia_])
            Xc, okc = ctx.backtrack(Q, sc[ic_], ic[ic_])
            good = oka & okc
            ie, ia_, ic_, Q, Xa, Xc = ie[good], ia_[good], ic_[good], Q[good], Xa[good], Xc[good]
            M = len(ie)
            if M == 0:
                continue
            pts = _assemble(tx, rx, Xa, [Q], Xc)
            refs = np.concatenate([sa[ia_], ie[:, None], sc[ic_][:, ::-1]], axis=1)
            kinds = ("R",) * a + ("D",) + ("R",) * c
            excl = _excl_for(a + c + 2, M)
            for j in range(a):
                _set_excl(excl, _pair(refs[:, j]), j + 1)
            _set_excl(excl, ctx.e_facets[ie], a + 1)
            for j in range(c):
                _set_excl(excl, _pair(refs[:, a + 1 + j]), a + 2 + j)
            out += ctx.emit(kinds, refs, pts, excl, a + c + 1)
    return out


def _double_diffraction(ctx: _Ctx, ttree, rtree, tx, rx):
    cfg = ctx.cfg
    idx = ctx.idx
    out = []
    E = ctx.diff_edges
    cap = min(cfg.max_mixed_refl_diff_events - 2, cfg.max_reflections)
    if cap < 0:
        return out
    combos = []
    for total in range(0, cap + 1):
        for b in (0, 1):
            if b > total:
                continue
            for a in range(total - b + 1):
                combos.append((a, b, total - b - a))
    if cap > 1:
        ctx.flags["mid_reflections_capped"] = True
    Ne = len(E)
    for a, b, c in combos:
        if a + b + c + 2 > cfg.max_interactions:
            continue
        sa, ia, Sa, sc, ic, Oc = _pre_post(ctx, ttree, rtree, tx, rx, a, c)
        if len(sa) == 0 or len(sc) == 0:
            continue
        mids = np.arange(ctx.F) if b else np.array([-1])
        Ma, Mc, Mb = len(sa), len(sc), len(mids)
        total = Ma * Mc * Mb * Ne * Ne
        step = 100_000
        for c0 in range(0, total, step):
            lin = np.arange(c0, min(total, c0 + step))
            e2 = E[lin % Ne]
            r = lin // Ne
            e1 = E[r % Ne]
            r = r // Ne
            mb = mids[r % Mb]
            r = r // Mb
            ic_ = r % Mc
            ia_ = r // Mc
            keep = e1 != e2
            e1, e2, mb, ic_, ia_ = e1[keep], e2[keep], mb[keep], ic_[keep], ia_[keep]
            S = Sa[ia_]
            O = Oc[ic_].copy()
            p2 = ctx.e_p0[e2].copy()
            u2 = ctx.e_dir[e2].copy()
            if b:
                # unfold the mid reflection: mirror edge 2 and everything after it
                fb = mb
                p2 = idx.mirror(p2, fb)
                u2 = u2 - 2.0 * np.einsum("ij,ij->i", u2, idx.normals[fb])[:, None] * idx.normals[fb]
                O = idx.mirror(O, fb)
            p1, u1 = ctx.e_p0[e1], ctx.e_dir[e1]
            L1, L2 = ctx.e_len[e1], ctx.e_len[e2]
            t1 = L1 / 2.0
            t2 = L2 / 2.0
            for _ in range(80):
                Q2 = p2 + t2[:, None] * u2
                t1n = _keller_line(p1, u1, S, Q2)
                Q1 = p1 + t1n[:, None] * u1
                t2n = _keller_line(p2, u2, Q1, O)
                t1n = np.clip(t1n, 0.0, L1)
                t2n = np.clip(t2n, 0.0, L2)
                delta = np.maximum(np.abs(t1n - t1), np.abs(t2n - t2))
                t1, t2 = t1n, t2n
                if np.all(delta < 1e-12):
                    break
            ok = (t1 > TOL) & (t1 < L1 - TOL) & (t2 > TOL) & (t2 < L2 - TOL)
            Q1 = p1 + t1[:, None] * u1
            Q2u = p2 + t2[:, None] * u2
            # Keller residuals on the unfolded path
            ok &= _keller_residual(u1, S, Q1, Q2u) < 1e-7
            ok &= _keller_residual(u2, Q1, Q2u, O) < 1e-7
            ok &= ctx.in_wedge(e1, Q1, S) & ctx.in_wedge(e1, Q1, Q2u)
            sel = np.nonzero(ok)[0]
            if len(sel) == 0:
                continue
            e1, e2, mb, ic_, ia_, Q1, t2, Q2u = e1[sel], e2[sel], mb[sel], ic_[sel], ia_[sel], Q1[sel], t2[sel], Q2u[sel]
            Q2 = ctx.e_p0[e2] + t2[:, None] * ctx.e_dir[e2]
            M = len(e1)
            good = np.ones(M, dtype=bool)
            if b:
                fb = mb
                sQ = idx.side(Q1, fb)
                sI = idx.side(Q2u, fb)
                good &= (sQ * sI < 0) & (np.abs(sQ) > TOL)
                with np.errstate(invalid="ignore", divide="ignore"):
                    tt = sQ / (sQ - sI)
                tt = np.where(good, tt, 0.0)
                Xb = Q1 + tt[:, None] * (Q2u - Q1)
                good &= idx.interior(fb, Xb)
                prev2 = Xb
                good &= mb != ctx.e_facets[e1, 0]
            else:
                prev2 = Q1
            Oreal = Oc[ic_]
            good &= ctx.in_wedge(e2, Q2, prev2) & ctx.in_wedge(e2, Q2, Oreal)
            Xa, oka = ctx.backtrack(Q1, sa[ia_], ia[ia_])
            Xc, okc = ctx.backtrack(Q2, sc[ic_], ic[ic_])
            good &= oka & okc
            if not np.any(good):
                continue
            g = good
            e1, e2, mb, ic_, ia_, Q1, Q2, Xa, Xc = e1[g], e2[g], mb[g], ic_[g], ia_[g], Q1[g], Q2[g], Xa[g], Xc[g]
            M = len(e1)
            pivots = [Q1]
            ref_parts = [sa[ia_], e1[:, None]]
            if b:
                pivots.append(Xb[g])
                ref_parts.append(mb[:, None])
            pivots.append(Q2)
            ref_parts += [e2[:, None], sc[ic_][:, ::-1]]
            pts = _assemble(tx, rx, Xa, pivots, Xc)
            refs = np.concatenate(ref_parts, axis=1)
            kinds = ("R",) * a + ("D",) + ("R",) * b + ("D",) + ("R",) * c
            n_int = len(kinds)
            excl = _excl_for(n_int + 1, M)
            for j, kd in enumerate(kinds):
                ids = ctx.e_facets[refs[:, j]] if kd == "D" else _pair(refs[:, j])
                _set_excl(excl, ids, j + 1)
            out += ctx.emit(kinds, refs, pts, excl, n_int)
    return out


def _keller_line(p0, u, A, B):
    ta = np.einsum("ij,ij->i", A - p0, u)
    tb = np.einsum("ij,ij->i", B - p0, u)
    ra = np.linalg.norm(A - p0 - ta[:, None] * u, axis=1)
    rb = np.linalg.norm(B - p0 - tb[:, None] * u, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (ta * rb + tb * ra) / (ra + rb)
    return np.nan_to_num(t, nan=0.0)


def _keller_residual(u, A, Q, B):
    d1 = Q - A
    d2 = B - Q
    with np.errstate(invalid="ignore", divide="ignore"):
        c1 = np.einsum("ij,ij->i", d1, u) / np.linalg.norm(d1, axis=1)
        c2 = np.einsum("ij,ij->i", d2, u) / np.linalg.norm(d2, axis=1)
    return np.nan_to_num(np.abs(c1 - c2), nan=np.inf)


def _scattering(ctx: _Ctx, ttree, rtree, tx, rx):
    cfg = ctx.cfg
    idx = ctx.idx
    out = []
    centers, tfac, tarea = ctx.scene.tiles(cfg.scatter_tile_size_m)
    T = len(centers)
    if T == 0:
        return out
    cap = min(cfg.max_refl_combined_with_scatter, cfg.max_reflections)
    for a, c in _chain_budgets(cfg, cap):
        if a + c + 1 > cfg.max_interactions:
            continue
        sa, ia, Sa, sc, ic, Oc = _pre_post(ctx, ttree, rtree, tx, rx, a, c)
        if len(sa) == 0 or len(sc) == 0:
            continue
        Ma, Mc = len(sa), len(sc)
        total = Ma * Mc * T
        step = 100_000
        for c0 in range(0, total, step):
            lin = np.arange(c0, min(total, c0 + step))
            it = lin % T
            r = lin // T
            ic_ = r % Mc
            ia_ = r // Mc
            f = tfac[it]
            S = Sa[ia_]
            O = Oc[ic_]
            sS = idx.side(S, f)
            sO = idx.side(O, f)
            two = idx.two_sided[f]
            ok = np.where(two, (np.abs(sS) > TOL) & (sS * sO > 0), (sS > TOL) & (sO > TOL))
            ok &= np.abs(sO) > TOL
            if a:
                ok &= sa[ia_, -1] != f
            if c:
                ok &= sc[ic_, -1] != f
            sel = np.nonzero(ok)[0]
            if len(sel) == 0:
                continue
            it, ia_, ic_ = it[sel], ia_[sel], ic_[sel]
            Q = centers[it]
            Xa, oka = ctx.backtrack(Q, sa[ia_], ia[ia_])
            Xc, okc = ctx.backtrack(Q, sc[ic_], ic[ic_])
            good = oka & okc
            it, ia_, ic_, Q, Xa, Xc = it[good], ia_[good], ic_[good], Q[good], Xa[good], Xc[good]
            M = len(it)
            if M == 0:
                continue
            pts = _assemble(tx, rx, Xa, [Q], Xc)
            refs = np.concatenate([sa[ia_], tfac[it][:, None], sc[ic_][:, ::-1]], axis=1)
            kinds = ("R",) * a + ("S",) + ("R",) * c
            excl = _excl_for(a + c + 2, M)
            for j in range(a + c + 1):
                _set_excl(excl, _pair(refs[:, j]), j + 1)
            keys = [tuple(row) for row in refs.tolist()]
            out += ctx.emit(kinds, refs, pts, excl, a + c + 1, areas=tarea[it], keys=keys)
    return out


# ---------------------------------------------------------------------------
# field stage


def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0, n, 1.0)


def _perp(k, n):
    """Unit vector k x n, with a fallback orthogonal to k at normal incidence."""
    s = np.cross(k, n)
    ns = np.linalg.norm(s, axis=1)
    bad = ns < 1e-12
    if np.any(bad):
        alt = np.cross(k[bad], np.array([0.0, 0.0, 1.0]))
        nb = np.linalg.norm(alt, axis=1)
        alt2 = np.cross(k[bad], np.array([1.0, 0.0, 0.0]))
        alt = np.where((nb < 1e-9)[:, None], alt2, alt)
        s[bad] = alt
        ns[bad] = np.linalg.norm(alt, axis=1)
    return s / ns[:, None]


def _outer(a, b):
    return a[:, :, None] * b[:, None, :]


def _per_facet(fids, fn):
    """Evaluate fn(material, rows) for each distinct facet material; returns list of arrays."""
    return fn


def _facet_coeffs(scene, fids, theta, freq):
    r_te = np.zeros(len(fids), dtype=complex)
    r_tm = np.zeros(len(fids), dtype=complex)
    t_te = np.zeros(len(fids), dtype=complex)
    t_tm = np.zeros(len(fids), dtype=complex)
    mats = scene.facet_materials
    names = np.array([mats[f].name for f in fids])
    for name in np.unique(names):
        rows = names == name
        m = scene.materials[name]
        a, b, c, d = em.material_coefficients(m, theta[rows], freq)
        r_te[rows], r_tm[rows], t_te[rows], t_tm[rows] = a, b, c, d
    return r_te, r_tm, t_te, t_tm


def evaluate_batch(scene: Scene, batch: Batch, freq_GHz: float):
    """Jones matrices (B, 2, 2), TX/RX directions and lengths for a batch."""
    pts = batch.pts
    B = len(pts)
    seg = pts[:, 1:] - pts[:, :-1]
    L = np.linalg.norm(seg, axis=2)
    kd = seg / L[:, :, None]
    k = em.wavenumber(freq_GHz)
    lam = em.wavelength(freq_GHz)
    M = np.broadcast_to(np.eye(3, dtype=complex), (B, 3, 3)).copy()
    idx = scene.index
    edges = scene.edges
    # lengths accumulated between spreading events (D, S)
    groups = [L[:, 0].copy()]
    amp = np.ones(B)
    d_events = []
    s_events = []
    for j, kind in enumerate(batch.kinds):
        kin = kd[:, j]
        kout = kd[:, j + 1]
        ref = batch.refs[:, j]
        if kind in ("R", "T"):
            n = idx.normals[ref]
            cos_i = np.clip(np.abs(np.einsum("ij,ij->i", kin, n)), 0.0, 1.0)
            theta = np.arccos(cos_i)
            r_te, r_tm, t_te, t_tm = _facet_coeffs(scene, ref, theta, freq_GHz)
            s = _perp(kin, n)
            if kind == "R":
                Dy = r_te[:, None, None] * _outer(s, s) + r_tm[:, None, None] * _outer(np.cross(s, kout), np.cross(s, kin))
            else:
                p = np.cross(s, kin)
                Dy = t_te[:, None, None] * _outer(s, s) + t_tm[:, None, None] * _outer(p, p)
            groups[-1] += L[:, j + 1]
        elif kind == "S":
            n = idx.normals[ref]
            ci = np.abs(np.einsum("ij,ij->i", kin, n))
            co = np.abs(np.einsum("ij,ij->i", kout, n))
            mats = scene.facet_materials
            lobe = np.zeros(B)
            S2 = np.zeros(B)
            for fid in np.unique(ref):
                rows = ref == fid
                m = mats[fid]
                S2[rows] = m.scattering_S**2
                if m.scattering_variant == "lambertian":
                    lobe[rows] = co[rows] / np.pi
                else:
                    th_i = np.arccos(np.clip(ci[rows], 0, 1))
                    kin_r = kin[rows]
                    nr = n[rows]
                    spec = kin_r - 2.0 * np.einsum("ij,ij->i", kin_r, nr)[:, None] * nr
                    cpsi = np.einsum("ij,ij->i", kout[rows], spec)
                    lobe[rows] = ((1.0 + cpsi) / 2.0) ** m.scattering_alpha / em.directive_norm(th_i, m.scattering_alpha)
            er = np.sqrt(S2 * batch.areas * ci * lobe)
            si = _perp(kin, n)
            so = _perp(kout, n)
            Dy = _outer(so, si) + _outer(np.cross(so, kout), np.cross(si, kin))
            Dy = Dy * er[:, None, None]
            s_events.append(len(groups) - 1)
            groups.append(L[:, j + 1].copy())
        elif kind == "D":
            e_idx = ref
            u = np.array([edges[e].direction for e in e_idx])
            t0 = np.array([edges[e].face0_tangent for e in e_idx], dtype=float)
            n0 = np.array([edges[e].face0_normal for e in e_idx], dtype=float)
            nn = np.array([edges[e].n for e in e_idx])
            back = -kin
            phip = np.mod(np.arctan2(np.einsum("ij,ij->i", back, n0), np.einsum("ij,ij->i", back, t0)), 2 * np.pi)
            phi = np.mod(np.arctan2(np.einsum("ij,ij->i", kout, n0), np.einsum("ij,ij->i", kout, t0)), 2 * np.pi)
            sinb = np.linalg.norm(np.cross(kin, u), axis=1)
            d_events.append((j, len(groups) - 1, phi, phip, nn, sinb, e_idx))
            fi_in = _unit(np.cross(u, kin))
            bi_in = np.cross(kin, fi_in)
            fi_out = _unit(np.cross(u, kout))
            bi_out = np.cross(kout, fi_out)
            # placeholder; coefficients need the outgoing group length
            Dy = (bi_out, bi_in, fi_out, fi_in)
            groups.append(L[:, j + 1].copy())
        else:
            raise ValueError(f"unknown interaction kind {kind!r}")
        if kind == "D":
            d_events[-1] = d_events[-1] + (Dy,)
            M = ("D", len(d_events) - 1, M)
        else:
            M = _apply(Dy, M)
    # resolve diffraction dyadics now that all group lengths are known
    M = _resolve(M, d_events, groups, scene, freq_GHz, k)
    if s_events:
        amp = amp / (groups[0] * groups[1])
    elif d_events:
        amp = amp / groups[0]
        for i in range(len(d_events)):
            sp, sd = groups[i], groups[i + 1]
            amp = amp * np.sqrt(sp / (sd * (sp + sd)))
    else:
        amp = amp / groups[0]
    total = L.sum(axis=1)
    scal = lam / (4.0 * np.pi) * amp * np.exp(-1j * k * total)
    k0 = kd[:, 0]
    kl = kd[:, -1]
    vt, ht = em.polarization_basis(k0)
    vr, hr = em.polarization_basis(-kl)
    E = np.stack([vt, ht], axis=2)  # (B, 3, 2)
    R = np.stack([vr, hr], axis=1)  # (B, 2, 3)
    J = R @ M @ E * scal[:, None, None]
    return J, k0, -kl, total


def _apply(Dy, M):
    if isinstance(M, tuple):
        return ("chain", Dy, M)
    return Dy @ M


def _resolve(M, d_events, groups, scene, freq, k):
    """Unroll a lazily-built dyadic chain, filling diffraction coefficients."""
    ops = []
    node = M
    while isinstance(node, tuple):
        if node[0] == "chain":
            ops.append(("mat", node[1]))
            node = node[2]
        else:
            ops.append(("D", node[1]))
            node = node[2]
    base = node
    for op, val in reversed(ops):
        if op == "mat":
            base = val @ base
        else:
            j, gi, phi, phip, nn, sinb, e_idx, (bo, bi, fo, fi) = d_events[val]
            sp, sd = groups[gi], groups[gi + 1]
            Lp = sp * sd / (sp + sd) * sinb**2
            d_te = np.zeros(len(phi), dtype=complex)
            d_tm = np.zeros(len(phi), dtype=complex)
            th0, thn = em.luebbers_angles(phi, phip, nn)
            # rows sharing both face materials are evaluated together
            fm = scene.facet_materials
            face_mats = [(fm[scene.edges[e].facets[0]].name, fm[scene.edges[e].facets[-1]].name) for e in e_idx]
            for m0, mn in sorted(set(face_mats)):
                rows = np.array([fmr == (m0, mn) for fmr in face_mats])
                r0 = em._face_coeffs(scene.materials[m0], th0[rows], freq)
                rn = em._face_coeffs(scene.materials[mn], thn[rows], freq)
                d_te[rows], d_tm[rows] = em.utd_coefficients(nn[rows], phi[rows], phip[rows], Lp[rows], k,
                                                             sinb[rows], r0, rn)
            Dy = d_te[:, None, None] * _outer(bo, bi) + d_tm[:, None, None] * _outer(fo, fi)
            base = Dy @ base
    return base


def _pol_field(J, pol):
    return J @ em.polarization_vector(pol)


def evaluate(scene: Scene, geom: Geometry, freq_GHz: float, cfg: TraceConfig | None = None,
             tx_id: str = "tx", rx_id: str = "rx") -> ChannelResult:
    cfg = (cfg or TraceConfig()).effective()
    p_tx = em.polarization_vector(cfg.tx_polarization)
    paths = []
    dropped = 0
    degenerate = 0
    for batch in geom.batches:
        with np.errstate(divide="ignore", invalid="ignore"):
            J, dep, arr, total = evaluate_batch(scene, batch, freq_GHz)
        fields = J @ p_tx
        pw = np.sum(np.abs(fields) ** 2, axis=1)
        ok = np.isfinite(pw)
        if not ok.all():
            # degenerate chains (a zero-length leg) have no defined field; count and skip them
            degenerate += int(np.count_nonzero(~ok))
            J, dep, arr, total, fields, pw = J[ok], dep[ok], arr[ok], total[ok], fields[ok], pw[ok]
            keys = None if batch.keys is None else [k for k, g in zip(batch.keys, ok) if g]
            batch = dataclasses.replace(batch, refs=batch.refs[ok], pts=batch.pts[ok], keys=keys,
                                        areas=None if batch.areas is None else batch.areas[ok])
            if len(pw) == 0:
                continue
        sig = signature_of(batch.kinds)
        if batch.keys is None:
            with np.errstate(divide="ignore"):
                p_dBm = cfg.ptx_dBm + 10.0 * np.log10(pw)
            live = np.nonzero(p_dBm >= cfg.min_path_power_dBm)[0]
            dropped += len(pw) - len(live)
            inter = _interactions(scene, batch.kinds, batch.refs[live], batch.pts[live])
            for i, r in enumerate(live):
                paths.append(RayPath(inter[i], J[r], fields[r], float(total[r]), dep[r], arr[r], sig,
                                     float(p_dBm[r])))
            continue
        # scattering: tiles sharing an interaction chain form one incoherent path
        gids: dict = {}
        gid = np.array([gids.setdefault(key, len(gids)) for key in batch.keys])
        order = np.argsort(gid, kind="stable")
        bounds = np.searchsorted(gid[order], np.arange(len(gids)))
        ptot = np.add.reduceat(pw[order], bounds)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_dBm = cfg.ptx_dBm + 10.0 * np.log10(ptot)
            w = pw[order] / np.repeat(ptot, np.diff(np.append(bounds, len(order))))
        w = np.where(np.isfinite(w), w, 0.0)
        si = batch.kinds.index("S")
        cen = np.add.reduceat(batch.pts[order, si + 1] * w[:, None], bounds)
        dep_m = _unit(np.add.reduceat(dep[order] * w[:, None], bounds))
        arr_m = _unit(np.add.reduceat(arr[order] * w[:, None], bounds))
        len_m = np.add.reduceat(total[order] * w, bounds)
        # representative tile: strongest in each group
        best = np.array([order[a + int(np.argmax(pw[order[a:b]]))]
                         for a, b in zip(bounds, np.append(bounds[1:], len(order)))], dtype=int)
        live = np.nonzero(p_dBm >= cfg.min_path_power_dBm)[0]
        dropped += len(ptot) - len(live)
        inter = _interactions(scene, batch.kinds, batch.refs[best[live]], batch.pts[best[live]])
        ends = np.append(bounds[1:], len(order))
        for i, g in enumerate(live):
            rows = order[bounds[g]:ends[g]]
            r0 = best[g]
            it = list(inter[i])
            it[si] = Interaction("S", tuple(cen[g].tolist()), it[si].ref, it[si].angle_deg)
            tiles = TileBundle(batch.pts[rows, si + 1], dep[rows], arr[rows], J[rows])
            fld = fields[r0] * math.sqrt(ptot[g] / pw[r0]) if pw[r0] > 0 else fields[r0]
            paths.append(RayPath(tuple(it), J[r0], fld, float(len_m[g]), dep_m[g], arr_m[g], sig,
                                 float(p_dBm[g]), coherent=False, tiles=tiles))
    paths.sort(key=lambda p: (CLASSES.index(p.signature) if p.signature in CLASSES else 99, p.length_m, p.chain))
    flags = dict(geom.flags)
    flags["cutoff_dropped"] = int(dropped)
    flags["degenerate_dropped"] = degenerate
    return ChannelResult(tx_id, rx_id, tuple(float(x) for x in geom.tx), tuple(float(x) for x in geom.rx),
                         float(freq_GHz), paths, flags, cfg.ptx_dBm, cfg.tx_polarization)


def _interactions(scene, kinds, refs, pts):
    """Interaction tuples for every row of a batch."""
    B = len(pts)
    if B == 0:
        return []
    idx = scene.index
    kin = _unit(pts[:, 1:-1] - pts[:, :-2])
    axes = np.empty((B, len(kinds), 3))
    for j, kind in enumerate(kinds):
        if kind == "D":
            axes[:, j] = [scene.edges[e].direction for e in refs[:, j]]
        else:
            axes[:, j] = idx.normals[refs[:, j]]
    ang = np.degrees(np.arccos(np.clip(np.abs(np.einsum("bjk,bjk->bj", kin, axes)), 0.0, 1.0))).tolist()
    P = pts[:, 1:-1].tolist()
    R = refs.tolist()
    return [
        tuple(Interaction(kind, tuple(P[b][j]), R[b][j], ang[b][j]) for j, kind in enumerate(kinds))
        for b in range(B)
    ]


def trace(scene: Scene, tx, rx, freq_GHz: float, cfg: TraceConfig | None = None,
          tx_id: str = "tx", rx_id: str = "rx") -> ChannelResult:
    """All propagation paths of one TX-RX link at one frequency."""
    cfg = cfg or TraceConfig()
    geom = find_geometry(scene, tx, rx, cfg)
    return evaluate(scene, geom, freq_GHz, cfg, tx_id, rx_id)


def _sweep_link(args):
    scene, tx, tx_id, rx, rx_id, freqs, cfg = args
    out = []
    try:
        geom = find_geometry(scene, tx, rx, cfg)
    except Exception as exc:  # collected per link
        return [ChannelResult(tx_id, rx_id, tuple(tx), tuple(rx), float(f), [], {}, cfg.ptx_dBm,
                              cfg.tx_polarization, error=f"{type(exc).__name__}: {exc}") for f in freqs]
    for f in freqs:
        try:
            out.append(evaluate(scene, geom, f, cfg, tx_id, rx_id))
        except Exception as exc:
            out.append(ChannelResult(tx_id, rx_id, tuple(tx), tuple(rx), float(f), [], {}, cfg.ptx_dBm,
                                     cfg.tx_polarization, error=f"{type(exc).__name__}: {exc}"))
    return out


def sweep(scene: Scene, tx, rx_list, freqs, cfg: TraceConfig | None = None, workers: int | None = None,
          tx_id: str = "tx") -> list:
    """Trace every (rx, freq) link; output is ordered rx-major, then by frequency.

    Geometry is shared across frequencies of one link. ``workers`` > 1 fans
    links out to processes (default from MMWRT_WORKERS); the output order and
    content do not depend on it.
    """
    cfg = cfg or TraceConfig()
    rx_items = []
    for i, r in enumerate(rx_list):
        if isinstance(r, tuple) and len(r) == 2 and isinstance(r[0], str):
            rx_items.append(r)
        else:
            rx_items.append((f"rx{i + 1}", r))
    freqs = list(freqs)
    if workers is None:
        workers = int(os.environ.get("MMWRT_WORKERS", "1"))
    jobs = [(scene, np.asarray(tx, float), tx_id, np.asarray(p, float), rid, freqs, cfg) for rid, p in rx_items]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_sweep_link, jobs))
    else:
        parts = [_sweep_link(j) for j in jobs]
    return [r for part in parts for r in part]
