"""Geometric world model: polygonal facets, materials, wedge edges, ray queries."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

GEOM_TOL = 1e-6


@dataclass(frozen=True)
class Material:
    name: str
    eps_r: complex = 1.0 + 0j
    thickness_m: float = 0.1
    scattering_S: float = 0.0
    scattering_alpha: int = 1
    pec: bool = False
    scattering_variant: str = "lambertian"
    penetrable: bool | None = None
    frequency_GHz_valid: tuple = (0.5, 100.0)
    note: str = ""

    def __post_init__(self):
        if not 0.0 <= self.scattering_S <= 1.0:
            raise ValueError(f"material {self.name}: S must lie in [0, 1]")
        if self.scattering_alpha < 1:
            raise ValueError(f"material {self.name}: alpha must be >= 1")
        if self.thickness_m <= 0:
            raise ValueError(f"material {self.name}: thickness must be positive")
        if not self.pec:
            eps = complex(self.eps_r)
            if eps.real < 1.0 or eps.imag > 0.0:
                raise ValueError(f"material {self.name}: need Re(eps_r) >= 1 and Im(eps_r) <= 0")
        if self.scattering_variant not in ("lambertian", "directive"):
            raise ValueError(f"material {self.name}: unknown scattering variant")

    @property
    def is_penetrable(self) -> bool:
        if self.penetrable is None:
            return not self.pec
        return bool(self.penetrable) and not self.pec


# Literature-style defaults; not measured values.
DEFAULT_MATERIALS = {
    "travertine": Material("travertine", 6.0 - 0.3j, 0.3, 0.25, note="default"),
    "marble": Material("marble", 6.0 - 0.3j, 0.3, 0.25, note="default"),
    "concrete": Material("concrete", 5.3 - 0.3j, 0.25, 0.25, note="default"),
    "plasterboard": Material("plasterboard", 2.8 - 0.1j, 0.012, 0.25, note="default"),
    "glass": Material("glass", 6.3 - 0.3j, 0.01, 0.25, note="default"),
    "metal": Material("metal", pec=True, scattering_S=0.25, note="default"),
    "outdoor_wall": Material("outdoor_wall", 5.3 - 0.3j, 0.3, 0.4, note="default"),
}


class Facet:
    """Planar polygon, counterclockwise when viewed from the normal side."""

    __slots__ = ("vertices", "normal", "material", "two_sided", "tag", "offset", "area", "u", "v", "poly2d")

    def __init__(self, vertices, material: str, two_sided: bool = False, tag: str = "wall"):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 3 or len(V) < 3:
            raise ValueError("facet needs at least 3 vertices of 3 coordinates")
        # Newell normal
        nrm = np.zeros(3)
        for i in range(len(V)):
            a, b = V[i], V[(i + 1) % len(V)]
            nrm += np.array([(a[1] - b[1]) * (a[2] + b[2]), (a[2] - b[2]) * (a[0] + b[0]), (a[0] - b[0]) * (a[1] + b[1])])
        area2 = np.linalg.norm(nrm)
        if area2 < 1e-12:
            raise ValueError("degenerate facet with zero area")
        n = nrm / area2
        c = V.mean(axis=0)
        off = float(n @ c)
        dev = np.abs(V @ n - off)
        if dev.max() > GEOM_TOL:
            raise ValueError(f"facet vertices not coplanar (deviation {dev.max():.3g} m)")
        u = V[1] - V[0]
        u = u - (u @ n) * n
        u /= np.linalg.norm(u)
        v = np.cross(n, u)
        p2 = np.stack([(V - V[0]) @ u, (V - V[0]) @ v], axis=1)
        if _self_intersecting(p2):
            raise ValueError("facet polygon is self-intersecting")
        self.vertices = V
        self.normal = n
        self.offset = off
        self.area = area2 / 2.0
        self.u = u
        self.v = v
        self.poly2d = p2
        self.material = material
        self.two_sided = bool(two_sided)
        self.tag = tag

    def __repr__(self):
        return f"Facet({len(self.vertices)} verts, material={self.material!r}, tag={self.tag!r})"

    def contains(self, p, tol=0.0) -> bool:
        q = np.asarray(p, dtype=float) - self.vertices[0]
        return bool(_pip(np.array([[q @ self.u, q @ self.v]]), self.poly2d)[0])


def _segments_cross(p, q, r, s):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _self_intersecting(p2) -> bool:
    n = len(p2)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(p2[i], p2[(i + 1) % n], p2[j], p2[(j + 1) % n]):
                return True
    return False


def _pip(pts, poly):
    """Even-odd point-in-polygon for (N, 2) points against one (V, 2) polygon."""
    x, y = pts[:, 0:1], pts[:, 1:2]
    a = poly
    b = np.roll(poly, -1, axis=0)
    cond = (a[:, 1] > y) != (b[:, 1] > y)
    dy = b[:, 1] - a[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / dy
    return (np.count_nonzero(cond & (x < xc), axis=1) % 2) == 1


@dataclass(frozen=True)
class Edge:
    p0: tuple
    p1: tuple
    facets: tuple
    wedge_angle: float  # solid (material-side) interior angle; 0 marks a half-plane
    face0_tangent: tuple = ()
    face0_normal: tuple = ()
    diffracting: bool = True

    @property
    def n(self) -> float:
        """Exterior wedge parameter: the free-space angle is n*pi."""
        return (2.0 * math.pi - self.wedge_angle) / math.pi

    @property
    def direction(self) -> np.ndarray:
        d = np.subtract(self.p1, self.p0)
        return d / np.linalg.norm(d)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.p1, self.p0)))


def mirror_point(p, facet: Facet):
    """Mirror ``p`` across the supporting plane of ``facet``."""
    p = np.asarray(p, dtype=float)
    n = facet.normal
    return p - 2.0 * ((p - facet.vertices[0]) @ n) * n


def _key(p, nd=6):
    return tuple(round(float(x), nd) + 0.0 for x in p)


def _wedge(f1: Facet, f2: Facet, a, b):
    e = (b - a) / np.linalg.norm(b - a)

    def tangent(f):
        t = np.cross(f.normal, e)
        if (f.vertices.mean(axis=0) - a) @ t < 0:
            t = -t
        return t

    t1, t2 = tangent(f1), tangent(f2)
    gamma = math.acos(max(-1.0, min(1.0, float(t1 @ t2))))
    if f1.normal @ t2 < 0:
        alpha = gamma
    else:
        alpha = 2.0 * math.pi - gamma
    return alpha, t1


def extract_edges(facets) -> list:
    """Wedge and free edges of a facet list, in lexicographic endpoint order.

    Boundaries shared exactly (same endpoints) by two non-coplanar facets
    become wedges; unshared boundaries become half-plane edges. Edges lying
    on the surface of another facet (a column foot on the floor) are kept
    but marked non-diffracting, as are concave wedges and corners joining
    two-sided walls.
    """
    segs: dict = {}
    for fi, f in enumerate(facets):
        V = f.vertices
        for i in range(len(V)):
            a, b = V[i], V[(i + 1) % len(V)]
            ka, kb = _key(a), _key(b)
            k = (ka, kb) if ka <= kb else (kb, ka)
            segs.setdefault(k, []).append(fi)
    edges = []
    for k, owners in segs.items():
        a, b = np.array(k[0]), np.array(k[1])
        owners = sorted(set(owners))
        if len(owners) == 1:
            f = facets[owners[0]]
            e = (b - a) / np.linalg.norm(b - a)
            t = np.cross(f.normal, e)
            if (f.vertices.mean(axis=0) - a) @ t < 0:
                t = -t
            edges.append(Edge(k[0], k[1], (owners[0],), 0.0, tuple(t), tuple(f.normal)))
            continue
        if len(owners) > 2:
            log.warning("T-junction: boundary %s shared by %d facets", k, len(owners))
        for i in range(len(owners)):
            for j in range(i + 1, len(owners)):
                f1, f2 = facets[owners[i]], facets[owners[j]]
                if abs(abs(float(f1.normal @ f2.normal)) - 1.0) < 1e-9:
                    continue
                alpha, t1 = _wedge(f1, f2, a, b)
                edges.append(Edge(k[0], k[1], (owners[i], owners[j]), alpha, tuple(t1), tuple(f1.normal)))
    out = []
    for e in sorted(edges, key=lambda e: (e.p0, e.p1, e.facets)):
        # corners between thin two-sided walls have no defined interior angle
        thin = len(e.facets) == 2 and any(facets[i].two_sided for i in e.facets)
        diff = e.n > 1.0 + 1e-9 and not thin and not _embedded(e, facets)
        out.append(Edge(e.p0, e.p1, e.facets, e.wedge_angle, e.face0_tangent, e.face0_normal, diff))
    return out


def _embedded(edge: Edge, facets) -> bool:
    mid = (np.asarray(edge.p0) + np.asarray(edge.p1)) / 2.0
    for fi, f in enumerate(facets):
        if fi in edge.facets:
            continue
        if abs(mid @ f.normal - f.offset) < GEOM_TOL and f.contains(mid):
            return True
    return False


class FacetIndex:
    """Packed facet arrays with per-facet bounding boxes.

    Candidate facets are culled by plane crossing and bounding-box overlap; the
    exact plane/polygon arithmetic on the survivors is the same expression the
    unculled test uses, so results are bit-identical.
    """

    def __init__(self, facets, opaque):
        F = len(facets)
        self.F = F
        vmax = max((len(f.vertices) for f in facets), default=3)
        self.normals = np.array([f.normal for f in facets]).reshape(F, 3)
        self.offsets = np.array([f.offset for f in facets], dtype=float)
        self.origin = np.array([f.vertices[0] for f in facets]).reshape(F, 3)
        self.u = np.array([f.u for f in facets]).reshape(F, 3)
        self.v = np.array([f.v for f in facets]).reshape(F, 3)
        poly = np.zeros((F, vmax, 2))
        verts = np.zeros((F, vmax, 3))
        nv = np.zeros(F, dtype=int)
        for i, f in enumerate(facets):
            k = len(f.vertices)
            poly[i, :k] = f.poly2d
            poly[i, k:] = f.poly2d[0]
            verts[i, :k] = f.vertices
            verts[i, k:] = f.vertices[0]
            nv[i] = k
        self.poly = poly
        self.plo, self.phi = poly.min(axis=1), poly.max(axis=1)
        self.verts = verts
        self.nverts = nv
        self.lo = verts.min(axis=1) - GEOM_TOL if F else np.zeros((0, 3))
        self.hi = verts.max(axis=1) + GEOM_TOL if F else np.zeros((0, 3))
        self.two_sided = np.array([f.two_sided for f in facets], dtype=bool)
        self.opaque = np.asarray(opaque, dtype=bool)

    # -- point-in-polygon on (facet id, point) pairs
    def contains(self, fid, pts):
        fid = np.asarray(fid, dtype=int)
        pts = np.asarray(pts, dtype=float)
        q = pts - self.origin[fid]
        x = np.einsum("ij,ij->i", q, self.u[fid])[:, None]
        y = np.einsum("ij,ij->i", q, self.v[fid])[:, None]
        a = self.poly[fid]
        b = np.roll(a, -1, axis=1)
        cond = (a[:, :, 1] > y) != (b[:, :, 1] > y)
        dy = b[:, :, 1] - a[:, :, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a[:, :, 0] + (y - a[:, :, 1]) * (b[:, :, 0] - a[:, :, 0]) / dy
        return (np.count_nonzero(cond & (x < xc), axis=1) % 2) == 1

    def boundary_distance(self, fid, pts):
        """In-plane distance from each point to the outline of its facet."""
        fid = np.asarray(fid, dtype=int)
        pts = np.asarray(pts, dtype=float)
        q = pts - self.origin[fid]
        xy = np.stack([np.einsum("ij,ij->i", q, self.u[fid]), np.einsum("ij,ij->i", q, self.v[fid])], axis=1)
        a = self.poly[fid]
        e = np.roll(a, -1, axis=1) - a
        w = xy[:, None, :] - a
        ee = np.einsum("mvc,mvc->mv", e, e)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(np.where(ee > 0, np.einsum("mvc,mvc->mv", w, e) / ee, 0.0), 0.0, 1.0)
        return np.linalg.norm(w - t[..., None] * e, axis=2).min(axis=1)

    def _near_outline(self, fid, pts, mask, margin):
        """Points of ``mask`` within ``margin`` of the outline; others are False."""
        out = np.zeros(len(fid), dtype=bool)
        idx = np.nonzero(mask)[0]
        if len(idx):
            f, p = fid[idx], pts[idx]
            q = p - self.origin[f]
            x = np.einsum("ij,ij->i", q, self.u[f])
            y = np.einsum("ij,ij->i", q, self.v[f])
            # far outside the outline's bounding box means far from the outline
            box = ((x >= self.plo[f, 0] - margin) & (x <= self.phi[f, 0] + margin)
                   & (y >= self.plo[f, 1] - margin) & (y <= self.phi[f, 1] + margin))
            idx, f, p = idx[box], f[box], p[box]
            if len(idx):
                out[idx] = self.boundary_distance(f, p) <= margin
        return out

    def interior(self, fid, pts, margin=GEOM_TOL):
        """``contains`` restricted to points farther than ``margin`` from the outline.

        On the outline itself the even-odd answer depends on rounding, so a
        path built from either end could get a different verdict.
        """
        fid = np.asarray(fid, dtype=int)
        pts = np.asarray(pts, dtype=float)
        inside = self.contains(fid, pts)
        return inside & ~self._near_outline(fid, pts, inside, margin)

    def covers(self, fid, pts, margin=GEOM_TOL):
        """``contains`` widened by ``margin`` around the outline."""
        fid = np.asarray(fid, dtype=int)
        pts = np.asarray(pts, dtype=float)
        inside = self.contains(fid, pts)
        return inside | self._near_outline(fid, pts, ~inside, margin)

    def side(self, pts, fid=None):
        pts = np.asarray(pts, dtype=float)
        if fid is None:
            return pts @ self.normals.T - self.offsets
        return np.einsum("ij,ij->i", pts, self.normals[fid]) - self.offsets[fid]

    def mirror(self, pts, fid):
        s = self.side(pts, fid)
        return pts - 2.0 * s[:, None] * self.normals[fid]

    def crossings(self, A, B, excl=None, cull=True):
        """Sparse segment/facet hits for segment batches A -> B.

        Returns (seg, facet, t, point) arrays for every hit strictly inside
        the segment (more than GEOM_TOL from both ends), excluding the facet
        ids listed per segment in ``excl`` (shape (N, k), -1 for none).
        """
        A = np.asarray(A, dtype=float).reshape(-1, 3)
        B = np.asarray(B, dtype=float).reshape(-1, 3)
        N = len(A)
        if N == 0 or self.F == 0:
            e = np.zeros(0, dtype=int)
            return e, e, np.zeros(0), np.zeros((0, 3))
        da = A @ self.normals.T - self.offsets
        db = B @ self.normals.T - self.offsets
        mask = ((da > 0) & (db < 0)) | ((da < 0) & (db > 0))
        if cull:
            lo = np.minimum(A, B)
            hi = np.maximum(A, B)
            mask &= np.all(lo[:, None, :] <= self.hi[None], axis=2) & np.all(hi[:, None, :] >= self.lo[None], axis=2)
        if excl is not None:
            excl = np.asarray(excl, dtype=int).reshape(N, -1)
            for c in range(excl.shape[1]):
                col = excl[:, c]
                ok = col >= 0
                mask[np.nonzero(ok)[0], col[ok]] = False
        si, fi = np.nonzero(mask)
        if len(si) == 0:
            e = np.zeros(0, dtype=int)
            return e, e, np.zeros(0), np.zeros((0, 3))
        a_, b_ = da[si, fi], db[si, fi]
        t = a_ / (a_ - b_)
        D = B[si] - A[si]
        L = np.linalg.norm(D, axis=1)
        P = A[si] + t[:, None] * D
        keep = (t * L > GEOM_TOL) & ((1.0 - t) * L > GEOM_TOL)
        # grazing an outline counts as a hit, so no ray slips past a wall end by rounding
        keep &= self.covers(fi, P)
        si, fi, t, P, L = si[keep], fi[keep], t[keep], P[keep], L[keep]
        if len(si) > 1:
            # a point shared by several facets (a seam or a wall junction) is hit once:
            # on an opaque facet if one is there, else on the lowest facet id
            o = np.lexsort((fi, t, si))
            si, fi, t, P, L = si[o], fi[o], t[o], P[o], L[o]
            same = (si[1:] == si[:-1]) & ((t[1:] - t[:-1]) * L[1:] <= GEOM_TOL)
            if same.any():
                cluster = np.r_[0, np.cumsum(~same)]
                rank = np.lexsort((fi, ~self.opaque[fi], cluster))
                keep = np.zeros(len(si), dtype=bool)
                first = np.r_[True, cluster[rank][1:] != cluster[rank][:-1]]
                keep[rank[first]] = True
                si, fi, t, P = si[keep], fi[keep], t[keep], P[keep]
        return si, fi, t, P


@dataclass(frozen=True, eq=False)
class Scene:
    facets: tuple
    materials: dict
    edges: tuple = ()
    bbox: tuple = ()
    index: FacetIndex = field(default=None, repr=False)
    name: str = ""

    @classmethod
    def build(cls, facets, materials=None, name: str = "") -> Scene:
        mats = dict(DEFAULT_MATERIALS)
        if materials:
            if isinstance(materials, dict):
                mats.update(materials)
            else:
                mats.update({m.name: m for m in materials})
        facets = tuple(facets)
        for i, f in enumerate(facets):
            if f.material not in mats:
                raise KeyError(f"facet {i}: unknown material {f.material!r}")
        edges = tuple(extract_edges(facets))
        if facets:
            allv = np.concatenate([f.vertices for f in facets])
            bbox = (tuple(allv.min(axis=0)), tuple(allv.max(axis=0)))
        else:
            bbox = ()
        opaque = [not mats[f.material].is_penetrable for f in facets]
        return cls(facets, mats, edges, bbox, FacetIndex(facets, opaque), name)

    def material_of(self, fid: int) -> Material:
        return self.materials[self.facets[fid].material]

    @functools.cached_property
    def facet_materials(self) -> list:
        return [self.materials[f.material] for f in self.facets]

    @functools.cached_property
    def diffracting_edges(self) -> list:
        return [i for i, e in enumerate(self.edges) if e.diffracting]

    @functools.lru_cache(maxsize=8)
    def tiles(self, size: float):
        """Scattering tiles of every facet whose material has S > 0.

        Returns (centers (T, 3), facet ids (T,), areas (T,)).
        """
        centers, fids, areas = [], [], []
        for fi, f in enumerate(self.facets):
            if self.materials[f.material].scattering_S <= 0.0:
                continue
            p = f.poly2d
            lo, hi = p.min(axis=0), p.max(axis=0)
            ext = hi - lo
            nu = max(1, int(math.ceil(ext[0] / size - 1e-9)))
            nv = max(1, int(math.ceil(ext[1] / size - 1e-9)))
            du, dv = ext[0] / nu, ext[1] / nv
            gu = lo[0] + du * (np.arange(nu) + 0.5)
            gv = lo[1] + dv * (np.arange(nv) + 0.5)
            U, W = np.meshgrid(gu, gv, indexing="ij")
            pts2 = np.stack([U.ravel(), W.ravel()], axis=1)
            inside = _pip(pts2, p)
            pts2 = pts2[inside]
            if len(pts2) == 0:
                continue
            # tile areas rescaled so they sum to the polygon area
            a = np.full(len(pts2), f.area / len(pts2))
            P = f.vertices[0] + pts2[:, :1] * f.u + pts2[:, 1:] * f.v
            centers.append(P)
            fids.append(np.full(len(P), fi))
            areas.append(a)
        if not centers:
            return np.zeros((0, 3)), np.zeros(0, dtype=int), np.zeros(0)
        return np.concatenate(centers), np.concatenate(fids), np.concatenate(areas)

    def check_point(self, p, label="point"):
        """Reject points lying on a facet or inside a wall slab."""
        p = np.asarray(p, dtype=float)
        for fi, f in enumerate(self.facets):
            mat = self.materials[f.material]
            half = 0.0 if mat.pec else mat.thickness_m / 2.0
            if abs(p @ f.normal - f.offset) <= max(GEOM_TOL, half) and f.contains(p):
                raise ValueError(f"{label} ({p[0]:g}, {p[1]:g}, {p[2]:g}) lies inside facet {fi} ({f.tag})")


def build_acceleration(scene: Scene) -> FacetIndex:
    return FacetIndex(scene.facets, [not scene.materials[f.material].is_penetrable for f in scene.facets])


def intersect_segment(a, b, scene: Scene, exclude=(), index: FacetIndex | None = None):
    """Ordered hits (facet id, point, t) of segment a->b with scene facets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b - a) == 0:
        raise ValueError("segment endpoints coincide")
    idx = index if index is not None else scene.index
    ex = np.array([sorted(exclude)], dtype=int) if exclude else None
    _, fi, t, P = idx.crossings(a[None], b[None], ex)
    order = np.lexsort((fi, t))
    return [(int(fi[i]), P[i], float(t[i])) for i in order]


def box_facets(lo, hi, material="metal", inward=True, tags=None):
    """Six rectangles of an axis-aligned box; normals point inward by default."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    quads = {
        "floor": [(x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0)],
        "ceiling": [(x0, y0, z1), (x0, y1, z1), (x1, y1, z1), (x1, y0, z1)],
        "wall_y0": [(x0, y0, z0), (x0, y0, z1), (x1, y0, z1), (x1, y0, z0)],
        "wall_y1": [(x0, y1, z0), (x1, y1, z0), (x1, y1, z1), (x0, y1, z1)],
        "wall_x0": [(x0, y0, z0), (x0, y1, z0), (x0, y1, z1), (x0, y0, z1)],
        "wall_x1": [(x1, y0, z0), (x1, y0, z1), (x1, y1, z1), (x1, y1, z0)],
    }
    out = []
    for tag, q in quads.items():
        mat = material[tag] if isinstance(material, dict) else material
        verts = q if inward else q[::-1]
        out.append(Facet(verts, mat, False, tag.split("_")[0]))
    return out
