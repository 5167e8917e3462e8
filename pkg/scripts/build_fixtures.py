"""Regenerate the bundled scenario fixtures in src/mmwrt/data.

The three site fixtures are approximate reconstructions: dimensions were
chosen to match the qualitative layout (TX corner, LoS/NLoS split, column,
metal structure, plasterboard rooms), not surveyed geometry.
"""

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "mmwrt" / "data"


def r(x):
    return [round(float(v), 6) for v in x]


def quad(a, b, c, d, material, tag="wall", two_sided=False):
    return {"vertices": [r(a), r(b), r(c), r(d)], "material": material, "two_sided": two_sided, "tag": tag}


def vwall(p, q, z0, z1, material, tag="wall", two_sided=False):
    """Vertical rectangle over segment p -> q; normal is to the left of p -> q."""
    (x0, y0), (x1, y1) = p, q
    return quad((x0, y0, z0), (x0, y0, z1), (x1, y1, z1), (x1, y1, z0), material, tag, two_sided)


def horizontal(poly, z, material, tag, up=True):
    pts = [(x, y, z) for x, y in poly]
    if not up:
        pts = pts[::-1]
    return {"vertices": [r(p) for p in pts], "material": material, "two_sided": False, "tag": tag}


def room(poly, h, wall, floor, ceiling, wall_overrides=None):
    """Closed room over a CCW floor polygon, all normals inward."""
    wall_overrides = wall_overrides or {}
    out = [horizontal(poly, 0.0, floor, "floor", up=True)]
    if ceiling:
        out.append(horizontal(poly, h, ceiling, "ceiling", up=False))
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        out.append(vwall(p, q, 0.0, h, wall_overrides.get(i, wall)))
    return out


def block(poly, h, material, top=True, tag="wall"):
    """Solid prism over a CCW footprint with outward normals (no bottom face)."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        out.append(vwall(q, p, 0.0, h, material, tag))
    if top:
        out.append(horizontal(poly, h, material, "ceiling", up=True))
    return out


def octagon(cx, cy, radius):
    return [(cx + radius * math.cos(math.pi / 8 + k * math.pi / 4), cy + radius * math.sin(math.pi / 8 + k * math.pi / 4))
            for k in range(8)]


def scale_pts(pts, s):
    return [(x * s, y * s) for x, y in pts]


def hall():
    s = 0.7
    h = 5.5
    # footprint with two solid corner cores and a long stub wall, then the column
    outline = scale_pts([(0, 5), (7, 5), (7, 0), (24, 0), (24, 9), (16, 9), (16, 14), (9.3, 14), (9.3, 6),
                         (9.0, 6), (9.0, 14), (0, 14)], s)
    facets = room(outline, h, "travertine", "marble", "concrete",
                  wall_overrides={6: "glass", 10: "glass"})
    facets += block(octagon(13.0 * s, 7.0 * s, 0.8 * s), h, "travertine", top=False, tag="column")
    tx = scale_pts([(22.5, 1.0)], s)[0]
    rx = {
        "RX1": (15.6, 5.0), "RX2": (14.5, 12.8), "RX3": (11.0, 4.2), "RX4": (7.5, 12.5), "RX5": (4.5, 10.5),
        "RX6": (1.5, 12.5), "RX7": (6.0, 13.0), "RX8": (2.5, 13.3), "RX9": (15.3, 13.4), "RX10": (14.3, 8.4),
        "RX11": (17.8, 2.71),
    }
    los = {"RX1", "RX3", "RX10", "RX11"}
    aim = (11.0 * s - tx[0], 6.5 * s - tx[1], 0.0)
    return {
        "name": "unibo_hall",
        "description": "Approximate reconstruction of a large entrance hall: travertine walls, marble floor, "
                       "glass wall on the top side, octagonal travertine column, TX horn in the bottom-right "
                       "corner. Dimensions are illustrative, not surveyed.",
        "materials": [],
        "facets": facets,
        "tx": [{"id": "TX", "pos": r((*tx, 2.1)), "antenna": "horn@27", "boresight": r(aim)}],
        "rx": [{"id": k, "pos": r((x * s, y * s, 2.1)), "label": "LoS" if k in los else "NLoS"}
               for k, (x, y) in rx.items()],
        "config": {"freqs_GHz": [27.0, 38.0], "ptx_dBm": 5.0, "rx_antenna": "horn@27", "trace": {}},
    }


def courtyard():
    h = 15.0
    # yard 60 x 40 with a street canyon opening on the south side (x 26..34)
    outline = [(0, 0), (26, 0), (26, -20), (34, -20), (34, 0), (60, 0), (60, 40), (0, 40)]
    facets = [horizontal(outline, 0.0, "concrete", "floor")]
    n = len(outline)
    for i in range(n):
        p, q = outline[i], outline[(i + 1) % n]
        if (p, q) == ((26, -20), (34, -20)):
            continue  # open end of the street
        facets.append(vwall(p, q, 0.0, h, "outdoor_wall"))
    facets += block([(12, 14), (24, 14), (24, 26), (12, 26)], 12.0, "outdoor_wall", top=False)
    facets += block([(50, 3), (56, 3), (56, 9), (50, 9)], 4.0, "metal", top=True)
    rx = {
        "RX1": (36, 20.3), "RX2": (37, 37.8), "RX3": (11.0, 4.2), "RX4": (16, 32), "RX5": (52, 20),
        "RX6": (22, 30), "RX7": (45, 35), "RX8": (6, 36),
    }
    los = {"RX1", "RX2"}
    return {
        "name": "unibo_courtyard",
        "description": "Approximate reconstruction of an inner courtyard: buildings around an open yard, a "
                       "short street canyon holding the TX, a freestanding building and a metal structure in "
                       "the bottom-right corner. Dimensions are illustrative, not surveyed.",
        "materials": [{"name": "concrete", "eps_re": 5.3, "eps_im": -0.3, "thickness_m": 0.25, "S": 0.4,
                       "alpha": 1, "note": "ground, cluttered outdoor value"}],
        "facets": facets,
        "tx": [{"id": "TX", "pos": [30.0, -15.0, 2.1], "antenna": "horn@27", "boresight": [0.0, 1.0, 0.0]}],
        "rx": [{"id": k, "pos": r((x, y, 2.1)), "label": "LoS" if k in los else "NLoS"} for k, (x, y) in rx.items()],
        "config": {"freqs_GHz": [27.0, 38.0], "ptx_dBm": 5.0, "rx_antenna": "horn@27",
                   "trace": {"scatter_tile_size_m": 1.0}},
    }


def jma():
    h = 2.8
    facets = room([(0, 0), (24, 0), (24, 14), (0, 14)], h, "concrete", "concrete", "concrete")
    pb = "plasterboard"
    walls = [
        ((4, 3), (12, 3)), ((12, 3), (16, 3)),
        ((4, 3), (4, 9)), ((12, 3), (12, 9)), ((16, 3), (16, 9)),
        ((4, 9), (5, 9)), ((6, 9), (12, 9)),  # meeting-room door 5..6
        ((12, 9), (13, 9)), ((14, 9), (16, 9)),  # guest-room door 13..14
    ]
    for p, q in walls:
        facets.append(vwall(p, q, 0.0, h, pb, two_sided=True))
    meeting = [(5.0 + 2.0 * (i % 4), 4.5 + 1.3 * (i // 4)) for i in range(14)]
    guest = [(12.8 + 1.1 * (i % 3), 4.0 + 1.2 * (i // 3)) for i in range(12)]
    corridor = [(6.0 + 2.4 * i, 10.5) for i in range(5)]
    rx = [{"id": f"RX{i + 1}", "pos": r((x, y, 1.2)), "label": "meeting"} for i, (x, y) in enumerate(meeting)]
    rx += [{"id": f"RX{i + 15}", "pos": r((x, y, 1.2)), "label": "guest"} for i, (x, y) in enumerate(guest)]
    rx += [{"id": f"RX{i + 27}", "pos": r((x, y, 1.2)), "label": "corridor"} for i, (x, y) in enumerate(corridor)]
    return {
        "name": "jma_office",
        "description": "Approximate reconstruction of an open-plan office with a plasterboard meeting room and "
                       "guest room in the middle, a corridor in front, a circularly polarized sector array TX "
                       "at the bottom of the meeting room and an omni vertical RX. Dimensions are illustrative.",
        "materials": [],
        "facets": facets,
        "tx": [{"id": "TX", "pos": [8.0, 3.4, 2.0], "antenna": "sector_array", "boresight": [0.0, 1.0, 0.0]}],
        "rx": rx,
        "config": {"freqs_GHz": [27.925], "ptx_dBm": 5.0, "rx_antenna": "omni_v3",
                   "trace": {"max_reflections": 3}},
    }


def empty_room():
    return {
        "name": "empty_room",
        "description": "Free space: no facets, TX and RX 10 m apart.",
        "facets": [],
        "tx": [{"id": "TX", "pos": [0.0, 0.0, 1.5], "antenna": "isotropic"}],
        "rx": [{"id": "RX1", "pos": [10.0, 0.0, 1.5]}],
        "config": {"freqs_GHz": [27.0], "ptx_dBm": 5.0, "rx_antenna": "isotropic"},
    }


def pec_box():
    poly = [(0, 0), (6, 0), (6, 4), (0, 4)]
    return {
        "name": "pec_box",
        "description": "Closed 6 x 4 x 3 m perfectly conducting box.",
        "facets": room(poly, 3.0, "metal", "metal", "metal"),
        "tx": [{"id": "TX", "pos": [1.3, 1.1, 1.2], "antenna": "isotropic"}],
        "rx": [{"id": "RX1", "pos": [4.6, 2.7, 1.9]}, {"id": "RX2", "pos": [2.2, 3.1, 0.8]}],
        "config": {"freqs_GHz": [27.0], "ptx_dBm": 0.0, "rx_antenna": "isotropic",
                   "trace": {"max_reflections": 2, "max_diffractions": 0, "max_scatterings": 0}},
    }


def two_room():
    h = 3.0
    facets = room([(0, 0), (10, 0), (10, 5), (0, 5)], h, "concrete", "concrete", "concrete")
    facets.append(vwall((5, 0), (5, 5), 0.0, h, "plasterboard", tag="partition", two_sided=True))
    return {
        "name": "two_room",
        "description": "Two 5 x 5 m rooms split by a floor-to-ceiling plasterboard wall.",
        "facets": facets,
        "tx": [{"id": "TX", "pos": [2.0, 2.2, 1.5], "antenna": "isotropic"}],
        "rx": [{"id": "RX1", "pos": [3.5, 3.6, 1.2], "label": "LoS"},
               {"id": "RX2", "pos": [7.5, 2.9, 1.4], "label": "NLoS"},
               {"id": "RX3", "pos": [8.7, 1.1, 1.1], "label": "NLoS"}],
        "config": {"freqs_GHz": [27.0], "ptx_dBm": 0.0, "rx_antenna": "isotropic"},
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for fn in (hall, courtyard, jma, empty_room, pec_box, two_room):
        data = fn()
        path = OUT / f"{data['name']}.json"
        path.write_text(json.dumps(data, indent=1) + "\n")
        print(f"wrote {path} ({len(data['facets'])} facets, {len(data['rx'])} rx)")


if __name__ == "__main__":
    main()
