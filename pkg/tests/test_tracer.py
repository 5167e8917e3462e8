import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwrt import em, metrics, tracer
from mmwrt.scenario import load_scenario, with_trace
from mmwrt.scene import Scene, box_facets
from mmwrt.tracer import CLASSES, TraceConfig, signature_of

from oracles import C0, mirror_paths

SPECULAR = dict(max_diffractions=0, max_scatterings=0, max_transmissions=0)


def block_room():
    """Concrete room holding a metal block: convex wedges, tiles, no transmission."""
    facets = list(box_facets((0, 0, 0), (6, 4, 3), "concrete"))
    block = box_facets((2.5, 1.5, 0.0), (3.5, 2.5, 1.5), "metal", inward=False)
    facets += [f for f in block if not (np.abs(f.vertices[:, 2]).max() < 1e-9)]
    return Scene.build(facets, name="block_room")


BLOCK_TX, BLOCK_RX = (1.0, 1.0, 1.2), (5.2, 3.1, 1.0)


def chain_set(res):
    return {p.chain for p in res.paths}


# -- configuration ---------------------------------------------------------------


def test_config_effective_clips_caps():
    c = TraceConfig(max_interactions=1).effective()
    assert (c.max_reflections, c.max_diffractions, c.max_transmissions, c.max_scatterings) == (1, 1, 1, 1)
    s = TraceConfig(mode="simplified", max_transmissions=2).effective()
    assert (s.max_reflections, s.max_diffractions, s.max_scatterings, s.max_transmissions) == (1, 0, 0, 2)


@pytest.mark.parametrize("kw", [dict(mode="fast"), dict(max_reflections=-1), dict(max_scatterings=2),
                                dict(scatter_tile_size_m=0.0)])
def test_config_rejects_invalid(kw):
    with pytest.raises(ValueError):
        TraceConfig(**kw)


# -- signatures ------------------------------------------------------------------


@pytest.mark.parametrize("kinds, sig", [
    ((), "L"), (("R",) * 4, "R4"), (("R", "S"), "RS"), (("S", "R"), "RS"), (("D",), "D1"), (("D", "D"), "D2"),
    (("R", "D"), "RD"), (("D", "R", "R"), "RD"), (("S",), "S"), (("T",), "T"), (("T", "R"), "TR"),
    (("D", "T"), "TD"), (("T", "S"), "TS"), (("T", "T"), "T"),
])
def test_signature_examples(kinds, sig):
    assert signature_of(kinds) == sig
    assert sig in CLASSES


budgeted_kinds = st.tuples(st.integers(0, 5), st.integers(0, 2), st.integers(0, 1), st.integers(0, 2)).map(
    lambda c: list("R" * c[0] + "D" * c[1] + "S" * c[2] + "T" * c[3]))


@given(budgeted_kinds, st.randoms())
def test_signature_is_pure_and_order_insensitive(kinds, rnd):
    rnd.shuffle(kinds)
    assert signature_of(kinds) == signature_of(kinds[::-1]) == signature_of(sorted(kinds))
    assert signature_of(kinds) in CLASSES


# -- free space ------------------------------------------------------------------


def test_empty_scene_friis():
    res = tracer.trace(Scene.build([]), (0, 0, 1.5), (10, 0, 1.5), 27.0, TraceConfig(ptx_dBm=5.0))
    assert len(res.paths) == 1
    p = res.paths[0]
    assert p.signature == "L" and p.interactions == ()
    assert p.power_dBm_iso == pytest.approx(-76.08, abs=0.01)
    assert p.power_dBm_iso == pytest.approx(5.0 - em.fspl_dB(10.0, 27.0), abs=1e-12)
    assert p.delay_s == pytest.approx(10.0 / C0, abs=1e-12)
    assert np.allclose(p.aod_dir, (1, 0, 0)) and np.allclose(p.aoa_dir, (-1, 0, 0))


def test_coincident_endpoints_rejected():
    with pytest.raises(ValueError, match="coincide"):
        tracer.trace(Scene.build([]), (1, 1, 1), (1, 1, 1), 27.0)


def test_rx_inside_wall_rejected():
    scn = load_scenario("two_room")
    with pytest.raises(ValueError, match="rx"):
        tracer.trace(scn.scene, scn.tx[0].pos, (5.0, 2.0, 1.5), 27.0)


# -- image method ----------------------------------------------------------------


@pytest.fixture(scope="module")
def pec_box():
    return load_scenario("pec_box")


def test_box_first_order_count(pec_box):
    cfg = TraceConfig(max_reflections=1, **SPECULAR)
    res = tracer.trace(pec_box.scene, pec_box.tx[0].pos, pec_box.rx[0].pos, 27.0, cfg)
    sigs = [p.signature for p in res.paths]
    assert sigs.count("L") == 1 and sigs.count("R1") == 6 and len(sigs) == 7
    assert sorted(p.interactions[0].ref for p in res.paths[1:]) == list(range(6))


@pytest.mark.parametrize("rx_index", [0, 1])
def test_box_matches_bruteforce_mirror_enumeration(pec_box, rx_index):
    tx, rx = pec_box.tx[0].pos, pec_box.rx[rx_index].pos
    res = tracer.trace(pec_box.scene, tx, rx, 27.0, TraceConfig(max_reflections=2, **SPECULAR))
    got = {tuple(i.ref for i in p.interactions): p.length_m for p in res.paths}
    ref = mirror_paths(pec_box.scene.facets, tx, rx, 2)
    assert set(got) == set(ref)
    assert len([k for k in ref if len(k) == 2]) <= 36
    for k in ref:
        assert got[k] == pytest.approx(ref[k], abs=1e-9)


def test_block_room_matches_bruteforce():
    s = block_room()
    res = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, TraceConfig(max_reflections=2, **SPECULAR))
    got = {tuple(i.ref for i in p.interactions): p.length_m for p in res.paths}
    ref = mirror_paths(s.facets, BLOCK_TX, BLOCK_RX, 2)
    assert () not in ref  # the block hides the direct path
    assert got.keys() == ref.keys()
    for k in ref:
        assert got[k] == pytest.approx(ref[k], abs=1e-9)


def test_reflections_obey_snell(pec_box):
    res = tracer.trace(pec_box.scene, pec_box.tx[0].pos, pec_box.rx[1].pos, 27.0,
                       TraceConfig(max_reflections=4, **SPECULAR))
    idx = pec_box.scene.index
    assert any(p.signature == "R4" for p in res.paths)
    for p in res.paths:
        pts = [np.asarray(res.tx)] + [np.asarray(i.point) for i in p.interactions] + [np.asarray(res.rx)]
        for j, it in enumerate(p.interactions):
            n = idx.normals[it.ref]
            d_in = (pts[j + 1] - pts[j]) / np.linalg.norm(pts[j + 1] - pts[j])
            d_out = (pts[j + 2] - pts[j + 1]) / np.linalg.norm(pts[j + 2] - pts[j + 1])
            a_in = math.acos(min(1.0, abs(d_in @ n)))
            a_out = math.acos(min(1.0, abs(d_out @ n)))
            assert a_in == pytest.approx(a_out, abs=1e-9)
            assert math.degrees(a_in) == pytest.approx(it.angle_deg, abs=1e-9)
            assert np.allclose(d_out, d_in - 2 * (d_in @ n) * n, atol=1e-9)
            assert idx.contains([it.ref], [pts[j + 1]])[0]
            assert abs(idx.side(pts[j + 1][None], [it.ref])[0]) < 1e-6


def test_delay_and_length_consistent(pec_box):
    res = tracer.trace(pec_box.scene, pec_box.tx[0].pos, pec_box.rx[0].pos, 27.0)
    for p in res.paths:
        if p.coherent:
            pts = [res.tx] + [i.point for i in p.interactions] + [res.rx]
            L = sum(np.linalg.norm(np.subtract(b, a)) for a, b in zip(pts[:-1], pts[1:]))
            assert p.length_m == pytest.approx(L, abs=1e-9)
        assert p.delay_s == pytest.approx(p.length_m / C0, abs=1e-12)


def test_pec_reflection_power(pec_box):
    """One PEC bounce: power equals free space over the unfolded length."""
    res = tracer.trace(pec_box.scene, pec_box.tx[0].pos, pec_box.rx[0].pos, 27.0,
                       TraceConfig(max_reflections=1, **SPECULAR))
    for p in res.paths:
        assert p.power_dBm_iso == pytest.approx(-em.fspl_dB(p.length_m, 27.0), abs=1e-9)


# -- caps, budgets, determinism -------------------------------------------------


def caps_strategy():
    return st.tuples(st.integers(0, 3), st.integers(0, 2), st.integers(0, 1), st.integers(0, 1))


def cfg_from(caps):
    r, d, s, t = caps
    return TraceConfig(max_reflections=r, max_diffractions=d, max_scatterings=s, max_transmissions=t,
                       scatter_tile_size_m=1.0)


@given(caps_strategy(), caps_strategy())
@settings(max_examples=15, deadline=None)
def test_budget_monotonicity(a, b):
    lo = tuple(min(x, y) for x, y in zip(a, b))
    hi = tuple(max(x, y) for x, y in zip(a, b))
    s = block_room()
    small = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, cfg_from(lo))
    big = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, cfg_from(hi))
    assert chain_set(small) <= chain_set(big)


@given(caps_strategy())
@settings(max_examples=10, deadline=None)
def test_paths_respect_caps_and_are_unique(caps):
    cfg = cfg_from(caps)
    res = tracer.trace(block_room(), BLOCK_TX, BLOCK_RX, 27.0, cfg)
    chains = [p.chain for p in res.paths]
    assert len(chains) == len(set(chains))
    for p in res.paths:
        k = p.kinds
        assert k.count("R") <= cfg.max_reflections and k.count("D") <= cfg.max_diffractions
        assert k.count("S") <= cfg.max_scatterings and k.count("T") <= cfg.max_transmissions
        assert len(k) <= cfg.max_interactions
        if "D" in k:
            assert k.count("R") + k.count("D") <= cfg.max_mixed_refl_diff_events
        if "S" in k:
            assert k.count("R") <= cfg.max_refl_combined_with_scatter


def test_default_caps_on_fixture():
    scn = load_scenario("unibo_hall")
    rx = scn.rx[0]
    res = tracer.trace(scn.scene, scn.tx[0].pos, rx.pos, 27.0, scn.trace_config)
    for p in res.paths:
        k = p.kinds
        assert len(k) <= 7 and k.count("R") <= 5 and k.count("D") <= 2
        assert k.count("T") <= 2 and k.count("S") <= 1


def test_interaction_points_on_their_objects():
    s = block_room()
    res = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, cfg_from((2, 2, 1, 0)))
    for p in res.paths:
        for it in p.interactions:
            P = np.asarray(it.point)
            if it.kind == "D":
                e = s.edges[it.ref]
                a, b = np.asarray(e.p0), np.asarray(e.p1)
                t = (P - a) @ (b - a) / ((b - a) @ (b - a))
                assert -1e-9 <= t <= 1 + 1e-9
                assert np.linalg.norm(a + t * (b - a) - P) < 1e-6
            elif p.coherent:
                assert abs(s.index.side(P[None], [it.ref])[0]) < 1e-6


def test_determinism():
    s = block_room()
    cfg = cfg_from((3, 2, 1, 0))
    a = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, cfg)
    b = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, cfg)
    assert [p.chain for p in a.paths] == [p.chain for p in b.paths]
    for p, q in zip(a.paths, b.paths):
        assert np.array_equal(p.jones, q.jones) and p.length_m == q.length_m
        assert p.power_dBm_iso == q.power_dBm_iso


def test_paths_sorted_by_class_then_length():
    res = tracer.trace(block_room(), BLOCK_TX, BLOCK_RX, 27.0, cfg_from((2, 1, 1, 0)))
    keys = [(CLASSES.index(p.signature), p.length_m) for p in res.paths]
    assert keys == sorted(keys)


def test_rays_through_wall_junctions_stay_finite():
    # the TX looks straight through the T-junctions of this office's partitions
    scn = load_scenario("jma_office")
    rx = scn.endpoint("RX4")
    res = tracer.trace(scn.scene, scn.tx[0].pos, rx.pos, 27.925, scn.trace_config)
    assert res.flags["degenerate_dropped"] == 0
    assert all(np.all(np.isfinite(p.jones)) for p in res.paths)
    for p in res.paths:
        pts = np.array([i.point for i in p.interactions]).reshape(-1, 3)
        assert np.all(np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-9)


def test_cutoff_drops_weak_paths():
    s = block_room()
    full = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, cfg_from((2, 1, 1, 0)))
    cut = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0,
                       dataclasses.replace(cfg_from((2, 1, 1, 0)), min_path_power_dBm=-90.0))
    assert all(p.power_dBm_iso >= -90.0 for p in cut.paths)
    weak = sum(p.power_dBm_iso < -90.0 for p in full.paths)
    assert cut.flags["cutoff_dropped"] == full.flags["cutoff_dropped"] + weak
    assert len(cut.paths) == len(full.paths) - weak
    assert cut.truncated


def test_candidate_cap_flagged():
    res = tracer.trace(block_room(), BLOCK_TX, BLOCK_RX, 27.0,
                       dataclasses.replace(cfg_from((3, 0, 0, 0)), max_candidates=10))
    assert res.flags["candidates_capped"]


def test_scatter_paths_are_incoherent_bundles():
    res = tracer.trace(block_room(), BLOCK_TX, BLOCK_RX, 27.0, cfg_from((1, 0, 1, 0)))
    sc = [p for p in res.paths if "S" in p.kinds]
    assert sc and all(not p.coherent and p.tiles is not None for p in sc)
    for p in sc:
        pw = np.sum(np.abs(p.tiles.jones @ em.polarization_vector("V")) ** 2)
        assert p.power_dBm_iso == pytest.approx(10 * math.log10(pw), abs=1e-9)


# -- transmission ----------------------------------------------------------------


def test_simplified_and_full_share_transmitted_field():
    scn = load_scenario("two_room")
    tx, rx = scn.tx[0].pos, scn.rx[1].pos
    full = tracer.trace(scn.scene, tx, rx, 27.0, scn.trace_config)
    simple = tracer.trace(scn.scene, tx, rx, 27.0, dataclasses.replace(scn.trace_config, mode="simplified"))
    tf = [p for p in full.paths if p.signature == "T"]
    ts = [p for p in simple.paths if p.signature == "T"]
    assert len(tf) == len(ts) == 1
    assert np.array_equal(tf[0].jones, ts[0].jones)
    assert all(set(p.kinds) <= {"R", "T"} and p.kinds.count("R") <= 1 for p in simple.paths)


def test_transmission_matches_slab():
    scn = load_scenario("two_room")
    tx, rx = np.array(scn.tx[0].pos), np.array(scn.rx[1].pos)
    res = tracer.trace(scn.scene, tx, rx, 27.0, dataclasses.replace(scn.trace_config, max_reflections=0,
                                                                    max_diffractions=0, max_scatterings=0))
    (p,) = [p for p in res.paths if p.signature == "T"]
    d = rx - tx
    theta = math.acos(abs(d[0]) / np.linalg.norm(d))
    pb = scn.scene.materials["plasterboard"]
    s_te = em.slab(theta, pb.eps_r, pb.thickness_m, 27.0, "TE")
    s_tm = em.slab(theta, pb.eps_r, pb.thickness_m, 27.0, "TM")
    expected = -em.fspl_dB(np.linalg.norm(d), 27.0)
    sv = np.linalg.svd(p.jones, compute_uv=False)
    got = sorted(20 * np.log10(sv))
    want = sorted(expected + 20 * np.log10([abs(s_te.T), abs(s_tm.T)]))
    assert got == pytest.approx(want, abs=1e-9)


# -- reciprocity -----------------------------------------------------------------


@pytest.mark.parametrize("name, rx_index", [("pec_box", 0), ("two_room", 1), ("two_room", 2)])
def test_reciprocity_small_fixtures(name, rx_index):
    scn = load_scenario(name)
    a, b = scn.tx[0].pos, scn.rx[rx_index].pos
    cfg = dataclasses.replace(scn.trace_config, max_reflections=min(scn.trace_config.max_reflections, 3),
                              scatter_tile_size_m=1.0)
    fwd = metrics.received_power(tracer.trace(scn.scene, a, b, 27.0, cfg))
    rev = metrics.received_power(tracer.trace(scn.scene, b, a, 27.0, cfg))
    assert fwd == pytest.approx(rev, abs=0.01)


def test_reciprocal_jones_transposes():
    """Swapping the ends reverses every chain and transposes its Jones matrix."""
    s = block_room()
    # no power cutoff: the isotropic V-polarized power used by the cutoff is not itself reciprocal
    cfg = dataclasses.replace(cfg_from((2, 1, 0, 0)), min_path_power_dBm=-1e9)
    fwd = tracer.trace(s, BLOCK_TX, BLOCK_RX, 27.0, cfg)
    rev = tracer.trace(s, BLOCK_RX, BLOCK_TX, 27.0, cfg)
    by_chain = {p.chain[::-1]: p for p in rev.paths}
    assert by_chain.keys() == chain_set(fwd)
    for p in fwd.paths:
        q = by_chain[p.chain]
        assert q.length_m == pytest.approx(p.length_m, abs=1e-9)
        assert np.allclose(q.jones.T, p.jones, rtol=0, atol=1e-9 * np.abs(p.jones).max())


# -- sweep -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def hall_light():
    return with_trace(load_scenario("unibo_hall"), max_reflections=1, max_diffractions=0, max_scatterings=0)


def test_sweep_cardinality_and_order(hall_light):
    scn = hall_light
    rx = [(r.id, r.pos) for r in scn.rx]
    out = tracer.sweep(scn.scene, scn.tx[0].pos, rx, scn.freqs_GHz, scn.trace_config, workers=1)
    assert len(out) == 22
    assert [(r.rx_id, r.freq_GHz) for r in out] == [(i, f) for i, _ in rx for f in scn.freqs_GHz]
    assert tracer.sweep(scn.scene, scn.tx[0].pos, [], scn.freqs_GHz, scn.trace_config) == []


def test_sweep_matches_serial_and_parallel(hall_light):
    scn = hall_light
    rx = [(r.id, r.pos) for r in scn.rx[:4]]
    one = tracer.sweep(scn.scene, scn.tx[0].pos, rx, scn.freqs_GHz, scn.trace_config, workers=1)
    two = tracer.sweep(scn.scene, scn.tx[0].pos, rx, scn.freqs_GHz, scn.trace_config, workers=2)
    serial = [tracer.trace(scn.scene, scn.tx[0].pos, p, f, scn.trace_config, "tx", rid)
              for rid, p in rx for f in scn.freqs_GHz]
    for a, b, c in zip(one, two, serial):
        assert [p.chain for p in a.paths] == [p.chain for p in b.paths] == [p.chain for p in c.paths]
        for p, q, r in zip(a.paths, b.paths, c.paths):
            assert np.array_equal(p.jones, q.jones) and np.array_equal(p.jones, r.jones)


def test_sweep_collects_link_errors(hall_light):
    scn = hall_light
    bad = (scn.rx[0].pos[0], scn.rx[0].pos[1], 0.0)  # on the floor
    out = tracer.sweep(scn.scene, scn.tx[0].pos, [("ok", scn.rx[0].pos), ("bad", bad)], [27.0],
                       scn.trace_config)
    assert out[0].error is None and out[0].paths
    assert out[1].error and "inside facet" in out[1].error and out[1].paths == []
