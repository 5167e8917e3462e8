"""Acceptance criteria, one test per criterion.

Each test checks its own wall-clock budget. The conftest hook prints one
PASS/FAIL line per criterion in the terminal summary.
"""

import dataclasses
import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from mmwrt import baselines, cli, em, metrics, tracer
from mmwrt.scenario import load_scenario
from mmwrt.scene import Scene
from mmwrt.tracer import TraceConfig

from oracles import angle_spread_bruteforce, fresnel_knife_edge_dB, mirror_paths
from test_em import boundary_jump_dB
from test_metrics import ray, result

SITES = ("unibo_hall", "unibo_courtyard", "jma_office")


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


# -- 1 ---------------------------------------------------------------------------

ASA_CELLS = {
    ("InH", "LoS", 27): (1.5060, 0.2927),
    ("InH", "NLoS", 27): (1.7038, 0.2327),
    ("InH", "LoS", 38): (1.4787, 0.3099),
    ("InH", "NLoS", 38): (1.6880, 0.2499),
    ("UMi", "LoS", 27): (1.6142, 0.3003),
    ("UMi", "NLoS", 27): (1.6942, None),
    ("UMi", "LoS", 38): (1.6027, 0.3023),
    ("UMi", "NLoS", 38): (1.6827, 0.3796),
}


def test_c1_3gpp_asa_parameters():
    with Budget(1.0):
        checked = 0
        for key, (mu, sigma) in ASA_CELLS.items():
            m, s = baselines.asa_params(*key)
            assert round(m, 4) == mu
            checked += 1
            if sigma is not None:
                assert round(s, 4) == sigma
                checked += 1
        assert checked == 15
        # the remaining cell follows the formula; the tabulated value is kept as a flagged discrepancy
        assert round(baselines.asa_params("UMi", "NLoS", 27)[1], 4) == 0.3724
        assert baselines.tabulated_discrepancy("UMi", "NLoS", 27) == {"sigma": 1.6827}


# -- 2 ---------------------------------------------------------------------------


def test_c2_friis_oracle():
    with Budget(1.0):
        a, b = (0.0, 0.0, 1.5), (10.0, 0.0, 1.5)
        res = tracer.trace(Scene.build([]), a, b, 27.0, TraceConfig(ptx_dBm=5.0))
        assert metrics.received_power(res) == pytest.approx(-76.08, abs=0.01)
        htx = em.horn(27.0, boresight=(1.0, 0.0, 0.0))
        hrx = em.horn(27.0, boresight=(-1.0, 0.0, 0.0))
        assert metrics.received_power(res, htx, hrx) == pytest.approx(-35.08, abs=0.01)


# -- 3 ---------------------------------------------------------------------------


def test_c3_image_method_equivalence():
    with Budget(10.0):
        box = load_scenario("pec_box")
        assert len(box.scene.facets) == 6
        spec = dict(max_diffractions=0, max_scatterings=0, max_transmissions=0)
        for rx in box.rx:
            tx = box.tx[0].pos
            res = tracer.trace(box.scene, tx, rx.pos, 27.0, TraceConfig(max_reflections=2, **spec))
            got = {tuple(i.ref for i in p.interactions): p.length_m for p in res.paths}
            ref = mirror_paths(box.scene.facets, tx, rx.pos, 2)
            assert got.keys() == ref.keys()
            assert max(abs(got[k] - ref[k]) for k in ref) <= 1e-9
            first = tracer.trace(box.scene, tx, rx.pos, 27.0, TraceConfig(max_reflections=1, **spec))
            assert sum(p.signature == "R1" for p in first.paths) == 6


# -- 4 ---------------------------------------------------------------------------


def test_c4_em_energy_and_limits():
    with Budget(1.0):
        theta = np.radians(np.arange(0.0, 90.0))
        for eps in (2.0, 4.0, 6.25):
            for d in (1e-3, 5e-3, 0.012, 0.05, 0.2):
                for pol in ("TE", "TM"):
                    R, T = em.slab_coefficients(theta, eps, d, 27.0, pol)
                    assert np.max(np.abs(np.abs(R) ** 2 + np.abs(T) ** 2 - 1.0)) < 1e-9
            r, _ = em.fresnel(math.atan(math.sqrt(eps)), eps, "TM")
            assert abs(r) < 1e-9
            half = em.wavelength(27.0) / (2.0 * math.sqrt(eps))
            assert abs(em.slab(0.0, eps, half, 27.0, "TE").R) < 1e-9


# -- 5 ---------------------------------------------------------------------------


def test_c5_utd_continuity():
    with Budget(5.0):
        for n in (1.5, 2.0):
            for pol in ("TE", "TM"):
                for phip_deg in (20.0, 45.0, 70.0):
                    phip = math.radians(phip_deg)
                    for boundary in (math.pi + phip, math.pi - phip):
                        # samples 0.1 deg apart straddling the boundary
                        assert boundary_jump_dB(n, phip, boundary, pol) < 0.5
        f, d1, d2 = 27.0, 20.0, 10.0
        lam = em.wavelength(f)
        for h in (0.4, 0.8, 1.5):
            src, obs = np.array([-d1, 0.0]), np.array([d2, -h])
            v = h * d1 / (d1 + d2) * math.sqrt(2 * (d1 + d2) / (lam * d1 * d2))
            assert v > 1.0

            def face(p):
                return math.atan2(p[0], -p[1]) % (2 * math.pi)

            s_i, s_d = np.linalg.norm(src), np.linalg.norm(obs)
            d_te, d_tm, A = em.utd_diffraction(2.0, face(obs), face(src), math.pi / 2, s_i, s_d, f)
            free = 1.0 / np.linalg.norm(obs - src)
            for D in (d_te, d_tm):
                rel = 20 * math.log10(abs(D) * A / s_i / free)
                assert abs(rel - fresnel_knife_edge_dB(v)) < 1.0


# -- 6 ---------------------------------------------------------------------------


def test_c6_reciprocity():
    # a receiver subset keeps the run in budget; geometry is shared across frequencies
    stride = {"unibo_hall": 2, "unibo_courtyard": 2, "jma_office": 5}
    worst = 0.0
    with Budget(60.0):
        for name in SITES:
            scn = load_scenario(name)
            cfg, tx = scn.trace_config, scn.tx[0].pos
            for rx in scn.rx[:: stride[name]]:
                gf = tracer.find_geometry(scn.scene, tx, rx.pos, cfg)
                gr = tracer.find_geometry(scn.scene, rx.pos, tx, cfg)
                for f in scn.freqs_GHz:
                    fwd = metrics.received_power(tracer.evaluate(scn.scene, gf, f, cfg))
                    rev = metrics.received_power(tracer.evaluate(scn.scene, gr, f, cfg))
                    worst = max(worst, abs(fwd - rev))
                    assert abs(fwd - rev) < 0.01, f"{name} {rx.id} {f} GHz differs by {abs(fwd - rev):.4f} dB"
    print(f"worst reciprocity difference {worst:.4f} dB")


# -- 7 ---------------------------------------------------------------------------


def test_c7_angle_spread_suite():
    with Budget(5.0):
        assert metrics.angle_spread([123.0], [3.0]) == 0.0
        assert metrics.angle_spread([-45.0, 45.0], [1.0, 1.0]) == 45.0
        rng = np.random.default_rng(7)
        for _ in range(20):
            az = rng.uniform(0.0, 360.0, rng.integers(2, 9))
            w = rng.uniform(0.01, 10.0, len(az))
            base = metrics.angle_spread(az, w)
            assert abs(metrics.angle_spread(az, 37.0 * w) - base) <= 0.5
            assert abs(metrics.angle_spread((az + rng.uniform(0, 360)) % 360.0, w) - base) <= 0.5
            p = rng.permutation(len(az))
            assert abs(metrics.angle_spread(az[p], w[p]) - base) <= 0.5
        res = result([ray("L", 30.0, amp=1e-4), ray("R1", 150.0, amp=5e-5, length=14.0),
                      ray("R2", 260.0, amp=2e-5, length=19.0)])
        pap = metrics.synthesize_scan(res, em.horn(27.0), step_deg=15.0)
        assert len(pap.azimuth_deg) == 24
        w = 10.0 ** (pap.power_dBm / 10.0)
        assert abs(metrics.pap_angle_spread(pap) - angle_spread_bruteforce(pap.azimuth_deg, w, step=0.05)) <= 0.5


# -- 8 ---------------------------------------------------------------------------


def _shares(scn, freqs=None):
    tx = scn.tx[0]
    out = {}
    for f in freqs or scn.freqs_GHz:
        links = tracer.sweep(scn.scene, tx.pos, [(r.id, r.pos) for r in scn.rx], [f], scn.trace_config, tx_id=tx.id)
        for rx, res in zip(scn.rx, links):
            out[rx.id, f] = metrics.mechanism_breakdown(res, em.isotropic(), tx.antenna).fractions
    return out


def test_c8_mechanism_decomposition():
    with Budget(300.0):
        hall = load_scenario("unibo_hall")
        shares = _shares(hall)
        cols = np.array([f.vertices.mean(axis=0) for f in hall.scene.facets if f.tag == "column"])
        centre = cols.mean(axis=0)[:2]
        los = [r for r in hall.rx if r.label == "LoS"]
        # the exempt receiver is the LoS receiver standing next to the column
        exempt = min(los, key=lambda r: np.linalg.norm(np.asarray(r.pos[:2]) - centre)).id
        for f in hall.freqs_GHz:
            for r in los:
                if r.id != exempt:
                    assert shares[r.id, f].get("L", 0.0) >= 0.90, (r.id, f)
            for r in hall.rx:
                fr = shares[r.id, f]
                assert fr.get("D1", 0.0) + fr.get("D2", 0.0) < 0.03, (r.id, f)
        rooms = load_scenario("two_room")
        for (rid, f), fr in _shares(rooms).items():
            if rooms.endpoint(rid).label == "NLoS":
                assert fr.get("T", 0.0) + fr.get("TR", 0.0) >= 0.50, (rid, f)


# -- 9 ---------------------------------------------------------------------------


def test_c9_3gpp_path_loss():
    with Budget(1.0):
        assert baselines.inh_los(10.0, 38.0) == pytest.approx(81.30, abs=0.01)
        assert baselines.umi_los(35.8, 27.0) == pytest.approx(93.66, abs=0.01)
        d = np.logspace(0, 3.5, 400)
        for fn in (baselines.inh_los, baselines.inh_nlos, baselines.umi_los, baselines.umi_nlos):
            for fc in (6.0, 27.0, 38.0, 73.0):
                assert np.all(np.diff(fn(d, fc)) >= -1e-9)
        for fc in (6.0, 27.0, 38.0):
            bp = math.hypot(baselines.breakpoint_distance(fc), 10.0 - 1.5)
            assert abs(baselines.umi_los(bp * (1 + 1e-12), fc) - baselines.umi_los(bp * (1 - 1e-12), fc)) < 1e-6


# -- 10 --------------------------------------------------------------------------


def test_c10_permittivity_fit():
    freqs = np.linspace(26.0, 40.0, 141)
    eps, d = 3.0 - 0.05j, 0.02
    kinds = ["T"] * len(freqs)
    clean = em.slab_power_dB(freqs, eps, d, 0.0, "TE", kinds)
    with Budget(30.0):
        fit = em.fit_permittivity(list(zip(freqs, clean, kinds)), d)
        assert abs(fit.eps_r - eps) / abs(eps) < 0.01
        rng = np.random.default_rng(2024)
        for _ in range(20):
            noisy = clean + rng.normal(0.0, 0.5, len(freqs))
            fit = em.fit_permittivity(list(zip(freqs, noisy, kinds)), d)
            assert abs(fit.eps_r - eps) / abs(eps) < 0.05


# -- 11 --------------------------------------------------------------------------


def _cli_suite(workers):
    w = ["--workers", str(workers)]
    for name in SITES + ("two_room", "pec_box", "empty_room"):
        assert cli.main(["trace", name, *w]) == cli.OK
        assert cli.main(["scan", name, *w]) == cli.OK
        assert cli.main(["mechanisms", name, *w]) == cli.OK
    assert cli.main(["compare", "out/scan/two_room/pap_27GHz", "--scenario", "two_room",
                     "--freq", "27", *w]) == cli.OK
    assert cli.main(["compare", "out/scan/two_room/pap_27GHz", "out/scan/two_room/pap_27GHz",
                     "--name", "self"]) == cli.OK
    assert cli.main(["as-stats", "out/scan/unibo_hall/pap_27GHz", "--fc", "27",
                     "--los-rx", "RX1", "RX3", "RX10", "RX11", "--name", "hall"]) == cli.OK
    for sc in ("InH", "UMi"):
        assert cli.main(["baseline", "--scenario", sc, "--fc", "27"]) == cli.OK
    assert cli.main(["fit-material", "slab.csv", "--thickness", "0.02"]) == cli.OK


def _digest(root: Path) -> dict:
    out = {}
    for p in sorted(root.rglob("*")):
        if not p.is_file():
            continue
        data = p.read_bytes()
        if p.name == "manifest.json":
            m = json.loads(data)
            m.pop("timestamp")
            data = json.dumps(m, sort_keys=True).encode()
        out[p.relative_to(root).as_posix()] = hashlib.sha256(data).hexdigest()
    return out


def test_c11_end_to_end_determinism(tmp_path, monkeypatch):
    freqs = np.linspace(26.0, 40.0, 29)
    kinds = ["R", "T"] * 14 + ["T"]
    vals = em.slab_power_dB(freqs, 3.0 - 0.05j, 0.02, 0.0, "TE", kinds)
    sample = "freq_GHz,value_dB,kind\n" + "".join(f"{float(f)!r},{float(v)!r},{k}\n" for f, v, k in zip(freqs, vals, kinds))
    digests = []
    with Budget(600.0):
        for workers in (1, 2):
            run = tmp_path / f"workers{workers}"
            run.mkdir()
            (run / "slab.csv").write_text(sample)
            monkeypatch.chdir(run)
            _cli_suite(workers)
            digests.append(_digest(run / "out"))
    commands = {k.split("/")[0] for k in digests[0]}
    assert commands == {"trace", "scan", "mechanisms", "compare", "as-stats", "baseline", "fit-material"}
    assert digests[0] == digests[1]
