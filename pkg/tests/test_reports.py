import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmwrt import reports, tracer
from mmwrt.reports import FormatError
from mmwrt.scenario import load_scenario


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(st.tuples(st.text("abcXYZ0123_", min_size=1, max_size=6), finite, finite), min_size=1, max_size=20,
                unique_by=lambda r: (r[0], r[1])))
def test_directional_csv_round_trip(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("csv") / "pap.csv"
    reports.write_csv(p, reports.DIRECTIONAL, rows, comment="manifest_hash=abc")
    back = reports.read_directional(p)
    assert back == {(r, a): w for r, a, w in rows}


def test_narrowband_round_trip(tmp_path):
    p = tmp_path / "nb.csv"
    reports.write_csv(p, reports.NARROWBAND, [["RX1", 1.0, 2.0, -60.5], ["RX2", 0.1, 0.2, -70.25]])
    power, pos = reports.read_narrowband(p)
    assert power == {"RX1": -60.5, "RX2": -70.25} and pos["RX2"] == (0.1, 0.2)
    assert reports.sniff_kind(p) == "narrowband"


def test_reader_errors_name_line_and_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("rx_id,azimuth_deg,power_dBm\nRX1,0,-60\nRX1,15,oops\n")
    with pytest.raises(FormatError, match=r"line 3, column power_dBm"):
        reports.read_directional(p)
    p.write_text("rx_id,power_dBm\nRX1,-60\n")
    with pytest.raises(FormatError, match="missing column"):
        reports.read_directional(p)
    p.write_text("rx_id,azimuth_deg,power_dBm\nRX1,0,-60\nRX1,0,-61\n")
    with pytest.raises(FormatError, match="duplicate"):
        reports.read_directional(p)
    p.write_text("# only a comment\n")
    with pytest.raises(FormatError, match="empty"):
        reports.sniff_kind(p)
    p.write_text("freq_GHz,value_dB,kind\n27,-3,X\n")
    with pytest.raises(FormatError, match="kind"):
        reports.read_slab_samples(p)


def test_directory_inputs_sorted(tmp_path):
    for name in ("b.csv", "a.csv"):
        reports.write_csv(tmp_path / name, reports.DIRECTIONAL, [[name[0], 0.0, -50.0]])
    assert [f.name for f in reports.csv_files(tmp_path)] == ["a.csv", "b.csv"]
    assert set(reports.read_directional(tmp_path)) == {("a", 0.0), ("b", 0.0)}
    grouped = reports.paps_by_rx({("x", 90.0): 1.0, ("x", 0.0): 2.0})
    assert grouped["x"][0].tolist() == [0.0, 90.0] and grouped["x"][1].tolist() == [2.0, 1.0]


def test_atomic_write_leaves_no_temporaries(tmp_path):
    reports.write_json(tmp_path / "d" / "x.json", {"b": 1, "a": [1.5]})
    assert [p.name for p in (tmp_path / "d").iterdir()] == ["x.json"]
    assert json.loads((tmp_path / "d" / "x.json").read_text()) == {"a": [1.5], "b": 1}


def test_channel_json_round_trip():
    scn = load_scenario("pec_box")
    res = tracer.trace(scn.scene, scn.tx[0].pos, scn.rx[0].pos, 27.0, scn.trace_config)
    d = json.loads(reports.dumps_json(reports.result_to_dict(res)))
    assert d["n_paths"] == len(res.paths) == len(d["paths"])
    for p, q in zip(res.paths, d["paths"]):
        J = np.array([[complex(*z) for z in row] for row in q["jones"]])
        assert np.array_equal(J, p.jones)
        assert q["length_m"] == p.length_m and q["signature"] == p.signature
        assert [i["ref"] for i in q["interactions"]] == [i.ref for i in p.interactions]


def test_non_finite_values_become_null():
    assert reports.num(float("inf")) is None and reports.num(1.25) == 1.25
    with pytest.raises(ValueError):
        reports.dumps_json({"x": float("nan")})
