"""File formats: channel JSON, CSV readers/writers, atomic writes.

Floats are written with ``repr`` so that every number read back equals the
value that was computed. CSV files may start with ``#`` comment lines (the
CLI uses one for the run manifest hash); readers skip them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .tracer import ChannelResult

DIRECTIONAL = ("rx_id", "azimuth_deg", "power_dBm")
NARROWBAND = ("rx_id", "x_m", "y_m", "power_dBm")
SLAB_SAMPLES = ("freq_GHz", "value_dB", "kind")


class FormatError(ValueError):
    """Malformed input file; the message names the file, line and column."""


def num(x):
    """JSON-safe float: non-finite values become None."""
    x = float(x)
    return x if math.isfinite(x) else None


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# atomic writes


def write_atomic(path, data) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    write_atomic(path, dumps_json(obj))


def csv_text(header, rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, comment: str | None = None) -> None:
    write_atomic(path, csv_text(header, rows, comment))


# ---------------------------------------------------------------------------
# readers


def read_rows(path, required) -> list:
    """Rows of a CSV file as dicts, checking the required columns."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from None
    body = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in next(csv.reader([body[0][1]]))]
    missing = [c for c in required if c not in header]
    if missing:
        raise FormatError(f"{path}, line {body[0][0]}: missing column(s) {', '.join(missing)}")
    rows = []
    for lineno, ln in body[1:]:
        vals = next(csv.reader([ln]))
        if len(vals) != len(header):
            raise FormatError(f"{path}, line {lineno}: expected {len(header)} fields, got {len(vals)}")
        row = {h: v.strip() for h, v in zip(header, vals)}
        row["_line"] = lineno
        rows.append(row)
    return rows


def _float(row, col, path):
    try:
        return float(row[col])
    except ValueError:
        raise FormatError(f"{path}, line {row['_line']}, column {col}: not a number: {row[col]!r}") from None


def csv_files(path) -> list:
    """A CSV file, or every *.csv below a directory in sorted order."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.rglob("*.csv"))
        if not files:
            raise FormatError(f"{p}: no CSV files")
        return files
    return [p]


def sniff_kind(path) -> str:
    """'directional' or 'narrowband', from the header of the first file."""
    f = csv_files(path)[0]
    try:
        lines = [ln for ln in f.read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise FormatError(f"{f}: cannot read ({exc.strerror})") from None
    if not lines:
        raise FormatError(f"{f}: empty file")
    header = {h.strip() for h in next(csv.reader([lines[0]]))}
    if set(DIRECTIONAL) <= header:
        return "directional"
    if set(NARROWBAND) <= header:
        return "narrowband"
    raise FormatError(f"{f}, line 1: header matches neither {','.join(DIRECTIONAL)} nor {','.join(NARROWBAND)}")


def read_directional(path) -> dict:
    """(rx_id, azimuth_deg) -> power_dBm from a PAP file or directory."""
    out = {}
    for f in csv_files(path):
        for row in read_rows(f, DIRECTIONAL):
            key = (row["rx_id"], _float(row, "azimuth_deg", f))
            if key in out:
                raise FormatError(f"{f}, line {row['_line']}: duplicate entry for {key}")
            out[key] = _float(row, "power_dBm", f)
    return out


def read_narrowband(path) -> tuple:
    """(rx_id -> power_dBm, rx_id -> (x, y)) from point measurements."""
    power, pos = {}, {}
    for f in csv_files(path):
        for row in read_rows(f, NARROWBAND):
            rid = row["rx_id"]
            if rid in power:
                raise FormatError(f"{f}, line {row['_line']}: duplicate rx_id {rid!r}")
            power[rid] = _float(row, "power_dBm", f)
            pos[rid] = (_float(row, "x_m", f), _float(row, "y_m", f))
    return power, pos


def read_slab_samples(path) -> list:
    """(freq_GHz, value_dB, kind) tuples for permittivity fitting."""
    out = []
    for row in read_rows(path, SLAB_SAMPLES):
        kind = row["kind"].upper()
        if kind not in ("R", "T"):
            raise FormatError(f"{path}, line {row['_line']}, column kind: expected R or T, got {row['kind']!r}")
        out.append((_float(row, "freq_GHz", path), _float(row, "value_dB", path), kind))
    return out


def paps_by_rx(table: dict) -> dict:
    """Group a directional table into rx_id -> (azimuths, powers), azimuth-sorted."""
    grouped: dict = {}
    for (rid, az), p in table.items():
        grouped.setdefault(rid, []).append((az, p))
    return {rid: (np.array([a for a, _ in sorted(v)]), np.array([p for _, p in sorted(v)]))
            for rid, v in sorted(grouped.items())}


# ---------------------------------------------------------------------------
# channel results


def path_to_dict(p) -> dict:
    d = {
        "signature": p.signature,
        "length_m": num(p.length_m),
        "delay_ns": num(p.delay_s * 1e9),
        "power_dBm_iso": num(p.power_dBm_iso),
        "aod_deg": [num(a) for a in p.aod],
        "aoa_deg": [num(a) for a in p.aoa],
        "coherent": bool(p.coherent),
        "interactions": [
            {"kind": i.kind, "ref": int(i.ref), "point": [num(x) for x in i.point], "angle_deg": num(i.angle_deg)}
            for i in p.interactions
        ],
        "jones": [[[num(z.real), num(z.imag)] for z in row] for row in np.asarray(p.jones)],
    }
    if p.tiles is not None:
        d["n_tiles"] = int(len(p.tiles.points))
    return d


def result_to_dict(res: ChannelResult) -> dict:
    return {
        "tx_id": res.tx_id,
        "rx_id": res.rx_id,
        "tx": [num(x) for x in res.tx],
        "rx": [num(x) for x in res.rx],
        "freq_GHz": num(res.freq_GHz),
        "ptx_dBm": num(res.ptx_dBm),
        "tx_polarization": res.tx_polarization,
        "flags": {k: (v if isinstance(v, (bool, int, str)) else num(v)) for k, v in sorted(res.flags.items())},
        "error": res.error,
        "n_paths": len(res.paths),
        "paths": [path_to_dict(p) for p in res.paths],
    }
