"""Command-line interface: ``mmwrt <command> ...``.

Every command writes into ``<out>/<command>/<name>/`` together with a
``manifest.json``. Outputs carry the manifest hash (a JSON field, or a leading
``#`` comment in CSV files). Exit codes: 0 success, 1 input error,
2 numerical failure, 3 partial result with warnings.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np
import scipy.stats

from . import __version__, baselines, em, metrics, reports, tracer
from .reports import FormatError, fmt
from .scenario import FIXTURES, Scenario, ScenarioError, fixture_path, load_scenario, with_trace

OK, INPUT_ERROR, NUMERICAL_FAILURE, PARTIAL = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# run bookkeeping


class Run:
    """Output directory of one command plus its manifest."""

    def __init__(self, root, command: str, name: str, scenario_ref: str, inputs, overrides: dict):
        self.dir = Path(root) / command / name
        self.files: dict = {}
        h = "".join(reports.sha256_file(p) for p in inputs)
        self.manifest = {
            "command": command,
            "scenario": scenario_ref,
            "config_overrides": overrides,
            "output_dir": f"{command}/{name}",
            "version": __version__,
            "input_hash": reports.sha256_bytes(h.encode()),
        }
        self.hash = reports.sha256_bytes(reports.dumps_json(self.manifest).encode())

    def json(self, rel: str, obj: dict) -> None:
        obj = dict(obj, manifest_hash=self.hash)
        text = reports.dumps_json(obj)
        reports.write_atomic(self.dir / rel, text)
        self.files[rel] = reports.sha256_bytes(text.encode())

    def csv(self, rel: str, header, rows) -> None:
        text = reports.csv_text(header, rows, comment=f"manifest_hash={self.hash}")
        reports.write_atomic(self.dir / rel, text)
        self.files[rel] = reports.sha256_bytes(text.encode())

    def finish(self, status: int) -> int:
        m = dict(self.manifest)
        m["manifest_hash"] = self.hash
        m["files"] = dict(sorted(self.files.items()))
        m["exit_status"] = status
        m["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        reports.write_json(self.dir / "manifest.json", m)
        print(f"wrote {len(self.files)} file(s) to {self.dir}")
        return status


def _scenario_inputs(ref: str) -> list:
    p = Path(ref)
    if not p.exists() and ref in FIXTURES:
        p = fixture_path(ref)
    return [p]


def _ftag(f: float) -> str:
    return f"{f:g}GHz"


# ---------------------------------------------------------------------------
# scenario selection and tracing


def _parse_overrides(items) -> dict:
    out = {}
    fields = {f.name: f for f in dataclasses.fields(tracer.TraceConfig)}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"--config {item!r}: expected KEY=VALUE")
        k, v = item.split("=", 1)
        k = k.strip()
        if k not in fields:
            raise InputError(f"--config {k}: unknown trace setting")
        try:
            val = json.loads(v)
        except json.JSONDecodeError:
            val = v
        out[k] = val
    return out


def _load(args) -> tuple:
    scn = load_scenario(args.scenario)
    overrides = _parse_overrides(getattr(args, "config", None))
    if overrides:
        try:
            scn = with_trace(scn, **overrides)
        except (TypeError, ValueError) as exc:
            raise InputError(f"--config: {exc}") from None
    return scn, overrides


def _select(scn: Scenario, args) -> tuple:
    tx = scn.tx[0]
    if getattr(args, "tx", None):
        tx = next((t for t in scn.tx if t.id == args.tx), None)
        if tx is None:
            raise InputError(f"--tx {args.tx}: no such transmitter in {scn.name}")
    rxs = list(scn.rx)
    if getattr(args, "rx", None):
        known = {r.id: r for r in scn.rx}
        bad = [r for r in args.rx if r not in known]
        if bad:
            raise InputError(f"--rx {', '.join(bad)}: no such receiver in {scn.name}")
        rxs = [known[r] for r in args.rx]
    freqs = list(getattr(args, "freq", None) or scn.freqs_GHz)
    return tx, rxs, freqs


def _sweep(scn: Scenario, tx, rxs, freqs, workers):
    cfg = dataclasses.replace(scn.trace_config, tx_polarization=tx.antenna.polarization)
    res = tracer.sweep(scn.scene, tx.pos, [(r.id, r.pos) for r in rxs], freqs, cfg, workers=workers, tx_id=tx.id)
    return [(r, f, res[i * len(freqs) + j]) for i, r in enumerate(rxs) for j, f in enumerate(freqs)]


def _link_status(links) -> int:
    failed = [res for _, _, res in links if res.error]
    for res in failed:
        _warn(f"link {res.tx_id}->{res.rx_id} @ {res.freq_GHz:g} GHz failed: {res.error}")
    for _, _, res in links:
        if res.flags.get("candidates_capped"):
            _warn(f"link {res.tx_id}->{res.rx_id}: candidate budget exhausted, path set truncated")
        if res.flags.get("degenerate_dropped"):
            _warn(f"link {res.tx_id}->{res.rx_id}: {res.flags['degenerate_dropped']} degenerate path(s) skipped")
    if failed and len(failed) == len(links):
        return NUMERICAL_FAILURE
    if failed or any(res.flags.get("candidates_capped") for _, _, res in links):
        return PARTIAL
    return OK


def rx_pattern(spec, tx_pos, rx_pos) -> em.AntennaPattern:
    """RX antenna from a preset or dict; directive antennas default to facing the TX."""
    toward = np.asarray(tx_pos, float) - np.asarray(rx_pos, float)
    return em.antenna_from_spec(spec, tuple(toward / np.linalg.norm(toward)))


def _scan_horn(spec, freq):
    if spec:
        return em.antenna_from_spec(spec, (1.0, 0.0, 0.0))
    return em.horn(freq)


# ---------------------------------------------------------------------------
# commands


def cmd_trace(args) -> int:
    scn, overrides = _load(args)
    tx, rxs, freqs = _select(scn, args)
    run = Run(args.out, "trace", scn.name, args.scenario, _scenario_inputs(args.scenario), overrides)
    links = _sweep(scn, tx, rxs, freqs, args.workers)
    rows = []
    for r, f, res in links:
        run.json(f"links/{tx.id}_{r.id}_{_ftag(f)}.json", reports.result_to_dict(res))
        d = float(np.linalg.norm(np.subtract(r.pos, tx.pos)))
        if res.error:
            rows.append([r.id, f, d, "", "", "", 0, "failed"])
            continue
        pl = metrics.path_loss(res)
        prx = metrics.received_power(res, tx.antenna, rx_pattern(scn.rx_antenna, tx.pos, r.pos))
        cls = metrics.los_class(scn.scene, tx.pos, r.pos, f)
        rows.append([r.id, f, d, pl, prx, cls, len(res.paths), "ok"])
    run.csv("summary.csv", ["rx_id", "freq_GHz", "distance_m", "PL_dB", "rx_power_dBm", "los_class", "n_paths",
                            "status"], rows)
    return run.finish(_link_status(links))


def cmd_scan(args) -> int:
    scn, overrides = _load(args)
    tx, rxs, freqs = _select(scn, args)
    run = Run(args.out, "scan", scn.name, args.scenario, _scenario_inputs(args.scenario),
              dict(overrides, rx_antenna=args.rx_antenna, step_deg=args.step))
    links = _sweep(scn, tx, rxs, freqs, args.workers)
    as_rows: dict = {}
    for r, f, res in links:
        if res.error:
            continue
        pap = metrics.synthesize_scan(res, _scan_horn(args.rx_antenna, f), args.step, tx.antenna)
        run.csv(f"pap_{_ftag(f)}/{r.id}.csv", list(reports.DIRECTIONAL),
                [[r.id, a, p] for a, p in zip(pap.azimuth_deg, pap.power_dBm)])
        spread = metrics.pap_angle_spread(pap)
        as_rows.setdefault(f, []).append(
            [r.id, r.label, metrics.los_class(scn.scene, tx.pos, r.pos, f), spread,
             math.log10(spread) if spread > 0 else ""])
    for f, rows in as_rows.items():
        run.csv(f"angle_spread_{_ftag(f)}.csv", ["rx_id", "label", "los_class", "AS_deg", "AS_log"], rows)
    return run.finish(_link_status(links))


def _key_cols(key):
    return list(key) if isinstance(key, tuple) else [key]


def cmd_compare(args) -> int:
    kind = reports.sniff_kind(args.measured)
    inputs = reports.csv_files(args.measured)
    scn = None
    if args.simulated:
        if reports.sniff_kind(args.simulated) != kind:
            raise InputError("measured and simulated files use different formats")
        inputs += reports.csv_files(args.simulated)
    elif args.scenario:
        scn, _ = _load(args)
        inputs += _scenario_inputs(args.scenario)
    else:
        raise InputError("compare needs a simulated file or --scenario")
    name = args.name or (scn.name if scn else Path(args.measured).stem)
    run = Run(args.out, "compare", name, args.scenario or "", inputs,
              {"freq_GHz": args.freq, "rx_antenna": args.rx_antenna})

    if kind == "directional":
        measured = reports.read_directional(args.measured)
        header = ["rx_id", "azimuth_deg"]
    else:
        measured, _ = reports.read_narrowband(args.measured)
        header = ["rx_id"]

    pl_rows = []
    status = OK
    if args.simulated:
        simulated = (reports.read_directional(args.simulated) if kind == "directional"
                     else reports.read_narrowband(args.simulated)[0])
    else:
        tx = scn.tx[0]
        f = args.freq or scn.freqs_GHz[0]
        ids = sorted({k[0] if isinstance(k, tuple) else k for k in measured})
        known = {r.id: r for r in scn.rx}
        rxs = [known[i] for i in ids if i in known]
        links = _sweep(scn, tx, rxs, [f], args.workers)
        status = _link_status(links)
        grouped = reports.paps_by_rx(measured) if kind == "directional" else {}
        simulated = {}
        for r, _, res in links:
            if res.error:
                continue
            if kind == "directional":
                az, _ = grouped[r.id]
                pap = metrics.synthesize_scan(res, _scan_horn(args.rx_antenna, f), tx_pattern=tx.antenna,
                                              azimuths_deg=az)
                simulated.update({(r.id, a): p for a, p in zip(az.tolist(), pap.power_dBm.tolist())})
            else:
                simulated[r.id] = metrics.received_power(res, tx.antenna,
                                                         rx_pattern(args.rx_antenna or scn.rx_antenna, tx.pos, r.pos))
            pl_rows.append([r.id, r.label, float(np.linalg.norm(np.subtract(r.pos, tx.pos))), metrics.path_loss(res),
                            metrics.los_class(scn.scene, tx.pos, r.pos, f)])

    rep = metrics.compare(measured, simulated, name)
    if rep.unmatched:
        _warn(f"{len(rep.unmatched)} unmatched key(s): {', '.join(rep.unmatched[:5])}"
              + (" ..." if len(rep.unmatched) > 5 else ""))
        status = max(status, PARTIAL)
    if not rep.keys:
        raise InputError("no keys in common between measured and simulated data")
    err = rep.error_dB
    run.csv("comparison.csv", header + ["measured_dBm", "simulated_dBm", "error_dB"],
            [_key_cols(k) + [m, s, e] for k, m, s, e in zip(rep.keys, rep.measured_dB, rep.simulated_dB, err)])
    per_rx: dict = {}
    for k, e in zip(rep.keys, err):
        per_rx.setdefault(k[0] if isinstance(k, tuple) else k, []).append(e)
    run.json("report.json", {
        "scenario": name,
        "kind": kind,
        "n_matched": len(rep.keys),
        "rmse_dB": rep.rmse_dB,
        "mean_error_dB": float(np.mean(err)),
        "per_rx_rmse_dB": {k: float(np.sqrt(np.mean(np.square(v)))) for k, v in sorted(per_rx.items())},
        "unmatched": rep.unmatched,
    })
    if pl_rows:
        run.csv("pl_distance.csv", ["rx_id", "label", "distance_m", "PL_dB", "los_class"], pl_rows)
    print(f"{name}: RMSE {rep.rmse_dB:.3f} dB over {len(rep.keys)} point(s)")
    return run.finish(status)


def cmd_mechanisms(args) -> int:
    scn, overrides = _load(args)
    tx, rxs, freqs = _select(scn, args)
    run = Run(args.out, "mechanisms", scn.name, args.scenario, _scenario_inputs(args.scenario),
              dict(overrides, rx_antenna=args.rx_antenna))
    links = _sweep(scn, tx, rxs, freqs, args.workers)
    rows: dict = {}
    detail: dict = {}
    for r, f, res in links:
        if res.error:
            continue
        rxp = rx_pattern(args.rx_antenna, tx.pos, r.pos)
        mb = metrics.mechanism_breakdown(res, rxp, tx.antenna)
        rows.setdefault(f, []).append([r.id] + mb.row())
        detail.setdefault(_ftag(f), {})[r.id] = {
            "fractions": dict(sorted(mb.fractions.items())),
            "orders": dict(sorted(mb.orders.items())),
            "total_dBm": mb.total_dBm,
        }
    for f, rr in rows.items():
        run.csv(f"mechanisms_{_ftag(f)}.csv", ["rx_id"] + list(tracer.CLASSES), rr)
    run.json("mechanisms.json", {"classes": list(tracer.CLASSES), "per_freq": detail})
    return run.finish(_link_status(links))


def cmd_baseline(args) -> int:
    d0, d1 = args.d_range
    if not 0 < d0 < d1:
        raise InputError("--d-range needs 0 < MIN < MAX")
    if args.n < 2:
        raise InputError("--n needs at least 2 points")
    classes = ["LoS", "NLoS"] if args.los == "both" else [args.los]
    try:
        for c in classes:
            baselines.asa_params(args.scenario, c, args.fc)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    run = Run(args.out, "baseline", args.scenario, "", [],
              {"scenario": args.scenario, "los": args.los, "fc_GHz": args.fc, "d_range_m": [d0, d1], "n": args.n,
               "h_bs_m": args.h_bs, "h_ut_m": args.h_ut})
    asa = {}
    for c in classes:
        d, pl = baselines.pl_curve(args.scenario, c, args.fc, d0, d1, args.n, args.h_bs, args.h_ut)
        run.csv(f"pl_{c}_{_ftag(args.fc)}.csv", ["d_m", "PL_dB"], zip(d.tolist(), pl.tolist()))
        mu, sigma = baselines.asa_params(args.scenario, c, args.fc)
        asa[c] = {"mu": mu, "sigma": sigma, "shadow_fading_dB": baselines.SHADOW_FADING_DB[(args.scenario, c)]}
        alt = baselines.tabulated_discrepancy(args.scenario, c, args.fc)
        if alt:
            asa[c]["tabulated"] = alt
    run.json(f"asa_{_ftag(args.fc)}.json", {"scenario": args.scenario, "fc_GHz": args.fc, "asa_log10_deg": asa})
    return run.finish(OK)


def cmd_as_stats(args) -> int:
    if args.scenario not in ("InH", "UMi"):
        raise InputError(f"--scenario {args.scenario}: expected InH or UMi")
    table = {}
    inputs = []
    for p in args.pap:
        inputs += reports.csv_files(p)
        for k, v in reports.read_directional(p).items():
            if k in table:
                raise FormatError(f"{p}: duplicate entry for {k}")
            table[k] = v
    name = args.name or Path(args.pap[0]).name
    run = Run(args.out, "as-stats", name, "", inputs,
              {"scenario": args.scenario, "fc_GHz": args.fc, "los_rx": sorted(args.los_rx or [])})
    los_ids = set(args.los_rx or [])
    samples: dict = {}
    rows = []
    for rid, (az, pw) in reports.paps_by_rx(table).items():
        pap = metrics.PowerAngleProfile(rid, az, pw, args.fc)
        s = metrics.AngleSpreadSample(rid, metrics.pap_angle_spread(pap), "LoS" if rid in los_ids else "NLoS")
        if args.los_rx is None:
            s = dataclasses.replace(s, los_class="all")
        rows.append([rid, s.los_class, s.AS_deg, s.AS_log])
        if s.AS_deg > 0:
            samples.setdefault(s.los_class, []).append(s.AS_log)
    run.csv("as_table.csv", ["rx_id", "class", "AS_deg", "AS_log"], rows)
    fit_rows = []
    summary = {}
    for cls in sorted(samples):
        x = samples[cls]
        mu, sigma = metrics.fit_gaussian(x)
        model = ["LoS", "NLoS"] if cls == "all" else [cls]
        for mcls in model:
            m_mu, m_sigma = baselines.asa_params(args.scenario, mcls, args.fc)
            alt = baselines.tabulated_discrepancy(args.scenario, mcls, args.fc)
            fit_rows.append([cls, len(x), mu, sigma, mcls, m_mu, m_sigma, alt.get("sigma", "")])
            summary.setdefault(cls, {"n": len(x), "mu": mu, "sigma": sigma, "model": {}})["model"][mcls] = dict(
                {"mu": m_mu, "sigma": m_sigma}, **({"tabulated": alt} if alt else {}))
        ux, F = metrics.empirical_cdf(x)
        cdf = [["measured", a, b] for a, b in zip(ux.tolist(), F.tolist())]
        for mcls in model:
            m_mu, m_sigma = baselines.asa_params(args.scenario, mcls, args.fc)
            grid = np.linspace(m_mu - 4 * m_sigma, m_mu + 4 * m_sigma, 81)
            cdf += [[f"model_{mcls}", a, b] for a, b in zip(grid.tolist(), scipy.stats.norm.cdf(grid, m_mu, m_sigma).tolist())]
        run.csv(f"cdf_{cls}.csv", ["series", "AS_log", "F"], cdf)
    run.csv("fit.csv", ["class", "n", "mu", "sigma", "model_class", "model_mu", "model_sigma",
                        "model_sigma_tabulated"], fit_rows)
    run.json("fit.json", {"scenario": args.scenario, "fc_GHz": args.fc, "classes": summary})
    return run.finish(OK if samples else PARTIAL)


def cmd_fit_material(args) -> int:
    samples = reports.read_slab_samples(args.csv)
    if args.thickness <= 0:
        raise InputError("--thickness must be positive")
    guess = complex(args.guess[0], args.guess[1])
    try:
        fit = em.fit_permittivity(samples, args.thickness, math.radians(args.angle), args.pol, guess)
    except ValueError as exc:
        raise InputError(f"{args.csv}: {exc}") from None
    name = args.name or Path(args.csv).stem
    run = Run(args.out, "fit-material", name, "", [args.csv],
              {"thickness_m": args.thickness, "angle_deg": args.angle, "pol": args.pol, "guess": list(args.guess)})
    flags = [w for w, on in (("not converged", not fit.converged), ("ambiguous", fit.ambiguous)) if on]
    note = (f"fitted to {len(samples)} samples of {Path(args.csv).name} "
            f"({args.pol}, {args.angle:g} deg); rms residual {fit.residual_rms_dB:.3f} dB"
            + (f"; {', '.join(flags)}" if flags else ""))
    entry = {"name": name, "eps_re": fit.eps_r.real, "eps_im": fit.eps_r.imag, "thickness_m": args.thickness,
             "S": args.S, "alpha": args.alpha, "note": note}
    run.json("material.json", {"material": entry})
    run.json("fit.json", {
        "eps_re": fit.eps_r.real,
        "eps_im": fit.eps_r.imag,
        "residual_rms_dB": fit.residual_rms_dB,
        "converged": fit.converged,
        "ambiguous": fit.ambiguous,
        "restarts": [{"eps_re": e.real, "eps_im": e.imag, "residual_rms_dB": r} for e, r in fit.restarts],
    })
    print(f"{name}: eps_r = {fit.eps_r.real:.4f}{fit.eps_r.imag:+.4f}j, residual {fit.residual_rms_dB:.3f} dB")
    for w in flags:
        _warn(f"fit {w}")
    return run.finish(PARTIAL if flags else OK)


# ---------------------------------------------------------------------------
# argument parsing


def _common(p, scenario=True, trace=True):
    p.add_argument("--out", default="out", help="output root (default: out)")
    if scenario:
        p.add_argument("scenario", help="scenario JSON file or bundled fixture name")
    if trace:
        p.add_argument("--tx", help="transmitter id (default: first)")
        p.add_argument("--rx", nargs="+", help="receiver ids (default: all)")
        p.add_argument("--freq", type=float, nargs="+", help="frequencies in GHz (default: from scenario)")
        p.add_argument("--config", nargs="+", metavar="KEY=VALUE", help="trace setting overrides")
        p.add_argument("--workers", type=int, default=None, help="worker processes (default: $MMWRT_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmwrt", description="mmWave ray tracing and channel statistics.")
    ap.add_argument("--version", action="version", version=f"mmwrt {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="trace all links; channel JSON per link and a summary CSV")
    _common(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("scan", help="synthesize rotating-horn power angle profiles")
    _common(p)
    p.add_argument("--rx-antenna", choices=["horn@27", "horn@38"], default=None,
                   help="scanning horn (default: the horn closest to each frequency)")
    p.add_argument("--step", type=float, default=15.0, help="azimuth step in degrees (default: 15)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("compare", help="pair measured and simulated data and report the RMSE")
    p.add_argument("--out", default="out")
    p.add_argument("measured", help="measurement CSV file or directory")
    p.add_argument("simulated", nargs="?", help="simulated CSV file or directory")
    p.add_argument("--scenario", help="simulate from this scenario instead of reading a file")
    p.add_argument("--freq", type=float, default=None, help="frequency in GHz for --scenario")
    p.add_argument("--rx-antenna", default=None, help="RX antenna preset for --scenario")
    p.add_argument("--name", help="report name (default: scenario name or file stem)")
    p.add_argument("--config", nargs="+", metavar="KEY=VALUE")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("mechanisms", help="received-power share per propagation mechanism")
    _common(p)
    p.add_argument("--rx-antenna", default="isotropic", help="RX antenna preset (default: isotropic)")
    p.set_defaults(func=cmd_mechanisms)

    p = sub.add_parser("baseline", help="3GPP path-loss curves and ASA parameters")
    p.add_argument("--out", default="out")
    p.add_argument("--scenario", required=True, choices=["InH", "UMi"])
    p.add_argument("--los", default="both", choices=["LoS", "NLoS", "both"])
    p.add_argument("--fc", type=float, required=True, help="carrier frequency in GHz")
    p.add_argument("--d-range", type=float, nargs=2, default=(1.0, 100.0), metavar=("MIN", "MAX"))
    p.add_argument("--n", type=int, default=50, help="grid points (default: 50)")
    p.add_argument("--h-bs", type=float, default=10.0)
    p.add_argument("--h-ut", type=float, default=1.5)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("as-stats", help="angle spread table, lognormal fit, ECDF and 3GPP overlay")
    p.add_argument("--out", default="out")
    p.add_argument("pap", nargs="+", help="PAP CSV files or directories")
    p.add_argument("--scenario", default="InH", help="3GPP scenario for the overlay (InH or UMi)")
    p.add_argument("--fc", type=float, required=True)
    p.add_argument("--los-rx", nargs="*", default=None, help="receivers in LoS; others are NLoS")
    p.add_argument("--name")
    p.set_defaults(func=cmd_as_stats)

    p = sub.add_parser("fit-material", help="fit slab permittivity to R/T measurements")
    p.add_argument("--out", default="out")
    p.add_argument("csv", help="CSV with columns freq_GHz,value_dB,kind")
    p.add_argument("--thickness", type=float, required=True, help="slab thickness in m")
    p.add_argument("--angle", type=float, default=0.0, help="incidence angle in degrees")
    p.add_argument("--pol", choices=["TE", "TM"], default="TE")
    p.add_argument("--guess", type=float, nargs=2, default=(4.0, -0.1), metavar=("RE", "IM"))
    p.add_argument("--S", type=float, default=0.0, help="scattering parameter for the material entry")
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--name")
    p.set_defaults(func=cmd_fit_material)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, FormatError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
