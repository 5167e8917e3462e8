"""Scenario files: JSON schema, loader and bundled fixtures.

Schema (lengths in meters, frequencies in GHz)::

    {
      "name": "unibo_hall",
      "description": "...",
      "materials": [{"name", "eps_re", "eps_im", "thickness_m", "S", "alpha",
                     "pec"?, "variant"?, "penetrable"?}],
      "facets": [{"vertices": [[x, y, z], ...], "material", "two_sided"?, "tag"?}],
      "tx": [{"id", "pos": [x, y, z], "antenna"?: preset | {...}, "boresight"?: [x, y, z]}],
      "rx": [{"id", "pos": [x, y, z], "label"?}],
      "config": {"freqs_GHz": [...], "ptx_dBm", "rx_antenna"?, "trace"?: {TraceConfig fields}}
    }

Materials listed in the file override the built-in defaults of the same name.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import em
from .scene import Facet, Material, Scene
from .tracer import TraceConfig

FIXTURES = ("unibo_hall", "unibo_courtyard", "jma_office", "empty_room", "pec_box", "two_room")


class ScenarioError(ValueError):
    """Schema violation; the message starts with the offending field path."""


@dataclass(frozen=True)
class Endpoint:
    id: str
    pos: tuple
    antenna: em.AntennaPattern | None = None
    label: str = ""


@dataclass
class Scenario:
    name: str
    scene: Scene
    tx: list
    rx: list
    freqs_GHz: list
    ptx_dBm: float = 0.0
    trace_config: TraceConfig = field(default_factory=TraceConfig)
    rx_antenna: str = "isotropic"
    description: str = ""
    source: str = ""

    def endpoint(self, ident: str) -> Endpoint:
        for e in list(self.tx) + list(self.rx):
            if e.id == ident:
                return e
        raise KeyError(f"no tx/rx with id {ident!r}")


def _req(d, key, where):
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: expected an object")
    if key not in d:
        raise ScenarioError(f"{where}.{key}: required field missing")
    return d[key]


def _vec(v, where):
    try:
        a = [float(x) for x in v]
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: expected 3 numbers") from None
    if len(a) != 3:
        raise ScenarioError(f"{where}: expected 3 numbers")
    return tuple(a)


def _material(d, where) -> Material:
    name = _req(d, "name", where)
    try:
        return Material(
            name=str(name),
            eps_r=complex(float(d.get("eps_re", 1.0)), float(d.get("eps_im", 0.0))),
            thickness_m=float(d.get("thickness_m", 0.1)),
            scattering_S=float(d.get("S", 0.0)),
            scattering_alpha=int(d.get("alpha", 1)),
            pec=bool(d.get("pec", False)),
            scattering_variant=str(d.get("variant", "lambertian")),
            penetrable=d.get("penetrable"),
            note=str(d.get("note", "")),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def scenario_from_dict(data: dict, source: str = "") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>: expected an object")
    mats = {}
    for i, m in enumerate(data.get("materials", [])):
        mat = _material(m, f"materials[{i}]")
        mats[mat.name] = mat
    from .scene import DEFAULT_MATERIALS

    known = dict(DEFAULT_MATERIALS)
    known.update(mats)
    facets = []
    for i, f in enumerate(data.get("facets", [])):
        where = f"facets[{i}]"
        verts = _req(f, "vertices", where)
        mname = _req(f, "material", where)
        if mname not in known:
            raise ScenarioError(f"{where}.material: unknown material {mname!r}")
        try:
            facets.append(Facet([_vec(v, f"{where}.vertices[{j}]") for j, v in enumerate(verts)], mname,
                                bool(f.get("two_sided", False)), str(f.get("tag", "wall"))))
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{where}: {exc}") from None
    scene = Scene.build(facets, mats, name=str(data.get("name", "")))
    tx = []
    for i, t in enumerate(_req(data, "tx", "<root>")):
        where = f"tx[{i}]"
        pos = _vec(_req(t, "pos", where), f"{where}.pos")
        bore = _vec(t.get("boresight", (1.0, 0.0, 0.0)), f"{where}.boresight")
        try:
            ant = em.antenna_from_spec(t.get("antenna"), bore)
        except (ValueError, TypeError) as exc:
            raise ScenarioError(f"{where}.antenna: {exc}") from None
        tx.append(Endpoint(str(t.get("id", f"tx{i + 1}")), pos, ant, str(t.get("label", ""))))
    if not tx:
        raise ScenarioError("tx: at least one transmitter required")
    rx = []
    for i, r in enumerate(_req(data, "rx", "<root>")):
        where = f"rx[{i}]"
        rx.append(Endpoint(str(r.get("id", f"rx{i + 1}")), _vec(_req(r, "pos", where), f"{where}.pos"), None,
                           str(r.get("label", ""))))
    ids = [e.id for e in tx + rx]
    if len(set(ids)) != len(ids):
        raise ScenarioError("rx: duplicate ids")
    cfg = data.get("config", {})
    freqs = [float(f) for f in cfg.get("freqs_GHz", [27.0])]
    try:
        tc = TraceConfig(**cfg.get("trace", {}), ptx_dBm=float(cfg.get("ptx_dBm", 0.0)),
                         tx_polarization=tx[0].antenna.polarization)
    except TypeError as exc:
        raise ScenarioError(f"config.trace: {exc}") from None
    for e in tx + rx:
        try:
            scene.check_point(np.array(e.pos), e.id)
        except ValueError as exc:
            raise ScenarioError(f"{'tx' if e in tx else 'rx'}[{e.id}].pos: {exc}") from None
    return Scenario(
        name=str(data.get("name", Path(source).stem if source else "scenario")),
        scene=scene,
        tx=tx,
        rx=rx,
        freqs_GHz=freqs,
        ptx_dBm=float(cfg.get("ptx_dBm", 0.0)),
        trace_config=tc,
        rx_antenna=cfg.get("rx_antenna", "isotropic"),
        description=str(data.get("description", "")),
        source=source,
    )


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("mmwrt") / "data" / f"{name}.json"))


def load_scenario(path_or_name) -> Scenario:
    """Load a scenario file, or a bundled fixture by name."""
    p = Path(path_or_name)
    if not p.exists() and str(path_or_name) in FIXTURES:
        p = fixture_path(str(path_or_name))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"{p}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data, str(p))


def with_trace(scn: Scenario, **overrides) -> Scenario:
    return dataclasses.replace(scn, trace_config=dataclasses.replace(scn.trace_config, **overrides))
