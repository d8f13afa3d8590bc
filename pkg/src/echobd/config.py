"""JSON model/profile configuration (schema version 1).

Example::

    {
      "schema": 1,
      "orbits": [{"name": "g1", "kind": "elliptic", "action": 2.0, "page_degree": 1}],
      "differentials": {"d_flat": {"g2": ["e*g1"]}, "d_prime": {}},
      "profiles": [{"builder": "alpha_delta", "delta": {"surrogate": 0.0707}}],
      "scenario": {"j_max": 6, "m_max": 6, "guard": 2, "seed": 1}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .complexbuilder import NModel, boundary_orbits
from .errors import ConfigError, EchobdError
from .orbitsets import SimpleOrbit, parse_monomial
from .reebprofiles import ReebProfile, profile_from_dict

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema", "name", "orbits", "boundary_actions", "differentials", "profiles", "scenario"}
_SCENARIO_KEYS = {"j_max", "m_max", "guard", "seed", "seeds", "count", "r_list", "n_max", "L", "q_max"}


@dataclass(frozen=True)
class ScenarioParams:
    j_max: int = 6
    m_max: int = 6
    guard: int = 2
    seed: int = 1
    count: int = 20
    r_list: tuple[float, ...] = (1.4142, 14.142, 141.42)
    n_max: int = 10
    L: float = 50.0
    q_max: int = 100


@dataclass(frozen=True)
class ModelConfig:
    name: str = "N"
    orbits: tuple[SimpleOrbit, ...] = ()
    boundary_actions: Optional[Mapping[str, float]] = None
    d_flat: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    d_prime: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    profiles: tuple[ReebProfile, ...] = ()
    scenario: ScenarioParams = ScenarioParams()

    def nmodel(self) -> NModel:
        bnd = boundary_orbits(self.boundary_actions)
        table = {o.name: o for o in self.orbits}
        table["e"], table["h"] = bnd["e"], bnd["h"]

        def resolve(kind: str, data: Mapping[str, tuple[str, ...]]):
            out = []
            for src, tgts in data.items():
                s = _mono(src, table, f"{kind} source")
                ts = [t for t in (_mono(x, table, f"{kind} target of {src}") for x in tgts) if t is not None]
                if s is not None:
                    out.append((s, ts))
            return out

        try:
            return NModel(self.orbits, resolve("d_flat", self.d_flat), resolve("d_prime", self.d_prime),
                          e=bnd["e"], h=bnd["h"], name=self.name)
        except EchobdError as exc:
            raise ConfigError(f"model {self.name!r} is not admissible: {exc}") from exc


def _mono(text: str, table: Mapping[str, SimpleOrbit], where: str):
    try:
        return parse_monomial(text, table)
    except KeyError as exc:
        raise ConfigError(f"{where}: {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _orbit(d: Mapping) -> SimpleOrbit:
    unknown = set(d) - {"name", "kind", "action", "page_degree", "eta_class", "cz"}
    if unknown:
        raise ConfigError(f"orbit declaration has unknown keys {sorted(unknown)}")
    try:
        cz = d.get("cz")
        prof = tuple(sorted((int(k), int(v)) for k, v in cz.items())) if cz else None
        return SimpleOrbit(str(d["name"]), str(d["kind"]), float(d["action"]), int(d.get("page_degree", 1)),
                           int(d.get("eta_class", 0)), prof)
    except KeyError as exc:
        raise ConfigError(f"orbit declaration missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_from_dict(d: Mapping[str, Any]) -> ModelConfig:
    if not isinstance(d, Mapping):
        raise ConfigError("configuration must be a JSON object")
    if d.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {d.get('schema')!r}; expected {SCHEMA_VERSION}")
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    orbits = tuple(_orbit(o) for o in d.get("orbits", ()))
    names = [o.name for o in orbits]
    if len(set(names)) != len(names):
        raise ConfigError("orbit names must be unique")
    diffs = d.get("differentials", {})
    if set(diffs) - {"d_flat", "d_prime"}:
        raise ConfigError("differentials may only contain d_flat and d_prime")
    d_flat = {str(k): tuple(v) for k, v in diffs.get("d_flat", {}).items()}
    d_prime = {str(k): tuple(v) for k, v in diffs.get("d_prime", {}).items()}
    sc = dict(d.get("scenario", {}))
    if set(sc) - _SCENARIO_KEYS:
        raise ConfigError(f"unknown scenario keys {sorted(set(sc) - _SCENARIO_KEYS)}")
    if "seeds" in sc:
        seeds = list(sc.pop("seeds"))
        sc.setdefault("seed", seeds[0] if seeds else 1)
        sc.setdefault("count", len(seeds))
    if "r_list" in sc:
        sc["r_list"] = tuple(float(r) for r in sc["r_list"])
    try:
        profiles = tuple(profile_from_dict(p) for p in d.get("profiles", ()))
    except EchobdError as exc:
        raise ConfigError(f"invalid profile: {exc}") from exc
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid profile: {exc!r}") from exc
    cfg = ModelConfig(str(d.get("name", "N")), orbits, d.get("boundary_actions"), d_flat, d_prime, profiles,
                      ScenarioParams(**sc))
    if orbits or d_flat or d_prime:
        cfg.nmodel()   # admissibility is checked on load
    return cfg


def load_config(path: Union[str, Path]) -> ModelConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return config_from_dict(raw)


def nmodel_to_dict(n: NModel, scenario: Optional[Mapping] = None) -> dict:
    def orbit(o: SimpleOrbit) -> dict:
        out = {"name": o.name, "kind": o.kind, "action": o.action, "page_degree": o.page_degree}
        if o.eta_class:
            out["eta_class"] = o.eta_class
        return out

    out = {
        "schema": SCHEMA_VERSION,
        "name": n.name,
        "orbits": [orbit(o) for o in n.interior],
        "differentials": {
            "d_flat": {str(s): [str(t) for t in ts] for s, ts in n.d_flat},
            "d_prime": {str(s): [str(t) for t in ts] for s, ts in n.d_prime},
        },
    }
    if scenario:
        out["scenario"] = dict(scenario)
    return out


def dumps(d: Mapping) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"
