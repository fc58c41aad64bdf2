"""Scenario configuration documents (JSON) and their validation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

from .errors import ConfigError

SCENARIOS = (
    "cube_spectrum",
    "cube_sweep",
    "two_cubes",
    "two_cubes_opposite",
    "sandwich",
    "embedded",
    "born_run",
    "bound",
    "forward_data",
)
GEOMETRIES = ("cube", "two_cubes", "sandwich", "embedded")

# geometry fields each target shape needs
_GEOMETRY_FIELDS = {
    "cube": ("H_over_lambda", "h_over_lambda", "kappa"),
    "two_cubes": ("H_over_lambda", "h_over_lambda", "kappa", "deltaH_over_H"),
    "sandwich": ("H_over_lambda", "h_over_lambda", "kappa"),
    "embedded": ("H_over_lambda", "H_in_over_lambda", "h_over_lambda", "kappa"),
}
_SCENARIO_GEOMETRY = {
    "cube_spectrum": "cube",
    "cube_sweep": "cube",
    "two_cubes": "two_cubes",
    "two_cubes_opposite": "two_cubes",
    "sandwich": "sandwich",
    "embedded": "embedded",
}
KNOWN_FIELDS = {
    "scenario",
    "H_over_lambda",
    "h_over_lambda",
    "kappa",
    "deltaH_over_H",
    "H_in_over_lambda",
    "a_over_lambda",
    "geometry",
    "tol",
    "max_iter",
    "use_self_energy",
    "cap",
    "probes",
    "outputs",
}
OUTPUT_KEYS = {"spectrum_csv", "summary_json", "table_csv"}

Kappa = Union[float, Tuple[float, float]]


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    H_over_lambda: Optional[Union[float, Tuple[float, ...]]] = None
    h_over_lambda: Optional[float] = None
    kappa: Optional[Kappa] = None
    deltaH_over_H: Optional[float] = None
    H_in_over_lambda: Optional[float] = None
    a_over_lambda: Optional[float] = None
    geometry: str = "cube"
    tol: float = 1e-10
    max_iter: int = 10000
    use_self_energy: bool = True
    cap: Optional[int] = None
    sources: Optional[Tuple[Tuple[float, float, float], ...]] = None
    detectors: Optional[Tuple[Tuple[float, float, float], ...]] = None
    strengths: Optional[Tuple[float, ...]] = None
    outputs: Dict[str, str] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def config_hash(self) -> str:
        return config_hash(self.raw)

    def kappa_pair(self) -> Tuple[float, float]:
        """Contrasts of the two bodies; a scalar kappa means (k, k), or
        (k, -k) for the opposite-contrast scenario."""
        if isinstance(self.kappa, tuple):
            return self.kappa
        if self.scenario == "two_cubes_opposite":
            return (self.kappa, -self.kappa)
        return (self.kappa, self.kappa)


def config_hash(doc: Dict[str, Any]) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _points(value, path, errors):
    if not isinstance(value, list):
        errors.append((path, "expected a list of [x, y, z] points"))
        return None
    pts = []
    for i, p in enumerate(value):
        if not (isinstance(p, list) and len(p) == 3 and all(_is_number(c) for c in p)):
            errors.append((f"{path}[{i}]", "expected [x, y, z] with finite numbers"))
        else:
            pts.append(tuple(float(c) for c in p))
    return tuple(pts)


def parse_config(text: Union[str, bytes, Dict[str, Any]]) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Collects every problem before raising ConfigError, each tagged with the
    offending field path.
    """
    if isinstance(text, dict):
        doc = text
    else:
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([("<document>", f"invalid JSON: {exc}")]) from exc
    if not isinstance(doc, dict):
        raise ConfigError([("<document>", "top level must be an object")])

    errors: List[Tuple[str, str]] = []
    for key in sorted(set(doc) - KNOWN_FIELDS):
        errors.append((key, "unknown field"))

    scenario = doc.get("scenario")
    if scenario is None:
        errors.append(("scenario", "missing required field"))
    elif scenario not in SCENARIOS:
        errors.append(("scenario", f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}"))
        scenario = None

    geometry = doc.get("geometry", "cube")
    if scenario in _SCENARIO_GEOMETRY:
        geometry = _SCENARIO_GEOMETRY[scenario]
    elif geometry not in GEOMETRIES:
        errors.append(("geometry", f"unknown geometry {geometry!r}; expected one of {', '.join(GEOMETRIES)}"))
        geometry = None

    required: Tuple[str, ...] = ()
    if scenario == "bound":
        required = ("a_over_lambda",)
    elif scenario is not None and geometry is not None:
        required = _GEOMETRY_FIELDS[geometry]
    for key in required:
        if key not in doc:
            errors.append((key, "missing required field"))

    values: Dict[str, Any] = {}

    def length(key, allow_list=False, allow_zero=False):
        if key not in doc:
            return
        v = doc[key]
        if allow_list and isinstance(v, list):
            if not v:
                errors.append((key, "list must not be empty"))
                return
            out = []
            for i, x in enumerate(v):
                if not _is_number(x):
                    errors.append((f"{key}[{i}]", "expected a finite number"))
                elif x <= 0:
                    errors.append((f"{key}[{i}]", "length must be positive"))
                else:
                    out.append(float(x))
            values[key] = tuple(out)
            return
        if not _is_number(v):
            errors.append((key, "expected a finite number"))
        elif v < 0 or (v == 0 and not allow_zero):
            errors.append((key, "length must be positive" if not allow_zero else "length must be nonnegative"))
        else:
            values[key] = float(v)

    length("H_over_lambda", allow_list=(scenario == "cube_sweep"))
    length("h_over_lambda")
    length("H_in_over_lambda")
    length("a_over_lambda")
    length("deltaH_over_H", allow_zero=True)

    if "kappa" in doc:
        k = doc["kappa"]
        if _is_number(k):
            values["kappa"] = float(k)
        elif isinstance(k, list) and len(k) == 2 and all(_is_number(x) for x in k):
            values["kappa"] = (float(k[0]), float(k[1]))
        else:
            errors.append(("kappa", "expected a finite number or a pair of numbers"))
        if isinstance(values.get("kappa"), tuple) and scenario in ("cube_spectrum", "cube_sweep", "sandwich"):
            errors.append(("kappa", f"scenario {scenario} takes a single contrast"))
        if scenario == "embedded" and "kappa" in values and not isinstance(values["kappa"], tuple):
            errors.append(("kappa", "embedded needs [kappa_out, kappa_in]"))

    if "tol" in doc:
        if not _is_number(doc["tol"]) or doc["tol"] <= 0:
            errors.append(("tol", "expected a positive number"))
        else:
            values["tol"] = float(doc["tol"])
    if "max_iter" in doc:
        if not isinstance(doc["max_iter"], int) or isinstance(doc["max_iter"], bool) or doc["max_iter"] < 1:
            errors.append(("max_iter", "expected a positive integer"))
        else:
            values["max_iter"] = doc["max_iter"]
    if "cap" in doc:
        if not isinstance(doc["cap"], int) or isinstance(doc["cap"], bool) or doc["cap"] < 1:
            errors.append(("cap", "expected a positive integer"))
        else:
            values["cap"] = doc["cap"]
    if "use_self_energy" in doc:
        if not isinstance(doc["use_self_energy"], bool):
            errors.append(("use_self_energy", "expected true or false"))
        else:
            values["use_self_energy"] = doc["use_self_energy"]

    probes = doc.get("probes")
    if probes is not None:
        if not isinstance(probes, dict):
            errors.append(("probes", "expected an object"))
        else:
            for key in sorted(set(probes) - {"sources", "detectors", "strengths"}):
                errors.append((f"probes.{key}", "unknown field"))
            if "sources" in probes:
                values["sources"] = _points(probes["sources"], "probes.sources", errors)
            if "detectors" in probes:
                values["detectors"] = _points(probes["detectors"], "probes.detectors", errors)
            if "strengths" in probes:
                q = probes["strengths"]
                if not (isinstance(q, list) and all(_is_number(x) for x in q)):
                    errors.append(("probes.strengths", "expected a list of numbers"))
                else:
                    values["strengths"] = tuple(float(x) for x in q)
                    n_src = len(probes.get("sources") or [])
                    if len(q) != n_src:
                        errors.append(("probes.strengths", f"{len(q)} strengths for {n_src} sources"))
    if scenario == "forward_data":
        if not values.get("sources"):
            errors.append(("probes.sources", "forward_data needs at least one source"))
        if not values.get("detectors"):
            errors.append(("probes.detectors", "forward_data needs at least one detector"))

    outputs = doc.get("outputs", {})
    if not isinstance(outputs, dict):
        errors.append(("outputs", "expected an object"))
        outputs = {}
    for key, v in outputs.items():
        if key not in OUTPUT_KEYS:
            errors.append((f"outputs.{key}", "unknown field"))
        elif not isinstance(v, str) or not v:
            errors.append((f"outputs.{key}", "expected a non-empty path"))

    if errors:
        raise ConfigError(errors)

    return ScenarioConfig(
        scenario=scenario,
        geometry=geometry,
        outputs={k: v for k, v in outputs.items() if k in OUTPUT_KEYS},
        raw=doc,
        **values,
    )
