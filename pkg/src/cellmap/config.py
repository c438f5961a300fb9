"""JSON system definitions: schema validation and construction of library objects."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .cellspace import AxisSpec, CellSpace
from .errors import ConfigError
from .models import (CostDiscretization, CostKind, CostSpec, DiscreteLTI, QuantizedLoop, SampledODE,
                     dc_motor, discretize_zoh, double_integrator, harmonic_oscillator, lqr_gain)
from .quantization import QuantizerSpec, RoundingMode, VectorQuantizerSpec
from .reach import control_lattice, resolve_target

__all__ = ["SCHEMA", "SystemConfig", "load_config", "parse_config", "shipped_configs"]

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_range = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_bits = {"type": "integer", "minimum": 1, "maximum": 24}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["plant", "cellspace"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "plant": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["discrete-lti", "ode"]},
                "A": _matrix,
                "B": _matrix,
                "ode": {"enum": ["double-integrator", "dc-motor", "harmonic-oscillator"]},
                "params": {"type": "object", "additionalProperties": {"type": ["number", "string"]}},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "substeps": {"type": "integer", "minimum": 1},
                "integrator": {"enum": ["rk4", "zoh"]},
            },
        },
        "cellspace": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axes"],
            "properties": {
                "axes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["lo", "hi"],
                        "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                                       "bits": _bits, "cells": {"type": "integer", "minimum": 1}},
                    },
                }
            },
        },
        "quantizers": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ad_bits": _bits,
                "ad_ranges": {"type": "array", "items": _range},
                "da_bits": _bits,
                "da_range": _range,
                "da_on": {"enum": ["input", "bu"]},
                "roundoff_bits": _bits,
                "roundoff_ranges": {"type": "array", "items": _range},
                "mode": {"enum": ["round", "truncate"]},
            },
        },
        "control": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gain": _matrix,
                "lqr": {"type": "object", "additionalProperties": False, "required": ["Q", "R"],
                        "properties": {"Q": _matrix, "R": _matrix}},
                "control_set": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"bits": _bits, "range": _range, "values": {"type": "array"}},
                },
            },
        },
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["quadratic-x1u", "minimum-time"]},
                "discretize": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["levels", "lo", "hi"],
                    "properties": {"levels": {"type": "integer", "minimum": 1}, "lo": {"type": "number"},
                                   "hi": {"type": "number"}, "label_offset": {"type": "number"}},
                },
            },
        },
        "target": {
            "oneOf": [
                {"const": "origin"},
                {"type": "object", "additionalProperties": False, "required": ["cells"],
                 "properties": {"cells": {"type": "array", "minItems": 1,
                                          "items": {"type": "array", "items": {"type": "integer"}}}}},
            ]
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "A_delta": _matrix,
                "B_delta": _matrix,
                "baseline": {"type": "number"},
                "closed_loop": {"type": "boolean"},
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"x0": {"type": "array", "items": {"type": "number"}},
                           "steps": {"type": "integer", "minimum": 0},
                           "guard_factor": {"type": "number", "exclusiveMinimum": 0}},
        },
        "scm": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"one_based": {"type": "boolean"}},
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


@dataclass
class SystemConfig:
    """Validated configuration plus the objects built from it."""

    raw: dict
    cellspace: CellSpace
    plant: object
    loop: QuantizedLoop
    controls: np.ndarray | None
    cost: CostSpec
    target: np.ndarray
    gain: np.ndarray | None

    @property
    def name(self) -> str:
        return self.raw.get("name", "system")

    def plant_with(self, p: float):
        """Plant with ``A + (p - baseline)*A_delta`` and likewise for ``B`` (linear plants only)."""
        sw = self.raw.get("sweep")
        if sw is None:
            raise ConfigError("$.sweep: section required for parameter sweeps")
        plant = self.plant
        if isinstance(plant, DiscreteLTI):
            A, B = plant.A, plant.B
        else:
            raise ConfigError("$.plant: sweeps need a discrete-lti plant or an ode with integrator 'zoh'")
        dA = np.asarray(sw.get("A_delta", np.zeros_like(A)), dtype=float)
        dB = np.asarray(sw.get("B_delta", np.zeros_like(B)), dtype=float).reshape(B.shape)
        d = p - sw.get("baseline", 0.0)
        return DiscreteLTI(A + d * dA, B + d * dB, plant.T)

    def loop_with(self, p: float) -> QuantizedLoop:
        lp = self.loop
        return QuantizedLoop(self.plant_with(p), lp.gain, lp.ad, lp.da, lp.roundoff, lp.da_on)


def _err(path, msg):
    return ConfigError(f"{path}: {msg}")


def _named_ode(name, params):
    params = dict(params or {})
    if name == "double-integrator":
        return double_integrator()
    if name == "harmonic-oscillator":
        return harmonic_oscillator(float(params.get("omega", 1.0)))
    return dc_motor(float(params.get("tau", 0.283)), float(params.get("k", 0.906)),
                    str(params.get("form", "position")))


def _build_plant(p):
    if p["kind"] == "discrete-lti":
        if "A" not in p:
            raise _err("$.plant", "discrete-lti plant needs A")
        A = np.asarray(p["A"], dtype=float)
        B = np.asarray(p.get("B", np.zeros((len(A), 0))), dtype=float)
        try:
            return DiscreteLTI(A, B if B.size else np.zeros((len(A), 0)), p.get("T"))
        except ValueError as e:
            raise _err("$.plant", str(e)) from e
    if "ode" not in p or "T" not in p:
        raise _err("$.plant", "ode plant needs 'ode' and 'T'")
    ode = _named_ode(p["ode"], p.get("params"))
    if p.get("integrator", "rk4") == "zoh":
        Ad, Bd = discretize_zoh(ode.Ac, ode.Bc, p["T"])
        return DiscreteLTI(Ad, Bd, p["T"])
    return SampledODE(ode, p["T"], p.get("substeps", 4))


def parse_config(raw: dict) -> SystemConfig:
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{e.json_path}: {e.message}")
    axes = []
    for i, a in enumerate(raw["cellspace"]["axes"]):
        if ("bits" in a) == ("cells" in a):
            raise _err(f"$.cellspace.axes[{i}]", "give exactly one of 'bits' or 'cells'")
        if not a["hi"] > a["lo"]:
            raise _err(f"$.cellspace.axes[{i}]", "hi must exceed lo")
        axes.append(AxisSpec(a["lo"], a["hi"], a["cells"] if "cells" in a else 2 ** a["bits"]))
    cs = CellSpace(axes)
    plant = _build_plant(raw["plant"])
    if plant.n != cs.ndim:
        raise _err("$.cellspace.axes", f"plant has {plant.n} states but the cell space has {cs.ndim} axes")

    box = [(a.lo, a.hi) for a in axes]
    q = raw.get("quantizers", {})
    mode = RoundingMode(q.get("mode", "round"))
    ad = da = roundoff = None
    if "ad_bits" in q:
        ranges = q.get("ad_ranges", box)
        if len(ranges) != cs.ndim:
            raise _err("$.quantizers.ad_ranges", "one range per state axis required")
        ad = VectorQuantizerSpec.from_word_lengths([q["ad_bits"]] * cs.ndim, ranges, mode)
    if "roundoff_bits" in q:
        ranges = q.get("roundoff_ranges", box)
        if len(ranges) != cs.ndim:
            raise _err("$.quantizers.roundoff_ranges", "one range per state axis required")
        roundoff = VectorQuantizerSpec.from_word_lengths([q["roundoff_bits"]] * cs.ndim, ranges, mode)

    ctl = raw.get("control", {})
    if "da_bits" in q:
        lo, hi = q.get("da_range", ctl.get("control_set", {}).get("range", [-1, 1]))
        da = QuantizerSpec.from_word_length(q["da_bits"], lo, hi, mode)
    if "gain" in ctl and "lqr" in ctl:
        raise _err("$.control", "give either 'gain' or 'lqr', not both")
    gain = None
    if "gain" in ctl:
        gain = np.asarray(ctl["gain"], dtype=float)
    elif "lqr" in ctl:
        if not isinstance(plant, DiscreteLTI):
            raise _err("$.control.lqr", "LQR design needs a discrete-lti plant or integrator 'zoh'")
        gain = lqr_gain(plant.A, plant.B, ctl["lqr"]["Q"], ctl["lqr"]["R"])
    controls = None
    if "control_set" in ctl:
        cset = ctl["control_set"]
        if "values" in cset:
            controls = np.asarray(cset["values"], dtype=float).reshape(len(cset["values"]), -1)
        elif "bits" in cset:
            lo, hi = cset.get("range", [-1, 1])
            controls = control_lattice(cset["bits"], lo, hi)
        else:
            raise _err("$.control.control_set", "needs 'bits' or 'values'")
        if controls.shape[1] != plant.m:
            raise _err("$.control.control_set", f"controls must have {plant.m} components")
    try:
        loop = QuantizedLoop(plant, gain, ad, da, roundoff, q.get("da_on", "input"))
    except ValueError as e:
        raise _err("$.control", str(e)) from e

    c = raw.get("cost", {"kind": "quadratic-x1u"})
    period = getattr(plant, "T", None) or 1.0
    disc = CostDiscretization(**c["discretize"]) if "discretize" in c else None
    cost = CostSpec(CostKind(c["kind"]), period, disc)

    t = raw.get("target", "origin")
    try:
        target = resolve_target("origin" if t == "origin" else [tuple(z) for z in t["cells"]], cs)
    except (IndexError, ValueError) as e:
        raise _err("$.target", str(e)) from e
    return SystemConfig(raw, cs, plant, loop, controls, cost, target, gain)


def load_config(path_or_name) -> SystemConfig:
    """Load a JSON file, or a shipped config by bare name (e.g. ``"bangbang-T005"``)."""
    p = Path(path_or_name)
    if not p.exists():
        shipped = shipped_configs()
        if str(path_or_name) in shipped:
            p = shipped[str(path_or_name)]
        else:
            raise ConfigError(f"$: no such config file or shipped config: {path_or_name}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"$: invalid JSON ({e})") from e
    return parse_config(raw)


def shipped_configs() -> dict[str, Path]:
    root = resources.files("cellmap") / "configs"
    return {Path(str(f)).stem: Path(str(f)) for f in root.iterdir() if str(f).endswith(".json")}
