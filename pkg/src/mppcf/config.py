"""JSON scenario configs.

Keys mirror :class:`~mppcf.simulator.ScenarioConfig`. Speeds are plain numbers
in the document's ``units`` (``"m/s"`` by default, or ``"km/h"``), or objects
``{"value": 120, "unit": "km/h"}``. Anything left out takes the stationary-leader
replication defaults.
"""

from __future__ import annotations

import json
from dataclasses import fields

from .core import PRESETS, ModelParams, PairState, kmh_to_ms, validate_params
from .simulator import (
    MONITORS,
    ConstantSpeed,
    PiecewiseBraking,
    Recorded,
    ScenarioConfig,
    Stationary,
)

UNITS = ("m/s", "km/h")
PARAM_KEYS = {f.name for f in fields(ModelParams)}
SPEED_PARAMS = {"mu"}
INITIAL_KEYS = {"t", "x_follower", "x_leader", "v", "v_leader"}
SPEED_INITIAL = {"v", "v_leader"}
TOP_KEYS = {"units", "preset", "params", "initial", "leader", "duration", "controller", "monitors",
            "stride", "stop_detection"}
LEADER_KEYS = {
    "stationary": set(),
    "constant_speed": {"v"},
    "piecewise_braking": {"segments"},
    "recorded": {"times", "speeds"},
}


class ConfigError(ValueError):
    pass


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _speed(value, key, units):
    if isinstance(value, dict):
        extra = set(value) - {"value", "unit"}
        if extra or "value" not in value:
            raise ConfigError(f"{key}: speed objects need 'value' and optional 'unit'")
        units = value.get("unit", units)
        value = value["value"]
    if units not in UNITS:
        raise ConfigError(f"{key}: unknown unit {units!r}")
    x = _number(value, key)
    return kmh_to_ms(x) if units == "km/h" else x


def _unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}{'.' if where else ''}{key}: unknown key")


def parse_params(obj: dict, units: str = "m/s", base: ModelParams = None) -> ModelParams:
    _unknown(obj, PARAM_KEYS, "params")
    values = (base or ModelParams()).to_dict()
    if "tau_react" in obj and "tau_react2" not in obj:
        values["tau_react2"] = None
    for key, raw in obj.items():
        if key == "tau_react2" and raw is None:
            values[key] = None
        elif key in SPEED_PARAMS:
            values[key] = _speed(raw, f"params.{key}", units)
        else:
            values[key] = _number(raw, f"params.{key}")
    return validate_params(ModelParams(**values))


def _leader(obj, units):
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError("leader: expected an object with a 'type'")
    kind = obj["type"]
    if kind not in LEADER_KEYS:
        raise ConfigError(f"leader.type: unknown profile {kind!r}")
    _unknown(obj, LEADER_KEYS[kind] | {"type", "compliant"}, "leader")
    compliant = obj.get("compliant", True)
    if not isinstance(compliant, bool):
        raise ConfigError("leader.compliant: expected true or false")
    try:
        if kind == "stationary":
            return Stationary(compliant)
        if kind == "constant_speed":
            return ConstantSpeed(_speed(obj.get("v", 0.0), "leader.v", units), compliant)
        if kind == "piecewise_braking":
            segs = obj.get("segments", [])
            if not isinstance(segs, list) or any(not isinstance(s, list) or len(s) != 2 for s in segs):
                raise ConfigError("leader.segments: expected a list of [t_start, decel] pairs")
            return PiecewiseBraking(tuple((_number(a, "leader.segments"), _number(b, "leader.segments"))
                                          for a, b in segs), compliant)
        times = obj.get("times", [])
        speeds = obj.get("speeds", [])
        if not isinstance(times, list) or not isinstance(speeds, list):
            raise ConfigError("leader.times/speeds: expected lists")
        return Recorded(tuple(_number(x, "leader.times") for x in times),
                        tuple(_speed(x, "leader.speeds", units) for x in speeds), compliant)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"leader: {exc}") from exc


def config_from_dict(doc: dict) -> ScenarioConfig:
    _unknown(doc, TOP_KEYS, "")
    units = doc.get("units", "m/s")
    if units not in UNITS:
        raise ConfigError(f"units: unknown unit {units!r}")
    preset = doc.get("preset", "paper-5.2")
    if preset not in PRESETS:
        raise ConfigError(f"preset: unknown preset {preset!r}")
    params = parse_params(doc.get("params", {}), units, PRESETS[preset])

    init = doc.get("initial", {})
    _unknown(init, INITIAL_KEYS, "initial")
    values = {"t": 0.0, "x_follower": 0.0, "x_leader": 2500.0, "v": 0.0, "v_leader": 0.0}
    for key, raw in init.items():
        values[key] = _speed(raw, f"initial.{key}", units) if key in SPEED_INITIAL else _number(raw, f"initial.{key}")
    try:
        initial = PairState(**values)
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from exc

    leader = _leader(doc.get("leader", {"type": "stationary"}), units)
    monitors = doc.get("monitors", list(MONITORS))
    if not isinstance(monitors, list) or any(m not in MONITORS for m in monitors):
        raise ConfigError(f"monitors: expected a list drawn from {list(MONITORS)}")
    stride = doc.get("stride", 1)
    if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        raise ConfigError("stride: expected an integer >= 1")
    stop = doc.get("stop_detection", True)
    if not isinstance(stop, bool):
        raise ConfigError("stop_detection: expected true or false")
    try:
        return ScenarioConfig(
            params=params,
            initial=initial,
            leader=leader,
            duration=_number(doc.get("duration", 140.0), "duration"),
            controller=doc.get("controller", "mpp"),
            monitors=tuple(monitors),
            stride=stride,
            stop_detection=stop,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    return config_from_dict(doc)
