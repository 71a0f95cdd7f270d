"""Flat YAML configuration with documented keys, units and ranges."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml


@dataclass(frozen=True)
class Key:
    default: Any
    kind: type
    unit: str
    doc: str
    lo: float | None = None
    hi: float | None = None
    lo_open: bool = False


# name -> Key; every scenario reads the subset it needs
KEYS: dict[str, Key] = {
    "levels": Key(3, int, "", "transmon levels simulated (only 3 supported)", 3, 3),
    "f10_ghz": Key(5.0, float, "GHz", "single-qubit device transition frequency", 0.0, None, True),
    "anharmonicity_ghz": Key(-0.22, float, "GHz", "Delta/2pi (negative for transmons)", None, None),
    "gate_length_ns": Key(20.0, float, "ns", "XY pulse length", 0.0, None, True),
    "dt_ns": Key(0.05, float, "ns", "integration step", 0.0, 1.0, True),
    "q0_f10_ghz": Key(4.5, float, "GHz", "two-qubit device: moving qubit idle frequency", 0.0, None, True),
    "q1_f10_ghz": Key(5.0, float, "GHz", "two-qubit device: static qubit frequency", 0.0, None, True),
    "coupling_ghz": Key(0.03, float, "GHz", "g/2pi exchange coupling", 0.0, None),
    "cz_total_ns": Key(40.0, float, "ns", "CZ slot length", 0.0, None, True),
    "sq_depolarizing": Key(8e-4, float, "", "depolarizing strength per XY pulse (one qubit)", 0.0, 1.0),
    "sq_depolarizing_2q": Key(4e-4, float, "", "depolarizing strength per XY pulse (two qubits)", 0.0, 1.0),
    "cz_depolarizing": Key(4e-3, float, "", "depolarizing strength per CZ on each qudit", 0.0, 1.0),
    "prep_error": Key(0.01, float, "", "probability of preparing |1>", 0.0, 1.0),
    "readout_error_0": Key(0.05, float, "", "P(read excited | ground)", 0.0, 1.0),
    "readout_error_1": Key(0.07, float, "", "P(read ground | excited or leaked)", 0.0, 1.0),
    "k": Key(20, int, "", "random sequences per depth", 1, None),
    "repetitions": Key(900, int, "", "shots per sequence (0 = exact expectation)", 0, None),
    "m_values": Key([1, 50, 100, 200, 400, 600, 800, 1000], list, "", "depths for rb-curve", None, None),
    "rb_mode": Key("reference", str, "", "rb-curve mode: reference or interleaved", None, None),
    "interleaved_gate": Key("X/2", str, "", "gate for interleaved rb-curve", None, None),
    "orbit_m": Key(60, int, "", "ORBIT depth for orbit-x2", 1, None),
    "orbit_m_cz": Key(30, int, "", "ORBIT depth for orbit-cz", 1, None),
    "orbit_m_step": Key(20, int, "", "ORBIT depth for bleedthrough", 1, None),
    "max_evaluations": Key(200, int, "", "Nelder-Mead budget for orbit-x2", 4, None),
    "max_evaluations_cz": Key(300, int, "", "Nelder-Mead budget for orbit-cz", 9, None),
    "repetitions_step": Key(0, int, "", "shots per sequence in the bleedthrough cost (0 = exact)", 0, None),
    "max_evaluations_step": Key(1500, int, "", "Nelder-Mead budget for bleedthrough", 6, None),
    "amplitude_error": Key(0.05, float, "", "orbit-x2 relative amplitude perturbation", None, None),
    "detuning_error_ghz": Key(0.002, float, "GHz", "orbit-x2 drive frequency perturbation", None, None),
    "drag_error": Key(0.3, float, "", "orbit-x2 DRAG offset", None, None),
    "cz_perturbation": Key(0.025, float, "", "orbit-cz target 1 - F_CZ of the perturbed trajectory", 0.0, 0.5, True),
    "landscape_points": Key(21, int, "", "samples per axis for landscape-x2", 3, None),
    "landscape_m": Key([1, 50, 100, 300], list, "", "depths for landscape-x2", None, None),
    "step_detuning_ghz": Key(-0.37, float, "GHz", "step pulse detuning", None, None),
    "step_duration_ns": Key(35.0, float, "ns", "step pulse length", 0.0, None, True),
    "step_window_ns": Key(200.0, float, "ns", "post-step observation window", 0.0, None),
    "pole_1_amplitude": Key(0.015, float, "", "injected forward pole 1 amplitude", None, None),
    "pole_1_rate": Key(0.1, float, "1/ns", "injected forward pole 1 rate", 0.0, None, True),
    "pole_2_amplitude": Key(0.003, float, "", "injected forward pole 2 amplitude", None, None),
    "pole_2_rate": Key(0.02, float, "1/ns", "injected forward pole 2 rate", 0.0, None, True),
    "crosstalk_m": Key(35, int, "", "depth of simultaneous sequences", 1, None),
    "crosstalk_coupling": Key(0.1, float, "", "relative crosstalk drive strength", 0.0, None),
    "crosstalk_deltas_ghz": Key(
        [-0.66, -0.55, -0.44, -0.33, -0.22, -0.11, 0.0, 0.11, 0.22, 0.33, 0.44],
        list, "GHz", "aggressor detunings from victim f10", None, None,
    ),
    "crosstalk_gate_lengths_ns": Key(
        [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0],
        list, "ns", "aggressor gate lengths", None, None,
    ),
    "sensitivity_r": Key([0.001, 0.0005], list, "", "errors per Clifford for the sensitivity curves", None, None),
    "sensitivity_A": Key(0.5, float, "", "decay amplitude for the sensitivity curves", 0.0, None, True),
}


class ConfigError(ValueError):
    pass


def defaults() -> dict[str, Any]:
    return {name: (list(k.default) if isinstance(k.default, list) else k.default) for name, k in KEYS.items()}


def _check(name: str, value: Any) -> Any:
    k = KEYS[name]
    if k.kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{name}: must be finite")
    elif k.kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
    elif k.kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
    elif k.kind is list:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{name}: expected a nonempty list")
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{name}: list entries must be numbers, got {v!r}")
        return list(value)
    if k.lo is not None:
        bad = value <= k.lo if k.lo_open else value < k.lo
        if bad:
            op = ">" if k.lo_open else ">="
            raise ConfigError(f"{name}: value {value} out of range (must be {op} {k.lo})")
    if k.hi is not None and value > k.hi:
        raise ConfigError(f"{name}: value {value} out of range (must be <= {k.hi})")
    return value


def resolve(raw: dict[str, Any] | None) -> dict[str, Any]:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of key: value")
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = defaults()
    for name, value in raw.items():
        cfg[name] = _check(name, value)
    if cfg["rb_mode"] not in ("reference", "interleaved"):
        raise ConfigError(f"rb_mode: must be 'reference' or 'interleaved', got {cfg['rb_mode']!r}")
    for name in ("m_values", "landscape_m"):
        if any(int(v) != v or v < 1 for v in cfg[name]):
            raise ConfigError(f"{name}: depths must be positive integers")
        cfg[name] = [int(v) for v in cfg[name]]
    return cfg


def parse_config(path: str | Path | None) -> dict[str, Any]:
    """Load and resolve a config file; ``None`` gives the defaults."""
    if path is None:
        return resolve({})
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return resolve(raw)


def dump_config(cfg: dict[str, Any]) -> str:
    return yaml.safe_dump(cfg, sort_keys=True)
