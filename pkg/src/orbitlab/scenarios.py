"""Scenario pipelines: config + seed -> RunRecord -> CSV / JSON / SVG artifacts."""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import artifacts as art
from . import device as dv
from . import optimizer as op
from . import rb

CROSSTALK_BANDS = (0.0005, 0.01)


@dataclass
class RunRecord:
    scenario: str
    config: dict[str, Any]
    seed: int
    summary: dict[str, Any] = field(default_factory=dict)
    tables: dict[str, tuple[tuple[str, ...], list]] = field(default_factory=dict)
    plots: dict[str, Callable[[Path], Path]] = field(default_factory=dict, repr=False)
    artifacts: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    version: str = __version__

    def as_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "summary": self.summary,
            "artifacts": sorted(set(self.artifacts) | {f"{n}.csv" for n in self.tables} | set(self.plots)),
        }


# ---------------------------------------------------------------------------
# devices from config


def single_qubit_device(cfg: dict) -> dv.DeviceModel:
    qubit = dv.TransmonParams(cfg["f10_ghz"], cfg["anharmonicity_ghz"], cfg["levels"])
    return dv.DeviceModel(
        qubits=(qubit,),
        pulses=(dv.calibrated_x2(qubit, cfg["gate_length_ns"]),),
        step=dv.StepPulseParams(cfg["step_detuning_ghz"], cfg["step_duration_ns"], cfg["step_window_ns"]),
        spam=_spam(cfg),
        noise=dv.NoiseParams(cfg["sq_depolarizing"], 0.0),
        dt=cfg["dt_ns"],
    )


def two_qubit_device(cfg: dict) -> dv.DeviceModel:
    qubits = (
        dv.TransmonParams(cfg["q0_f10_ghz"], cfg["anharmonicity_ghz"], cfg["levels"]),
        dv.TransmonParams(cfg["q1_f10_ghz"], cfg["anharmonicity_ghz"], cfg["levels"]),
    )
    return dv.DeviceModel(
        qubits=qubits,
        pulses=tuple(dv.calibrated_x2(q, cfg["gate_length_ns"]) for q in qubits),
        cz=dv.CZTrajectoryParams(dv.CZ_DEFAULT_PARAMS, cfg["cz_total_ns"], cfg["coupling_ghz"]),
        spam=_spam(cfg),
        noise=dv.NoiseParams(cfg["sq_depolarizing_2q"], cfg["cz_depolarizing"]),
        dt=cfg["dt_ns"],
    )


def _spam(cfg: dict) -> dv.SpamParams:
    return dv.SpamParams(cfg["prep_error"], cfg["readout_error_0"], cfg["readout_error_1"])


def _curve_rows(curve: rb.RbCurve, label: str | None = None):
    for m, j, f in curve.rows():
        yield (label, m, j, f) if label is not None else (m, j, f)


def _fit_series(curve: rb.RbCurve, fit: rb.DecayFit, label: str):
    m = np.asarray(curve.m_values, dtype=float)
    dense = np.linspace(m.min(), m.max(), 200)
    return (f"{label} means", m, curve.means), (f"{label} fit", dense, fit.model(dense))


def _trace_table(trace: op.OptimizationTrace, names) -> tuple[tuple[str, ...], list]:
    header = ("eval_index", "cost", "best_cost") + tuple(names)
    return header, list(trace.rows())


# ---------------------------------------------------------------------------
# scenarios


def scenario_rb_curve(cfg: dict, seed: int, parallel: int) -> RunRecord:
    dev = single_qubit_device(cfg)
    mode = rb.RbMode.reference() if cfg["rb_mode"] == "reference" else rb.RbMode.interleaved(cfg["interleaved_gate"])
    curve = rb.run_rb_curve(dev, mode, cfg["m_values"], cfg["k"], cfg["repetitions"], seed, parallel)
    fit = rb.fit_decay(curve)
    rec = RunRecord("rb-curve", cfg, seed)
    rec.summary = {"mode": mode.label, "fit": fit.as_dict()}
    rec.tables["curve"] = (("m", "seq_index", "fidelity"), list(_curve_rows(curve)))
    means, model = _fit_series(curve, fit, mode.label)
    rec.plots["rb_curve.svg"] = lambda p: art.plot_lines(
        p, [model], "sequence length m", "sequence fidelity",
        f"r = {fit.r:.2e}", markers=[means],
    )
    return rec


def scenario_landscape_x2(cfg: dict, seed: int, parallel: int) -> RunRecord:
    dev = single_qubit_device(cfg)
    p = dev.pulses[0]
    n = cfg["landscape_points"]
    axes = {
        "amplitude": p.amplitude * np.linspace(0.9, 1.1, n),
        "drive_frequency_ghz": p.drive_frequency + np.linspace(-0.004, 0.004, n),
        "drag": p.drag + np.linspace(-1.5, 1.5, n),
    }
    rows = []
    panels = []
    for a_i, (name, values) in enumerate(axes.items()):
        series = []
        for m_i, m in enumerate(cfg["landscape_m"]):
            fids = []
            for v_i, v in enumerate(values):
                x = p.as_vector()
                x[a_i] = v
                curve = rb.run_rb_curve(
                    op.x2_binding(dev, x), rb.RbMode.reference(), [m], cfg["k"],
                    cfg["repetitions"], rb.child_seed(seed, a_i, m_i, v_i), parallel,
                )
                fids.append(float(curve.means[0]))
                rows.append((name, float(v), m, fids[-1]))
            series.append((f"m = {m}", values, fids))
        panels.append({"xlabel": name, "ylabel": "sequence fidelity", "series": series})
    rec = RunRecord("landscape-x2", cfg, seed)
    rec.summary = {"calibrated": p.as_vector(), "m_values": cfg["landscape_m"]}
    rec.tables["landscape"] = (("parameter", "value", "m", "fidelity"), rows)
    rec.plots["landscape.svg"] = lambda path: art.plot_panels(path, panels)
    return rec


def _verification_tables(rec: RunRecord, ver: dict, stage: str) -> None:
    for key in ("reference", "interleaved"):
        curve = ver[key]
        rec.tables[f"{stage}_{key}"] = (("m", "seq_index", "fidelity"), list(_curve_rows(curve)))


def _verification_plot(rec: RunRecord, ver_before: dict, ver_after: dict, name: str) -> None:
    series, markers = [], []
    for stage, ver in (("before", ver_before), ("after", ver_after)):
        for key in ("reference", "interleaved"):
            mk, line = _fit_series(ver[key], ver[f"fit_{key}"], f"{stage} {key}")
            series.append(line)
            markers.append(mk)
    rec.plots[name] = lambda p: art.plot_lines(p, series, "sequence length m", "sequence fidelity", markers=markers)


def _trace_plot(rec: RunRecord, trace: op.OptimizationTrace, name: str, m: int) -> None:
    x = np.arange(trace.evaluations)
    rec.plots[name] = lambda p: art.plot_lines(
        p, [("cost", x, trace.costs), ("best so far", x, trace.best_costs)],
        "Nelder-Mead evaluation", f"1 - F(m = {m})",
    )


def _fit_summary(ver: dict, keys) -> dict:
    out = {k: ver[k] for k in keys}
    out["fit_reference"] = ver["fit_reference"].as_dict()
    out["fit_interleaved"] = ver["fit_interleaved"].as_dict()
    return out


def scenario_orbit_x2(cfg: dict, seed: int, parallel: int) -> RunRecord:
    dev = op.perturb_x2(
        single_qubit_device(cfg), cfg["amplitude_error"], cfg["detuning_error_ghz"], cfg["drag_error"]
    )
    settings = op.OrbitSettings(cfg["orbit_m"], cfg["k"], cfg["repetitions"], cfg["max_evaluations"], parallel)
    res = op.optimize_x2(dev, settings, seed)
    before, after = res.verification["before"], res.verification["after"]
    rec = RunRecord("orbit-x2", cfg, seed)
    keys = ("r_x2", "r_x2_direct")
    rec.summary = {
        "initial_params": res.initial_params,
        "final_params": res.final_params,
        "evaluations": res.trace.evaluations,
        "stop_reason": res.trace.stop_reason,
        "before": _fit_summary(before, keys),
        "after": _fit_summary(after, keys),
    }
    rec.tables["trace"] = _trace_table(res.trace, ("amplitude", "drive_frequency_ghz", "drag"))
    _verification_tables(rec, before, "before")
    _verification_tables(rec, after, "after")
    _trace_plot(rec, res.trace, "trace.svg", settings.m)
    _verification_plot(rec, before, after, "verification.svg")
    return rec


def scenario_orbit_cz(cfg: dict, seed: int, parallel: int) -> RunRecord:
    base = two_qubit_device(cfg)
    dev = op.perturb_cz(base, seed, cfg["cz_perturbation"])
    settings = op.OrbitSettings(cfg["orbit_m_cz"], cfg["k"], cfg["repetitions"], cfg["max_evaluations_cz"], parallel)
    res = op.optimize_cz(dev, settings, seed)
    before, after = res.verification["before"], res.verification["after"]
    rec = RunRecord("orbit-cz", cfg, seed)
    keys = ("r_ref", "r_cz", "r_sq", "r_ref_expected", "self_consistency")
    rec.summary = {
        "initial_params": res.initial_params,
        "final_params": res.final_params,
        "evaluations": res.trace.evaluations,
        "stop_reason": res.trace.stop_reason,
        "measurements_per_evaluation": settings.k * settings.repetitions,
        "before": _fit_summary(before, keys),
        "after": _fit_summary(after, keys),
    }
    rec.tables["trace"] = _trace_table(res.trace, dv.CZ_PARAM_NAMES)
    _verification_tables(rec, before, "before")
    _verification_tables(rec, after, "after")
    _trace_plot(rec, res.trace, "trace.svg", settings.m)
    _verification_plot(rec, before, after, "verification.svg")
    return rec


def bleedthrough_device(cfg: dict) -> dv.DeviceModel:
    from dataclasses import replace

    forward = dv.LineResponse(
        ((cfg["pole_1_amplitude"], cfg["pole_1_rate"]), (cfg["pole_2_amplitude"], cfg["pole_2_rate"]))
    )
    return replace(single_qubit_device(cfg), forward_response=forward)


def scenario_bleedthrough(cfg: dict, seed: int, parallel: int) -> RunRecord:
    dev = bleedthrough_device(cfg)
    settings = op.OrbitSettings(
        cfg["orbit_m_step"], cfg["k"], cfg["repetitions_step"], cfg["max_evaluations_step"], parallel,
        fresh_sequences=False, restarts=20,
    )
    res = op.optimize_deconvolution(dev, settings, seed)
    before, after = res.verification["before"], res.verification["after"]
    rec = RunRecord("bleedthrough", cfg, seed)
    keys = ("r_step", "max_phase_deviation")
    rec.summary = {
        "injected_poles": dev.forward_response.poles,
        "recovered_poles": res.device_after.correction.poles,
        "phase_correction": res.device_after.phase_correction,
        "evaluations": res.trace.evaluations,
        "stop_reason": res.trace.stop_reason,
        "before": _fit_summary(before, keys),
        "after": _fit_summary(after, keys),
    }
    rec.tables["trace"] = _trace_table(res.trace, ("a1", "gamma1_per_ns", "a2", "gamma2_per_ns", "phase_rad"))
    rec.tables["phase_probe"] = (
        ("time_ns", "dphi_before_rad", "dphi_after_rad"),
        list(zip(before["probe_times"], before["probe_phase"], after["probe_phase"])),
    )
    t, _, det_before = dv.step_detuning_trace(dev.step, dev.forward_response, None, dev.dt)
    _, _, det_after = dv.step_detuning_trace(dev.step, dev.forward_response, res.device_after.correction, dev.dt)
    stride = max(1, int(round(0.5 / dev.dt)))
    rec.tables["waveform"] = (
        ("time_ns", "detuning_before_ghz", "detuning_after_ghz"),
        list(zip(t[::stride], det_before[::stride], det_after[::stride])),
    )
    _verification_tables(rec, before, "before")
    _verification_tables(rec, after, "after")
    _trace_plot(rec, res.trace, "trace.svg", settings.m)
    _verification_plot(rec, before, after, "verification.svg")
    rec.plots["phase_probe.svg"] = lambda p: art.plot_lines(
        p,
        [("uncorrected", before["probe_times"], before["probe_phase"]),
         ("corrected", after["probe_times"], after["probe_phase"])],
        "time after step start (ns)", "phase deviation (rad)",
    )
    return rec


def scenario_crosstalk_map(cfg: dict, seed: int, parallel: int) -> RunRecord:
    dev = single_qubit_device(cfg)
    m = cfg["crosstalk_m"]
    ref_m = sorted({1, max(1, m // 4), max(1, m // 2), m, 2 * m, 4 * m, 8 * m})
    ref = rb.run_rb_curve(dev, rb.RbMode.reference(), ref_m, max(cfg["k"], 20), cfg["repetitions"],
                          rb.child_seed(seed, 90), parallel)
    fit = rb.fit_decay(ref)
    xmap = rb.crosstalk_map(
        dev, cfg["crosstalk_deltas_ghz"], cfg["crosstalk_gate_lengths_ns"], m, cfg["k"], fit,
        rb.child_seed(seed, 91), cfg["repetitions"], cfg["crosstalk_coupling"], parallel,
    )
    rec = RunRecord("crosstalk-map", cfg, seed)
    added = xmap.added_error
    rec.summary = {
        "reference_fit": fit.as_dict(),
        "bands": CROSSTALK_BANDS,
        "max_added_error": float(np.max(added)),
        "min_added_error": float(np.min(added)),
    }
    rec.tables["map"] = (
        ("delta_GHz", "tgate_ns", "seq_fidelity", "seq_fidelity_sigma", "inferred_error", "inferred_sigma"),
        list(xmap.rows()),
    )
    rec.tables["reference_curve"] = (("m", "seq_index", "fidelity"), list(_curve_rows(ref)))
    x, y = xmap.deltas, xmap.gate_lengths
    rec.plots["crosstalk_map.svg"] = lambda p: art.plot_map(
        p, x, y, added, "aggressor detuning (GHz)", "gate length (ns)", "added error", CROSSTALK_BANDS
    )
    rec.plots["sequence_fidelity.svg"] = lambda p: art.plot_map(
        p, x, y, xmap.seq_fidelity, "aggressor detuning (GHz)", "gate length (ns)", f"F(m = {m})"
    )
    return rec


def scenario_sensitivity(cfg: dict, seed: int, parallel: int) -> RunRecord:
    a = cfg["sensitivity_A"]
    rows, series, info = [], [], []
    for r in cfg["sensitivity_r"]:
        mp = rb.optimal_m(r)
        ms = np.unique(np.round(np.geomspace(1, 10 * mp, 400)).astype(int))
        d = [rb.sensitivity(r, a, int(m)).at_m for m in ms]
        s = rb.sensitivity(r, a, mp)
        rows.extend((r, int(m), v) for m, v in zip(ms, d))
        series.append((f"r = {r:g}", ms, np.abs(d)))
        info.append({
            "r": r, "optimal_m": mp, "peak_m": int(ms[int(np.argmax(np.abs(d)))]),
            "dF_dr_at_optimal_m": s.at_optimal_m, "fractional_sensitivity": s.fractional,
        })
    rec = RunRecord("sensitivity", cfg, seed)
    rec.summary = {"A": a, "curves": info}
    rec.tables["sensitivity"] = (("r", "m", "dF_dr"), rows)
    rec.plots["sensitivity.svg"] = lambda p: art.plot_lines(
        p, series, "sequence length m", "|dF/dr|", logx=True
    )
    return rec


SCENARIOS: dict[str, Callable[[dict, int, int], RunRecord]] = {
    "rb-curve": scenario_rb_curve,
    "landscape-x2": scenario_landscape_x2,
    "orbit-x2": scenario_orbit_x2,
    "orbit-cz": scenario_orbit_cz,
    "bleedthrough": scenario_bleedthrough,
    "crosstalk-map": scenario_crosstalk_map,
    "sensitivity": scenario_sensitivity,
}


def run_scenario(name: str, config: dict, seed: int, exact: bool = False, parallel: int = 1) -> RunRecord:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; valid: {', '.join(SCENARIOS)}")
    cfg = dict(config)
    if exact:
        cfg["repetitions"] = 0
    start = time.perf_counter()
    rec = SCENARIOS[name](cfg, seed, parallel)
    rec.duration_s = time.perf_counter() - start
    return rec


def prepare_output_dir(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def write_outputs(record: RunRecord, out_dir: str | Path) -> list[Path]:
    """CSV tables, the JSON record and SVG plots; wall-clock time goes to timing.txt."""
    out = prepare_output_dir(out_dir)
    paths = []
    for name, (header, rows) in record.tables.items():
        paths.append(art.write_csv(out / f"{name}.csv", header, rows))
    for name, draw in record.plots.items():
        paths.append(draw(out / name))
    paths.append(art.write_json(out / "record.json", record.as_dict()))
    paths.append(art.atomic_write(out / "timing.txt", f"duration_s {record.duration_s:.3f}\n"))
    return paths
