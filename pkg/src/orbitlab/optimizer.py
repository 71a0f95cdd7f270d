"""Nelder-Mead on normalized coordinates, plus the three ORBIT tuning bindings."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import device as dv
from . import rb


@dataclass(frozen=True)
class NelderMeadConfig:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    initial_scale: tuple[float, ...] | None = None
    xtol: float = 1e-8
    ftol: float = 1e-12
    noise_floor: float = 0.0
    max_evaluations: int = 2000
    restarts: int = 0

    def __post_init__(self):
        for name in ("reflection", "expansion", "contraction", "shrink"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.initial_scale is not None and any(s == 0 for s in self.initial_scale):
            raise ValueError("initial simplex scales must be nonzero")


@dataclass
class OptimizationTrace:
    params: list[np.ndarray] = field(default_factory=list)
    costs: list[float] = field(default_factory=list)
    best_costs: list[float] = field(default_factory=list)
    best_params: np.ndarray | None = None
    stop_reason: str = ""

    @property
    def evaluations(self) -> int:
        return len(self.costs)

    @property
    def best_cost(self) -> float:
        return self.best_costs[-1] if self.best_costs else math.inf

    def record(self, x: np.ndarray, f: float) -> None:
        self.params.append(np.array(x, dtype=float))
        self.costs.append(f)
        if not self.best_costs or f < self.best_costs[-1]:
            self.best_costs.append(f)
            self.best_params = np.array(x, dtype=float)
        else:
            self.best_costs.append(self.best_costs[-1])

    def rows(self):
        for i, (x, f, b) in enumerate(zip(self.params, self.costs, self.best_costs)):
            yield (i, f, b, *x.tolist())


class _Budget(Exception):
    pass


def nelder_mead(
    cost: Callable[[np.ndarray], float],
    x0: Sequence[float],
    config: NelderMeadConfig | None = None,
) -> OptimizationTrace:
    """Minimize ``cost`` from ``x0``.

    Internally the simplex lives in coordinates z with x = x0 + scale * z, so
    the initial simplex is the unit simplex.  Non-finite costs rank worst.
    """
    cfg = config or NelderMeadConfig()
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if cfg.max_evaluations < n + 1:
        raise ValueError("max_evaluations must be at least dim + 1")
    scale = np.ones(n) if cfg.initial_scale is None else np.asarray(cfg.initial_scale, dtype=float)
    if scale.shape != (n,):
        raise ValueError("initial_scale must have one entry per parameter")
    trace = OptimizationTrace()

    def f(z: np.ndarray) -> float:
        if trace.evaluations >= cfg.max_evaluations:
            raise _Budget
        x = x0 + scale * z
        val = float(cost(x))
        if not math.isfinite(val):
            val = math.inf
        trace.record(x, val)
        return val

    a, g, c, s = cfg.reflection, cfg.expansion, cfg.contraction, cfg.shrink
    base = np.zeros(n)
    base_val = None
    try:
        for attempt in range(cfg.restarts + 1):
            sim, vals = _simplex(f, base, base_val)
            if attempt == 0 and not math.isfinite(vals[0]):
                raise ValueError("cost is not finite at the starting point")
            sim, vals = _iterate(f, sim, vals, cfg, trace, a, g, c, s)
            if trace.stop_reason != "converged":
                break
            base, base_val = sim[0], vals[0]
    except _Budget:
        trace.stop_reason = "max evaluations"
    return trace


def _simplex(f, base, base_val):
    """Unit simplex at ``base`` (restarts reuse the known vertex value)."""
    n = base.size
    sim = [base.copy()] + [base + np.eye(n)[i] for i in range(n)]
    vals = [f(sim[0]) if base_val is None else base_val] + [f(z) for z in sim[1:]]
    return sim, vals


def _iterate(f, sim, vals, cfg, trace, a, g, c, s):
    """Run the simplex until a stopping rule fires; returns the final simplex."""
    n = len(sim) - 1
    while True:
        order = sorted(range(n + 1), key=lambda i: (vals[i], i))
        sim = [sim[i] for i in order]
        vals = [vals[i] for i in order]
        spread = vals[-1] - vals[0]
        size = max(float(np.max(np.abs(z - sim[0]))) for z in sim[1:])
        if cfg.noise_floor > 0:
            if spread < 2.0 * cfg.noise_floor:
                trace.stop_reason = "cost spread below noise floor"
                return sim, vals
        elif spread <= cfg.ftol and size <= cfg.xtol:
            trace.stop_reason = "converged"
            return sim, vals
        centroid = np.mean(sim[:-1], axis=0)
        xr = centroid + a * (centroid - sim[-1])
        fr = f(xr)
        if fr < vals[0]:
            xe = centroid + g * (xr - centroid)
            fe = f(xe)
            sim[-1], vals[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < vals[-2]:
            sim[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + c * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                sim[-1], vals[-1] = xc, fc
                continue
        else:
            xc = centroid + c * (sim[-1] - centroid)
            fc = f(xc)
            if fc < vals[-1]:
                sim[-1], vals[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            sim[i] = sim[0] + s * (sim[i] - sim[0])
            vals[i] = f(sim[i])


# ---------------------------------------------------------------------------
# bindings: parameter vector -> device


def x2_binding(device: dv.DeviceModel, x: np.ndarray) -> dv.DeviceModel:
    """(amplitude, drive frequency, drag) of qubit 0's pulse."""
    pulses = list(device.pulses)
    pulses[0] = pulses[0].with_vector(x)
    return replace(device, pulses=tuple(pulses))


def cz_binding(device: dv.DeviceModel, x: np.ndarray) -> dv.DeviceModel:
    return replace(device, cz=device.cz.with_vector(x))


def deconvolution_binding(device: dv.DeviceModel, x: np.ndarray) -> dv.DeviceModel:
    """(a1, gamma1, a2, gamma2, step phase correction)."""
    poles = dv.LineResponse.from_vector(list(x[:4]), role="inverse")
    return replace(device, correction=poles, step_phase_correction=float(x[4]))


class SafeCost:
    """Wraps an ORBIT cost; parameter sets the device rejects cost +inf."""

    def __init__(self, cost: rb.OrbitCost):
        self.cost = cost

    def __call__(self, x) -> float:
        try:
            return self.cost(x)
        except (ValueError, FloatingPointError):
            return math.inf


def _floor_fidelity(device) -> float:
    n = device.qubit_count
    pops = np.zeros(dv.LEVELS**n)
    idx = dv.computational_indices(n)
    pops[idx] = 1.0 / len(idx)
    return dv.ground_probability(np.diag(pops), device.spam)


def _check_not_at_floor(cost: rb.OrbitCost, c0: float) -> None:
    f0 = 1.0 - c0
    floor = _floor_fidelity(cost.device)
    margin = max(0.02, 3.0 * cost.noise_floor)
    if f0 - floor < margin:
        raise ValueError(
            f"sequence fidelity {f0:.3f} is at the floor {floor:.3f}; "
            f"choose a smaller m than {cost.m}"
        )


@dataclass
class OrbitSettings:
    m: int
    k: int = 20
    repetitions: int = 900
    max_evaluations: int = 200
    parallel: int = 1
    fresh_sequences: bool = True
    restarts: int = 0


@dataclass
class ScenarioResult:
    trace: OptimizationTrace
    initial_params: np.ndarray
    final_params: np.ndarray
    device_before: dv.DeviceModel
    device_after: dv.DeviceModel
    verification: dict = field(default_factory=dict)


def run_orbit(
    device,
    binding,
    x0: np.ndarray,
    scale: Sequence[float],
    settings: OrbitSettings,
    rng_seed,
    mode: rb.RbMode | None = None,
    use_noise_floor: bool = True,
) -> tuple[OptimizationTrace, rb.OrbitCost]:
    cost = rb.OrbitCost(
        device, binding, settings.m, settings.k, settings.repetitions,
        rb.child_seed(rng_seed, 10), mode=mode, parallel=settings.parallel,
        fresh=settings.fresh_sequences,
    )
    safe = SafeCost(cost)
    c0 = safe(x0)
    _check_not_at_floor(cost, c0)
    cost.calls = 0
    cfg = NelderMeadConfig(
        initial_scale=tuple(scale),
        noise_floor=cost.noise_floor if use_noise_floor else 0.0,
        max_evaluations=settings.max_evaluations,
        xtol=1e-4,
        ftol=1e-9,
        restarts=settings.restarts,
    )
    return nelder_mead(safe, x0, cfg), cost


# ---------------------------------------------------------------------------
# X/2


X2_SCALE_FRACTION = 0.02
X2_FREQUENCY_SCALE = 0.001
X2_DRAG_SCALE = 0.1


def perturb_x2(
    device: dv.DeviceModel,
    amplitude_fraction: float = 0.05,
    detuning: float = 0.002,
    drag_offset: float = 0.3,
) -> dv.DeviceModel:
    p = device.pulses[0]
    x = np.array([p.amplitude * (1 + amplitude_fraction), p.drive_frequency + detuning, p.drag + drag_offset])
    return x2_binding(device, x)


def verify_x2(device, rng_seed, m_values=(1, 25, 50, 100, 200, 400), k: int = 30, repetitions: int = 0):
    """Reference and interleaved X/2 RB; returns fits and the extracted error."""
    ref = rb.run_rb_curve(device, rb.RbMode.reference(), m_values, k, repetitions, rb.child_seed(rng_seed, 20))
    inter = rb.run_rb_curve(device, rb.RbMode.interleaved("X/2"), m_values, k, repetitions, rb.child_seed(rng_seed, 21))
    f_ref, f_int = rb.fit_decay(ref), rb.fit_decay(inter)
    return {
        "reference": ref,
        "interleaved": inter,
        "fit_reference": f_ref,
        "fit_interleaved": f_int,
        "r_x2": rb.gate_error(f_int.p, f_ref.p, 1),
        "r_x2_direct": x2_direct_error(device),
    }


def x2_direct_error(device: dv.DeviceModel) -> float:
    """1 - F_avg of the physical X/2 including its depolarizing channel."""
    lam = device.noise.sq_depolarizing
    r_u = dv.pulse_error(device.pulses[0], device.qubits[0], device.dt)
    return (1 - lam) * r_u + lam / 2


def optimize_x2(
    device: dv.DeviceModel,
    settings: OrbitSettings | None = None,
    rng_seed=0,
    verify: bool = True,
) -> ScenarioResult:
    settings = settings or OrbitSettings(m=60)
    p = device.pulses[0]
    x0 = p.as_vector()
    scale = (X2_SCALE_FRACTION * p.amplitude, X2_FREQUENCY_SCALE, X2_DRAG_SCALE)
    trace, _ = run_orbit(device, x2_binding, x0, scale, settings, rng_seed)
    after = x2_binding(device, trace.best_params)
    result = ScenarioResult(trace, x0, trace.best_params, device, after)
    if verify:
        result.verification = {
            "before": verify_x2(device, rb.child_seed(rng_seed, 30)),
            "after": verify_x2(after, rb.child_seed(rng_seed, 31)),
        }
    return result


# ---------------------------------------------------------------------------
# CZ


CZ_SCALE = (0.004, 0.5, 0.5, 0.05, 0.03, 0.03, 0.1, 0.1)


def perturb_cz(device: dv.DeviceModel, rng_seed, target_error: float = 0.025) -> dv.DeviceModel:
    """Move the trajectory along a seeded random direction until 1 - F_CZ hits target_error."""
    rng = np.random.default_rng(rb.child_seed(rng_seed, 40))
    direction = rng.normal(size=8)
    direction /= np.linalg.norm(direction)
    x0 = device.cz.as_vector()
    scale = np.array(CZ_SCALE)

    def err(t):
        return dv.cz_error(device.cz.with_vector(x0 + t * scale * direction), device.qubits, device.dt)

    lo, hi = 0.0, 1.0
    while err(hi) < target_error:
        hi *= 2.0
        if hi > 1e3:
            raise RuntimeError("perturbation cannot reach the target error")
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if err(mid) < target_error:
            lo = mid
        else:
            hi = mid
    return cz_binding(device, x0 + hi * scale * direction)


def single_qubit_error(device: dv.DeviceModel) -> float:
    """Mean error per single-qubit pulse over the device's qubits."""
    lam = device.noise.sq_depolarizing
    errs = [
        (1 - lam) * dv.pulse_error(p, q, device.dt) + lam / 2
        for p, q in zip(device.pulses, device.qubits)
    ]
    return float(np.mean(errs))


def verify_cz(device, rng_seed, m_values=(1, 5, 10, 20, 30, 45, 60), k: int = 100, repetitions: int = 0):
    ref = rb.run_rb_curve(device, rb.RbMode.reference(), m_values, k, repetitions, rb.child_seed(rng_seed, 50))
    inter = rb.run_rb_curve(device, rb.RbMode.interleaved("CZ"), m_values, k, repetitions, rb.child_seed(rng_seed, 51))
    f_ref, f_int = rb.fit_decay(ref), rb.fit_decay(inter)
    r_cz = rb.gate_error(f_int.p, f_ref.p, 2)
    r_sq = single_qubit_error(device)
    expected = rb.expected_reference_error(r_sq, max(r_cz, 0.0))
    return {
        "reference": ref,
        "interleaved": inter,
        "fit_reference": f_ref,
        "fit_interleaved": f_int,
        "r_ref": f_ref.r,
        "r_cz": r_cz,
        "r_sq": r_sq,
        "r_ref_expected": expected,
        "self_consistency": abs(f_ref.r - expected) / f_ref.r,
    }


def optimize_cz(
    device: dv.DeviceModel,
    settings: OrbitSettings | None = None,
    rng_seed=0,
    verify: bool = True,
) -> ScenarioResult:
    settings = settings or OrbitSettings(m=30, max_evaluations=300)
    x0 = device.cz.as_vector()
    trace, _ = run_orbit(device, cz_binding, x0, CZ_SCALE, settings, rng_seed)
    after = cz_binding(device, trace.best_params)
    result = ScenarioResult(trace, x0, trace.best_params, device, after)
    if verify:
        result.verification = {
            "before": verify_cz(device, rb.child_seed(rng_seed, 60)),
            "after": verify_cz(after, rb.child_seed(rng_seed, 61)),
        }
    return result


# ---------------------------------------------------------------------------
# bleedthrough


DECONV_X0 = (0.0, 0.05, 0.0, 0.01)
DECONV_SCALE = (0.01, 0.02, 0.005, 0.005, 0.05)


def verify_step(device, rng_seed, m_values=(1, 10, 25, 50, 100, 150, 200), k: int = 100, repetitions: int = 0):
    ref = rb.run_rb_curve(device, rb.RbMode.reference(), m_values, k, repetitions, rb.child_seed(rng_seed, 70))
    inter = rb.run_rb_curve(device, rb.RbMode.interleaved("step"), m_values, k, repetitions, rb.child_seed(rng_seed, 71))
    f_ref, f_int = rb.fit_decay(ref), rb.fit_decay(inter)
    step = device.step
    times = np.linspace(step.duration, step.duration + step.window, 41)
    trace = dv.probe_phase_trace(step, times, device)
    return {
        "reference": ref,
        "interleaved": inter,
        "fit_reference": f_ref,
        "fit_interleaved": f_int,
        "r_step": rb.gate_error(f_int.p, f_ref.p, 1),
        "probe_times": times,
        "probe_phase": trace,
        "max_phase_deviation": float(np.max(np.abs(trace))),
    }


def optimize_deconvolution(
    device: dv.DeviceModel,
    settings: OrbitSettings | None = None,
    rng_seed=0,
    verify: bool = True,
    x0: Sequence[float] | None = None,
) -> ScenarioResult:
    """Tune a two-pole inverse correction plus the step's phase correction."""
    settings = settings or OrbitSettings(
        m=20, repetitions=0, max_evaluations=1500, fresh_sequences=False, restarts=20
    )
    if x0 is None:
        x0 = np.array(list(DECONV_X0) + [device.phase_correction])
    x0 = np.asarray(x0, dtype=float)
    trace, _ = run_orbit(
        device, deconvolution_binding, x0, DECONV_SCALE, settings, rng_seed,
        mode=rb.RbMode.interleaved("step"),
    )
    after = deconvolution_binding(device, trace.best_params)
    result = ScenarioResult(trace, x0, trace.best_params, device, after)
    if verify:
        result.verification = {
            # same sequences before and after: the comparison is paired
            "before": verify_step(device, rb.child_seed(rng_seed, 80)),
            "after": verify_step(after, rb.child_seed(rng_seed, 80)),
        }
    return result
