"""Randomized benchmarking on the device simulator.

Sequences are compiled into a flat list of physical operations (single XY
pulses for one qubit; simultaneous single-qubit layers and CZs for two) and
run through the density-matrix kernel with per-operation depolarizing noise.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import clifford as cl
from . import device as dv
from . import kernels

SeedLike = "int | np.random.SeedSequence"


class NegativeErrorWarning(UserWarning):
    """An extracted error came out negative (interleaved decay slower than reference)."""


def child_seed(seed, *key: int) -> np.random.SeedSequence:
    """Counter-based child stream: identical for any evaluation order."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def _int_seed(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(2, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# modes and curves


@dataclass(frozen=True)
class RbMode:
    kind: str = "reference"
    gate: str | None = None
    crosstalk: dv.CrosstalkConfig | None = None

    def __post_init__(self):
        if self.kind not in ("reference", "interleaved", "simultaneous"):
            raise ValueError(f"unknown RB mode {self.kind!r}")
        if self.kind == "interleaved" and self.gate is None:
            raise ValueError("interleaved mode needs a gate")
        if self.kind == "simultaneous" and self.crosstalk is None:
            raise ValueError("simultaneous mode needs a crosstalk config")

    @classmethod
    def reference(cls) -> RbMode:
        return cls()

    @classmethod
    def interleaved(cls, gate: str) -> RbMode:
        return cls("interleaved", gate)

    @classmethod
    def simultaneous(cls, crosstalk: dv.CrosstalkConfig) -> RbMode:
        return cls("simultaneous", crosstalk=crosstalk)

    @property
    def recovery_gate(self) -> str | None:
        if self.kind != "interleaved":
            return None
        return "I" if self.gate == "step" else self.gate

    @property
    def label(self) -> str:
        if self.kind == "interleaved":
            return f"interleaved({self.gate})"
        if self.kind == "simultaneous":
            c = self.crosstalk
            return f"simultaneous(delta={c.detuning:g},tgate={c.gate_length:g})"
        return "reference"


@dataclass(frozen=True)
class RbCurve:
    m_values: tuple[int, ...]
    fidelities: np.ndarray = field(repr=False)
    k: int
    repetitions: int
    mode: RbMode
    qubit_count: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        f = self.fidelities
        if np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
            raise ValueError("sequence fidelities must lie in [0, 1]")

    @property
    def means(self) -> np.ndarray:
        return self.fidelities.mean(axis=1)

    @property
    def stderr(self) -> np.ndarray:
        if self.k < 2:
            return np.zeros(len(self.m_values))
        return self.fidelities.std(axis=1, ddof=1) / math.sqrt(self.k)

    def rows(self):
        for i, m in enumerate(self.m_values):
            for j in range(self.k):
                yield m, j, float(self.fidelities[i, j])


# ---------------------------------------------------------------------------
# noise channel plumbing


def _pauli_tables(qubit_count: int):
    """Monomial form of the four qubit-subspace Paulis embedded per qudit."""
    L = dv.LEVELS
    d = L**qubit_count
    perm = np.zeros((qubit_count, 4, d), dtype=np.int64)
    phase = np.zeros((qubit_count, 4, d), dtype=complex)
    single_perm = [
        [0, 1, 2],  # I
        [1, 0, 2],  # X
        [1, 0, 2],  # Y
        [0, 1, 2],  # Z
    ]
    single_phase = [
        [1, 1, 1],
        [1, 1, 1],
        [-1j, 1j, 1],  # (Y rho Y^dag)_{ij} = ph_i conj(ph_j) rho[perm_i, perm_j]
        [1, -1, 1],
    ]
    for q in range(qubit_count):
        for p in range(4):
            for idx in range(d):
                digits = [idx // L**(qubit_count - 1 - s) % L for s in range(qubit_count)]
                lvl = digits[q]
                digits[q] = single_perm[p][lvl]
                perm[q, p, idx] = sum(v * L**(qubit_count - 1 - s) for s, v in enumerate(digits))
                phase[q, p, idx] = single_phase[p][lvl]
    return perm, phase


_PAULI = {n: _pauli_tables(n) for n in (1, 2)}
_NVEC = {1: dv.NVEC_1Q, 2: dv.NVEC_2Q[0] * 0.0}


def _run_density(qubit_count, rho0, table, ops, zphase, noise, nvec=None):
    perm, phase = _PAULI[qubit_count]
    nvec = _NVEC[qubit_count] if nvec is None else nvec
    return kernels.evolve_density(rho0, table, ops, zphase, nvec, noise, perm, phase)


# ---------------------------------------------------------------------------
# simulators


class DepolarizingOracle:
    """Analytic model: each Clifford is ideal followed by depolarizing with decay p.

    An interleaved gate adds a second depolarizing channel with decay
    ``p_interleaved``.  Pulses are bypassed entirely, so every sequence has
    the same exact fidelity A p^m + B.
    """

    def __init__(
        self,
        p: float,
        qubit_count: int = 1,
        p_interleaved: float = 1.0,
        spam: dv.SpamParams | None = None,
    ):
        if not (0.0 <= p <= 1.0 and 0.0 <= p_interleaved <= 1.0):
            raise ValueError("decay parameters must lie in [0, 1]")
        self.p = p
        self.p_interleaved = p_interleaved
        self.qubit_count = qubit_count
        self.spam = spam

    def simulator(self, mode: RbMode) -> Callable:
        d = 2**self.qubit_count
        p_eff = self.p * (self.p_interleaved if mode.kind == "interleaved" else 1.0)

        def run(seq: cl.RbSequence, rng_seed) -> float:
            survival = p_eff**seq.m
            pops = np.zeros(dv.LEVELS**self.qubit_count)
            for i in dv.computational_indices(self.qubit_count):
                pops[i] = (1 - survival) / d
            pops[0] += survival
            return dv.ground_probability(np.diag(pops), self.spam)

        run.needs_sequence = False  # only the depth matters
        return run


class _PulseSim1Q:
    def __init__(self, device: dv.DeviceModel, mode: RbMode):
        self.device = device
        self.mode = mode
        q, pulse = device.qubits[0], device.pulses[0]
        self.phases = (0.0, np.pi / 2, np.pi, -np.pi / 2)
        self.table = np.array(
            [dv.xy_pulse_unitary(pulse, q, ph, device.dt) for ph in self.phases]
            + [np.eye(dv.LEVELS)]
        )
        self.step_op = len(self.phases)
        self.clifford_pulses = [self._pulses(e.decomposition) for e in cl.enumerate_group(1)]
        self.rho0 = dv.initial_density(1, device.spam)
        self.lines = bool(device.forward_response.poles) or device.correction is not None
        if mode.kind == "interleaved" and mode.gate != "step":
            self.inter_pulses = self._pulses([mode.gate])
        else:
            self.inter_pulses = []

    def _pulses(self, labels) -> list[int]:
        out = []
        for lab in labels:
            for ph in dv.PULSE_PHASES[lab]:
                out.append(self.phases.index(ph) if ph in self.phases else 3)
        return out

    def compile(self, seq: cl.RbSequence) -> list[int]:
        ops: list[int] = []
        for e in seq.elements:
            ops.extend(self.clifford_pulses[e.index])
            if self.mode.kind == "interleaved":
                ops.extend(self.inter_pulses if self.mode.gate != "step" else [self.step_op])
        ops.extend(self.clifford_pulses[seq.recovery.index])
        return ops

    def _zphases(self, ops: list[int]) -> np.ndarray:
        dev = self.device
        zph = np.zeros((len(ops), 2))
        has_step = self.step_op in ops
        if not has_step and not self.lines:
            return zph
        dt = dev.dt
        n_pulse = int(round(dev.pulses[0].gate_length / dt))
        n_step = int(round(dev.step.duration / dt))
        is_step = np.asarray(ops) == self.step_op
        lengths = np.where(is_step, n_step, n_pulse)
        ends = np.cumsum(lengths)
        starts = ends - lengths
        # ideal waveform: +detuning edge at each step start, -detuning at its end
        edges = np.zeros(int(ends[-1]) + 1)
        np.add.at(edges, starts[is_step], dev.step.detuning)
        np.add.at(edges, ends[is_step], -dev.step.detuning)
        ideal = np.cumsum(edges[:-1])
        det = dv.line_output(ideal, dev.forward_response, dev.correction, dt)
        cum = np.concatenate([[0.0], np.cumsum(det)]) * dt * dv.TWO_PI
        mids = starts + lengths // 2
        zph[:, 0] = np.where(is_step, cum[ends] - cum[starts], cum[mids] - cum[starts])
        zph[:, 1] = np.where(is_step, dev.phase_correction, cum[ends] - cum[mids])
        return zph

    def __call__(self, seq: cl.RbSequence, rng_seed) -> float:
        ops = self.compile(seq)
        dev = self.device
        noise = np.array([[0.0 if o == self.step_op else dev.noise.sq_depolarizing] for o in ops])
        if self.mode.kind == "simultaneous":
            table, op_idx = self._crosstalk_table(ops, rng_seed)
        else:
            table, op_idx = self.table, np.asarray(ops, dtype=np.int64)
        if len(op_idx) == 0:
            rho = self.rho0
        else:
            rho = _run_density(1, self.rho0, table, op_idx, self._zphases(ops), noise)
        return dv.ground_probability(rho, dev.spam)

    def _crosstalk_table(self, ops: list[int], rng_seed):
        dev = self.device
        xt = self.mode.crosstalk
        duration = len(ops) * dev.pulses[0].gate_length
        n_agg = int(np.ceil(duration / xt.gate_length)) + 1
        # aggressor plays its own random Clifford stream, pulse after pulse
        rng = np.random.default_rng(rng_seed)
        agg: list[float] = []
        while len(agg) < n_agg:
            e = cl.group(1)[int(rng.integers(0, 24))]
            for lab in e.decomposition:
                agg.extend(dv.PULSE_PHASES[lab])
        phases = [self.phases[o] for o in ops]
        table = dv.victim_pulse_unitaries(dev, phases, xt, agg[:n_agg])
        return table, np.arange(len(ops), dtype=np.int64)


class _PulseSim2Q:
    def __init__(self, device: dv.DeviceModel, mode: RbMode):
        if device.cz is None:
            raise ValueError("two-qubit device needs a CZ trajectory")
        if mode.kind == "simultaneous":
            raise ValueError("simultaneous mode is single-qubit only")
        self.device = device
        self.mode = mode
        g1 = cl.enumerate_group(1)
        lam = device.noise.sq_depolarizing
        per_q = []
        counts = []
        for qi in range(2):
            q, pulse = device.qubits[qi], device.pulses[qi]
            us = []
            for e in g1:
                u = np.eye(dv.LEVELS, dtype=complex)
                for lab in e.decomposition:
                    u = dv.gate_unitary(lab, pulse, q, device.dt) @ u
                us.append(u)
            per_q.append(us)
        counts = np.array([dv.pulse_count(e.decomposition) for e in g1])
        table = np.empty((24 * 24 + 1, 9, 9), dtype=complex)
        for i0 in range(24):
            for i1 in range(24):
                table[i0 * 24 + i1] = np.kron(per_q[0][i0], per_q[1][i1])
        self.cz_op = 24 * 24
        table[self.cz_op] = dv.cz_unitary(device.cz, device.qubits, device.dt)
        self.table = table
        self.layer_noise = 1.0 - (1.0 - lam) ** counts
        self.cz_noise = device.noise.cz_depolarizing
        self.rho0 = dv.initial_density(2, device.spam)
        self.inter = self._label_ops(mode.gate) if mode.kind == "interleaved" else []

    def _label_ops(self, label: str) -> list:
        if label == "CZ":
            return ["CZ"]
        if label == "I":
            return []
        lab, _, q = label.partition("@")
        idx = cl.group(1).lookup(cl.PHYSICAL_GATES_1Q[lab]).index
        return [(idx, 0) if q == "0" else (0, idx)]

    def compile(self, seq: cl.RbSequence) -> list:
        layers: list = []
        for e in seq.elements:
            layers.extend(e.layers)
            layers.extend(self.inter)
        layers.extend(seq.recovery.layers)
        return layers

    def __call__(self, seq: cl.RbSequence, rng_seed) -> float:
        layers = self.compile(seq)
        ops = np.empty(len(layers), dtype=np.int64)
        noise = np.zeros((len(layers), 2))
        for i, layer in enumerate(layers):
            if layer == "CZ":
                ops[i] = self.cz_op
                noise[i] = self.cz_noise
            else:
                i0, i1 = layer
                ops[i] = i0 * 24 + i1
                noise[i] = self.layer_noise[i0], self.layer_noise[i1]
        if len(ops) == 0:
            rho = self.rho0
        else:
            zph = np.zeros((len(ops), 2))
            rho = _run_density(2, self.rho0, self.table, ops, zph, noise)
        return dv.ground_probability(rho, self.device.spam)


@dataclass(frozen=True)
class _Depth:
    m: int


def make_simulator(device, mode: RbMode) -> Callable:
    """Callable (sequence, seed) -> exact sequence fidelity for a device or oracle."""
    if isinstance(device, DepolarizingOracle):
        return device.simulator(mode)
    if device.qubit_count == 1:
        return _PulseSim1Q(device, mode)
    return _PulseSim2Q(device, mode)


def qubit_count_of(device) -> int:
    return device.qubit_count


# ---------------------------------------------------------------------------
# curves and fits


def run_rb_curve(
    device,
    mode: RbMode,
    m_values: Sequence[int],
    k: int,
    repetitions: int,
    rng_seed,
    parallel: int = 1,
) -> RbCurve:
    """k random sequences per m, simulated and measured; deterministic per seed."""
    m_values = tuple(int(m) for m in m_values)
    if not m_values:
        raise ValueError("m_values must be nonempty")
    if list(m_values) != sorted(m_values):
        raise ValueError("m_values must be ascending")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = qubit_count_of(device)
    sim = make_simulator(device, mode)
    jobs = [(i, j) for i in range(len(m_values)) for j in range(k)]

    full = getattr(sim, "needs_sequence", True)

    def one(job):
        i, j = job
        if full:
            seq = cl.sample_sequence(
                m_values[i], n, mode.recovery_gate, child_seed(rng_seed, 0, i, j)
            )
        else:
            seq = _Depth(m_values[i])
        p = sim(seq, child_seed(rng_seed, 2, i, j))
        p = min(max(p, 0.0), 1.0)
        if repetitions == 0:
            return p
        rng = np.random.default_rng(child_seed(rng_seed, 1, i, j))
        return rng.binomial(repetitions, p) / repetitions

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            values = list(pool.map(one, jobs))
    else:
        values = [one(job) for job in jobs]
    fid = np.array(values, dtype=float).reshape(len(m_values), k)
    return RbCurve(m_values, fid, k, repetitions, mode, n)


@dataclass(frozen=True)
class DecayFit:
    A: float
    B: float
    p: float
    r: float
    qubit_count: int
    residual_norm: float
    converged: bool
    p_stderr: float = float("nan")

    def model(self, m) -> np.ndarray:
        return self.A * self.p ** np.asarray(m, dtype=float) + self.B

    def as_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "p": self.p,
            "r": self.r,
            "residual": self.residual_norm,
            "converged": self.converged,
            "p_stderr": self.p_stderr,
        }


def error_from_p(p: float, qubit_count: int) -> float:
    d = 2**qubit_count
    return (1.0 - p) * (d - 1) / d


def p_from_error(r: float, qubit_count: int) -> float:
    d = 2**qubit_count
    return 1.0 - r * d / (d - 1)


def _initial_guess(m, f):
    b0 = float(np.min(f))
    a0 = float(np.max(f)) - b0
    y = f - b0
    mask = y > 1e-9
    p0 = 0.99
    if mask.sum() >= 2:
        slope = np.polyfit(m[mask], np.log(y[mask]), 1)[0]
        p0 = float(np.clip(np.exp(slope), 1e-3, 1.0))
    return a0, b0, p0


def fit_decay_points(m_values, means, qubit_count: int = 1, max_iterations: int = 2000) -> DecayFit:
    """Least-squares fit of A p^m + B with 0 <= p <= 1 and equal weights."""
    m = np.asarray(m_values, dtype=float)
    f = np.asarray(means, dtype=float)
    if len(np.unique(m)) < 3:
        raise ValueError("fit needs at least 3 distinct m values")

    def resid(x):
        return x[0] * x[2] ** m + x[1] - f

    lo, hi = [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]
    starts = [_initial_guess(m, f)]
    # second start from the fully mixed floor guards against a shallow decay
    b_mix = 1.0 / 2**qubit_count
    starts.append((max(float(np.max(f)) - b_mix, 1e-3), b_mix, starts[0][2]))
    best = None
    for x0 in starts:
        x0 = np.clip(np.array(x0, dtype=float), 1e-9, 1 - 1e-9)
        sol = least_squares(
            resid, x0, bounds=(lo, hi), method="trf", x_scale=[0.1, 0.1, 0.01],
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iterations,
        )
        if best is None or sol.cost < best.cost:
            best = sol
    a, b, p = (float(v) for v in best.x)
    converged = bool(best.status > 0)
    if a + b > 1 + 1e-6:
        # refit on the boundary A + B = 1
        sol = least_squares(
            lambda x: (1 - x[0]) * x[1] ** m + x[0] - f,
            [min(b, 1.0), p], bounds=([0, 0], [1, 1]),
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iterations,
        )
        b, p = (float(v) for v in sol.x)
        a = 1.0 - b
        best = sol
        converged = bool(sol.status > 0)
    res = resid(np.array([a, b, p]))
    p_err = float("nan")
    dof = len(m) - 3
    if dof > 0:
        jac = np.stack([p**m, np.ones_like(m), a * m * p ** np.maximum(m - 1, 0)], axis=1)
        try:
            cov = np.linalg.inv(jac.T @ jac) * float(res @ res) / dof
            p_err = float(np.sqrt(max(cov[2, 2], 0.0)))
        except np.linalg.LinAlgError:
            pass
    return DecayFit(
        a, b, p, error_from_p(p, qubit_count), qubit_count,
        float(np.linalg.norm(res)), converged, p_err,
    )


def fit_decay(curve: RbCurve) -> DecayFit:
    return fit_decay_points(curve.m_values, curve.means, curve.qubit_count)


def gate_error(p_gate: float, p_ref: float, qubit_count: int) -> float:
    """Interleaved gate error; negative results are returned with a warning."""
    if p_ref == 0:
        raise ValueError("p_ref must be nonzero")
    d = 2**qubit_count
    r = (1.0 - p_gate / p_ref) * (d - 1) / d
    if r < 0:
        warnings.warn(f"negative extracted error {r:.3g}", NegativeErrorWarning, stacklevel=2)
    return r


def optimal_m(r: float) -> float:
    if not 0.0 < r < 0.5:
        raise ValueError(f"r must lie in (0, 0.5), got {r}")
    return -1.0 / math.log(1.0 - 2.0 * r)


@dataclass(frozen=True)
class Sensitivity:
    at_m: float
    at_optimal_m: float
    fractional: float


def sensitivity(r: float, A: float, m: float) -> Sensitivity:
    """dF/dr at m, dF/dr at m', and the fractional sensitivity r dF/dr at m'."""
    if not 0.0 < r < 0.5:
        raise ValueError(f"r must lie in (0, 0.5), got {r}")
    if A <= 0:
        raise ValueError("A must be positive")
    q = 1.0 - 2.0 * r
    at_m = -2.0 * A * m * q ** (m - 1)
    at_opt = 2.0 * A / (math.e * q * math.log(q))
    return Sensitivity(at_m, at_opt, r * at_opt)


@dataclass(frozen=True)
class InferredError:
    r: float
    clamp: str | None = None


def infer_error_at_m(f_observed: float, fit: DecayFit, m: int) -> InferredError:
    """Invert F = A p^m + B at one depth; out-of-range F is clamped and flagged."""
    a, b = fit.A, fit.B
    if a <= 0:
        raise ValueError("fit amplitude must be positive")
    if f_observed <= b:
        return InferredError(error_from_p(0.0, fit.qubit_count), "below floor")
    clamp = None
    if f_observed > a + b:
        f_observed = a + b
        clamp = "above ceiling"
    p = ((f_observed - b) / a) ** (1.0 / m)
    return InferredError(error_from_p(p, fit.qubit_count), clamp)


def inferred_error_sigma(f_observed: float, f_sigma: float, fit: DecayFit, m: int) -> float:
    """Delta-method spread of the inferred error."""
    x = (f_observed - fit.B) / fit.A
    if x <= 0:
        return float("inf")
    d = 2**fit.qubit_count
    dp_df = x ** (1.0 / m - 1.0) / (m * fit.A)
    return float(abs(dp_df) * (d - 1) / d * f_sigma)


def expected_reference_error(r_sq: float, r_cz: float) -> float:
    if r_sq < 0 or r_cz < 0:
        raise ValueError("errors must be nonnegative")
    return 8.25 * r_sq + 1.5 * r_cz


# ---------------------------------------------------------------------------
# ORBIT metric


Binding = Callable[[dv.DeviceModel, np.ndarray], dv.DeviceModel]


class OrbitCost:
    """1 - mean sequence fidelity at fixed m; fresh sequences every call.

    Call c draws its sequences from the child stream (seed, 3, c), so the
    cost sequence is reproducible given the call order.
    """

    def __init__(
        self,
        device,
        binding: Binding,
        m: int,
        k: int,
        repetitions: int,
        rng_seed,
        mode: RbMode | None = None,
        fresh: bool = True,
        parallel: int = 1,
    ):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.device = device
        self.binding = binding
        self.m = m
        self.k = k
        self.repetitions = repetitions
        self.rng_seed = rng_seed
        self.mode = mode or RbMode.reference()
        self.fresh = fresh
        self.parallel = parallel
        self.calls = 0

    def __call__(self, params) -> float:
        dev = self.binding(self.device, np.asarray(params, dtype=float))
        index = self.calls if self.fresh else 0
        self.calls += 1
        curve = run_rb_curve(
            dev, self.mode, [self.m], self.k, self.repetitions,
            child_seed(self.rng_seed, 3, index), self.parallel,
        )
        return float(1.0 - curve.means[0])

    @property
    def noise_floor(self) -> float:
        """Rough standard deviation of the cost from shot noise (0 in exact mode)."""
        if self.repetitions == 0:
            return 0.0
        return math.sqrt(0.25 / (self.k * self.repetitions))


def orbit_metric(device, params, binding: Binding, m: int, k: int, repetitions: int, rng_seed, **kw) -> float:
    return OrbitCost(device, binding, m, k, repetitions, rng_seed, **kw)(params)


# ---------------------------------------------------------------------------
# crosstalk map


@dataclass(frozen=True)
class CrosstalkMap:
    deltas: tuple[float, ...]
    gate_lengths: tuple[float, ...]
    m: int
    k: int
    seq_fidelity: np.ndarray = field(repr=False)
    seq_fidelity_sigma: np.ndarray = field(repr=False)
    inferred_error: np.ndarray = field(repr=False)
    inferred_sigma: np.ndarray = field(repr=False)
    baseline_error: float = 0.0

    @property
    def added_error(self) -> np.ndarray:
        return self.inferred_error - self.baseline_error

    def rows(self):
        for i, d in enumerate(self.deltas):
            for j, t in enumerate(self.gate_lengths):
                yield (
                    d, t, float(self.seq_fidelity[i, j]), float(self.seq_fidelity_sigma[i, j]),
                    float(self.inferred_error[i, j]), float(self.inferred_sigma[i, j]),
                )


def crosstalk_map(
    device: dv.DeviceModel,
    deltas: Sequence[float],
    gate_lengths: Sequence[float],
    m: int,
    k: int,
    reference_fit: DecayFit,
    rng_seed,
    repetitions: int = 900,
    relative_coupling: float = 0.1,
    parallel: int = 1,
) -> CrosstalkMap:
    """Simultaneous-drive sequence fidelity per cell, mapped to an inferred error."""
    deltas = tuple(float(d) for d in deltas)
    gate_lengths = tuple(float(t) for t in gate_lengths)
    if not deltas or not gate_lengths:
        raise ValueError("crosstalk grid must be nonempty")
    shape = (len(deltas), len(gate_lengths))
    fid = np.zeros(shape)
    fsig = np.zeros(shape)
    err = np.zeros(shape)
    esig = np.zeros(shape)
    for i, d in enumerate(deltas):
        for j, t in enumerate(gate_lengths):
            xt = dv.CrosstalkConfig(d, t, relative_coupling)
            curve = run_rb_curve(
                device, RbMode.simultaneous(xt), [m], k, repetitions,
                child_seed(rng_seed, 4, i, j), parallel,
            )
            fid[i, j] = curve.means[0]
            fsig[i, j] = curve.stderr[0]
            err[i, j] = infer_error_at_m(fid[i, j], reference_fit, m).r
            esig[i, j] = inferred_error_sigma(fid[i, j], fsig[i, j], reference_fit, m)
    return CrosstalkMap(
        deltas, gate_lengths, m, k, fid, fsig, err, esig, reference_fit.r
    )
