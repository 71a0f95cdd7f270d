"""Pulse-level simulation of one or two three-level transmons.

Units: frequencies in GHz, times in ns; Hamiltonians are built in rad/ns.
Every evolution is a product of exact exponentials of piecewise-constant
Hamiltonians (midpoint sampling), so propagators are unitary to rounding.

The qubit frame (rotating at each qubit's own f10) is the reference frame for
every propagator returned here.  XY pulses are integrated in the frame of the
drive and mapped back with the carrier phase referenced to the pulse centre.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import signal

from . import kernels

TWO_PI = 2.0 * np.pi
LEVELS = 3
_A = np.diag(np.sqrt(np.arange(1, LEVELS, dtype=float)), k=1).astype(complex)
_N = np.diag(np.arange(LEVELS, dtype=float)).astype(complex)
NVEC_1Q = np.arange(LEVELS, dtype=float)

# pulse phases per physical gate label; X and Y are played as two half pulses
PULSE_PHASES = {
    "I": (),
    "X/2": (0.0,),
    "-X/2": (np.pi,),
    "Y/2": (np.pi / 2,),
    "-Y/2": (-np.pi / 2,),
    "X": (0.0, 0.0),
    "Y": (np.pi / 2, np.pi / 2),
}

CZ_PARAM_NAMES = (
    "amplitude_ghz",
    "ramp_ns",
    "hold_ns",
    "shoulder",
    "fourier_1",
    "fourier_2",
    "phase_0",
    "phase_1",
)


@dataclass(frozen=True)
class TransmonParams:
    f10: float = 5.0
    anharmonicity: float = -0.22
    levels: int = 3

    def __post_init__(self):
        if self.levels != LEVELS:
            raise ValueError(f"levels must be {LEVELS}, got {self.levels}")
        if self.anharmonicity == 0:
            raise ValueError("anharmonicity must be nonzero")

    @property
    def f21(self) -> float:
        return self.f10 + self.anharmonicity


@dataclass(frozen=True)
class XYPulseParams:
    """Cosine-envelope pulse; ``amplitude`` is the peak Rabi frequency in GHz.

    The nominal pi/2 area is amplitude * gate_length = 0.5.
    """

    amplitude: float
    drive_frequency: float
    drag: float
    gate_length: float = 20.0

    def __post_init__(self):
        if self.gate_length <= 0:
            raise ValueError("gate_length must be positive")

    def as_vector(self) -> np.ndarray:
        return np.array([self.amplitude, self.drive_frequency, self.drag])

    def with_vector(self, x: Sequence[float]) -> XYPulseParams:
        return replace(
            self, amplitude=float(x[0]), drive_frequency=float(x[1]), drag=float(x[2])
        )


@dataclass(frozen=True)
class CZTrajectoryParams:
    """Frequency excursion of qubit 0 toward the |11>-|02> crossing.

    params = (amplitude_ghz, ramp_ns, hold_ns, shoulder, fourier_1,
    fourier_2, phase_0, phase_1); the two phases are virtual-Z corrections
    applied after the excursion.
    """

    params: tuple[float, ...]
    total_time: float = 40.0
    coupling: float = 0.03

    def __post_init__(self):
        if len(self.params) != 8:
            raise ValueError(f"CZ trajectory needs 8 parameters, got {len(self.params)}")
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def as_vector(self) -> np.ndarray:
        return np.array(self.params)

    def with_vector(self, x: Sequence[float]) -> CZTrajectoryParams:
        return replace(self, params=tuple(float(v) for v in x))

    @property
    def duration(self) -> float:
        amp, ramp, hold = self.params[:3]
        return max(self.total_time, 2 * max(ramp, 0.5) + max(hold, 0.0))


@dataclass(frozen=True)
class LineResponse:
    """Step response 1 + sum_i a_i exp(-gamma_i t) of a Z control line.

    With role "forward" it models the line's distortion; with role "inverse"
    it describes the line model whose inverse is applied as predistortion.
    """

    poles: tuple[tuple[float, float], ...] = ()
    role: str = "forward"

    def __post_init__(self):
        if self.role not in ("forward", "inverse"):
            raise ValueError(f"role must be 'forward' or 'inverse', got {self.role!r}")
        poles = tuple((float(a), float(g)) for a, g in self.poles)
        for _, g in poles:
            if g <= 0:
                raise ValueError(f"pole rates must be positive, got {g}")
        object.__setattr__(self, "poles", poles)

    def step_response(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        for a, g in self.poles:
            out = out + a * np.exp(-g * t)
        return np.where(t >= 0, out, 0.0)

    def as_vector(self) -> np.ndarray:
        return np.array([v for pole in self.poles for v in pole])

    @classmethod
    def from_vector(cls, x: Sequence[float], role: str = "inverse") -> LineResponse:
        x = list(x)
        return cls(tuple((x[i], x[i + 1]) for i in range(0, len(x), 2)), role)


@dataclass(frozen=True)
class StepPulseParams:
    detuning: float = -0.37
    duration: float = 35.0
    window: float = 200.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("step duration must be positive")

    @property
    def ideal_phase(self) -> float:
        return TWO_PI * self.detuning * self.duration


@dataclass(frozen=True)
class SpamParams:
    prep_error: float = 0.01
    readout_error_0: float = 0.05
    readout_error_1: float = 0.07

    def __post_init__(self):
        for name in ("prep_error", "readout_error_0", "readout_error_1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class CrosstalkConfig:
    """Aggressor drive seen by the victim; amplitude follows area / gate_length."""

    detuning: float
    gate_length: float
    relative_coupling: float = 0.1
    area: float = 0.5

    def __post_init__(self):
        if self.gate_length <= 0:
            raise ValueError("crosstalk gate_length must be positive")

    @property
    def amplitude(self) -> float:
        return self.area / self.gate_length


@dataclass(frozen=True)
class NoiseParams:
    """Incoherent error budget: depolarizing strength per XY pulse and per CZ."""

    sq_depolarizing: float = 8e-4
    cz_depolarizing: float = 0.0

    def __post_init__(self):
        for name in ("sq_depolarizing", "cz_depolarizing"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class DeviceModel:
    qubits: tuple[TransmonParams, ...]
    pulses: tuple[XYPulseParams, ...]
    cz: CZTrajectoryParams | None = None
    forward_response: LineResponse = field(default_factory=LineResponse)
    correction: LineResponse | None = None
    step: StepPulseParams = field(default_factory=StepPulseParams)
    step_phase_correction: float | None = None
    spam: SpamParams = field(default_factory=SpamParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    dt: float = 0.05

    def __post_init__(self):
        if len(self.qubits) not in (1, 2) or len(self.pulses) != len(self.qubits):
            raise ValueError("device needs one pulse per qubit and 1 or 2 qubits")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def qubit_count(self) -> int:
        return len(self.qubits)

    @property
    def dim(self) -> int:
        return LEVELS ** self.qubit_count

    @property
    def phase_correction(self) -> float:
        """Virtual-Z applied after the step pulse (defaults to undoing the ideal phase)."""
        if self.step_phase_correction is not None:
            return self.step_phase_correction
        return float(np.mod(-self.step.ideal_phase, TWO_PI))


# ---------------------------------------------------------------------------
# state helpers


def check_state(state: np.ndarray, dim: int | None = None) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if dim is not None and state.shape[0] != dim:
        raise ValueError(f"state has dimension {state.shape[0]}, expected {dim}")
    if state.ndim == 1:
        norm = np.linalg.norm(state)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm {norm:.12g})")
    elif state.ndim == 2:
        tr = np.trace(state).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace is {tr:.12g}")
    else:
        raise ValueError("state must be a vector or a density matrix")
    return state


def apply_unitary(state: np.ndarray, u: np.ndarray) -> np.ndarray:
    if state.ndim == 1:
        return u @ state
    return u @ state @ u.conj().T


def basis_state(index: int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def z_phase(phi: float, nvec: np.ndarray = NVEC_1Q) -> np.ndarray:
    """exp(-i phi n): frequency-shift phase, level n acquires n * phi."""
    return np.diag(np.exp(-1j * phi * nvec))


def computational_indices(qubit_count: int) -> list[int]:
    return [0, 1] if qubit_count == 1 else [0, 1, 3, 4]


def average_gate_fidelity(u: np.ndarray, target: np.ndarray) -> float:
    """Average fidelity of a leaky propagator restricted to the qubit subspace."""
    n = 1 if u.shape[0] == LEVELS else 2
    idx = computational_indices(n)
    m = u[np.ix_(idx, idx)] if u.shape[0] != target.shape[0] else u
    d = target.shape[0]
    tr = np.trace(target.conj().T @ m)
    return float((abs(tr) ** 2 + np.trace(m.conj().T @ m).real) / (d * (d + 1)))


def leakage(u: np.ndarray) -> float:
    """Average population leaving the computational subspace."""
    n = 1 if u.shape[0] == LEVELS else 2
    idx = computational_indices(n)
    m = u[np.ix_(idx, idx)]
    return float(1.0 - np.trace(m.conj().T @ m).real / len(idx))


# ---------------------------------------------------------------------------
# XY pulses


def _steps(duration: float, dt: float) -> tuple[int, float]:
    n = max(1, int(round(duration / dt)))
    return n, duration / n


def envelope(pulse: XYPulseParams, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """In-phase and quadrature drive (rad/ns) at pulse-local times t."""
    tg = pulse.gate_length
    amp = TWO_PI * pulse.amplitude
    e = 0.5 * amp * (1.0 - np.cos(TWO_PI * t / tg))
    e_dot = 0.5 * amp * (TWO_PI / tg) * np.sin(TWO_PI * t / tg)
    return e, e_dot


def _drag_quadrature(pulse: XYPulseParams, qubit: TransmonParams, e_dot: np.ndarray):
    return pulse.drag * e_dot / (TWO_PI * qubit.anharmonicity)


def _anharmonic_diag(qubit: TransmonParams) -> np.ndarray:
    delta = TWO_PI * qubit.anharmonicity
    return np.array([0.0, 0.0, delta])


@functools.lru_cache(maxsize=4096)
def _xy_unitary_cached(
    pulse: XYPulseParams, qubit: TransmonParams, phase: float, dt: float
) -> np.ndarray:
    n, h = _steps(pulse.gate_length, dt)
    t = (np.arange(n) + 0.5) * h
    e, e_dot = envelope(pulse, t)
    q = _drag_quadrature(pulse, qubit, e_dot)
    omega = (e + 1j * q) * np.exp(1j * phase)
    det = TWO_PI * (qubit.f10 - pulse.drive_frequency)
    diag = det * np.arange(LEVELS) + _anharmonic_diag(qubit)
    hams = np.zeros((n, LEVELS, LEVELS), dtype=complex)
    hams[:, np.arange(LEVELS), np.arange(LEVELS)] = diag
    for k in range(LEVELS - 1):
        c = np.sqrt(k + 1) * 0.5
        hams[:, k + 1, k] = c * omega
        hams[:, k, k + 1] = c * np.conj(omega)
    u_drive = kernels.propagate(hams, h)
    # drive frame -> qubit frame, carrier phase referenced to the pulse centre
    frame = np.diag(np.exp(1j * det * np.arange(LEVELS) * pulse.gate_length / 2))
    u = frame @ u_drive @ frame
    u.setflags(write=False)
    return u


def xy_pulse_unitary(
    pulse: XYPulseParams, qubit: TransmonParams, phase: float = 0.0, dt: float = 0.05
) -> np.ndarray:
    return _xy_unitary_cached(pulse, qubit, float(phase), float(dt))


def xy_pulse_unitary_qubit_frame(
    pulse: XYPulseParams, qubit: TransmonParams, phase: float = 0.0, dt: float = 0.05
) -> np.ndarray:
    """Same pulse integrated directly in the qubit frame (chirped carrier)."""
    n, h = _steps(pulse.gate_length, dt)
    t = (np.arange(n) + 0.5) * h
    hams = xy_hamiltonians_qubit_frame(pulse, qubit, t, phase)
    return kernels.propagate(hams, h)


def xy_hamiltonians_qubit_frame(
    pulse: XYPulseParams,
    qubit: TransmonParams,
    t_local: np.ndarray,
    phase: float = 0.0,
    extra_drive: np.ndarray | None = None,
) -> np.ndarray:
    e, e_dot = envelope(pulse, t_local)
    q = _drag_quadrature(pulse, qubit, e_dot)
    det = TWO_PI * (qubit.f10 - pulse.drive_frequency)
    omega = (e + 1j * q) * np.exp(1j * phase) * np.exp(
        1j * det * (t_local - pulse.gate_length / 2)
    )
    if extra_drive is not None:
        omega = omega + extra_drive
    return drive_hamiltonians(qubit, omega)


def drive_hamiltonians(qubit: TransmonParams, omega: np.ndarray) -> np.ndarray:
    """Qubit-frame Hamiltonians for complex drive samples omega (rad/ns)."""
    n = len(omega)
    hams = np.zeros((n, LEVELS, LEVELS), dtype=complex)
    hams[:, 2, 2] = TWO_PI * qubit.anharmonicity
    for k in range(LEVELS - 1):
        c = np.sqrt(k + 1) * 0.5
        hams[:, k + 1, k] = c * omega
        hams[:, k, k + 1] = c * np.conj(omega)
    return hams


def evolve_xy_pulse(
    state: np.ndarray,
    pulse: XYPulseParams,
    qubit: TransmonParams,
    phase: float = 0.0,
    dt: float = 0.05,
) -> np.ndarray:
    state = check_state(state, LEVELS)
    return apply_unitary(state, xy_pulse_unitary(pulse, qubit, phase, dt))


def gate_unitary(label: str, pulse: XYPulseParams, qubit: TransmonParams, dt: float = 0.05):
    """Physical propagator of a single-qubit gate label ("X/2", "Y", ...)."""
    u = np.eye(LEVELS, dtype=complex)
    for ph in PULSE_PHASES[label]:
        u = xy_pulse_unitary(pulse, qubit, ph, dt) @ u
    return u


def pulse_count(labels: Sequence[str]) -> int:
    return sum(len(PULSE_PHASES[lab]) for lab in labels)


def nominal_pulse(qubit: TransmonParams, gate_length: float = 20.0) -> XYPulseParams:
    return XYPulseParams(0.5 / gate_length, qubit.f10, 0.0, gate_length)


# ---------------------------------------------------------------------------
# CZ


def _ramp_profile(u: np.ndarray, shoulder: float, c1: float, c2: float) -> np.ndarray:
    smooth = 0.5 * (1.0 - np.cos(np.pi * u))
    prof = (1.0 - shoulder) * smooth + shoulder * u
    prof = prof + c1 * 0.5 * (1.0 - np.cos(TWO_PI * u)) + c2 * 0.5 * (1.0 - np.cos(2 * TWO_PI * u))
    return prof


def cz_excursion(traj: CZTrajectoryParams, t: np.ndarray) -> np.ndarray:
    """Frequency shift (GHz) of qubit 0 along the trajectory."""
    amp, ramp, hold, shoulder, c1, c2 = traj.params[:6]
    ramp = max(ramp, 0.5)
    hold = max(hold, 0.0)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    up = (t >= 0) & (t < ramp)
    out[up] = _ramp_profile(t[up] / ramp, shoulder, c1, c2)
    mid = (t >= ramp) & (t < ramp + hold)
    out[mid] = 1.0
    down = (t >= ramp + hold) & (t < 2 * ramp + hold)
    out[down] = _ramp_profile((2 * ramp + hold - t[down]) / ramp, shoulder, c1, c2)
    return amp * out


def _two_qudit_ops():
    eye = np.eye(LEVELS)
    a0 = np.kron(_A, eye)
    a1 = np.kron(eye, _A)
    n0 = np.kron(_N, eye).real.diagonal()
    n1 = np.kron(eye, _N).real.diagonal()
    return a0, a1, n0, n1


_A0, _A1, _N0, _N1 = _two_qudit_ops()
NVEC_2Q = (_N0, _N1)


def _cz_static(qubits: Sequence[TransmonParams], coupling: float):
    q0, q1 = qubits
    d0 = TWO_PI * q0.anharmonicity
    d1 = TWO_PI * q1.anharmonicity
    diag = TWO_PI * (q0.f10 - q1.f10) * _N0 + 0.5 * d0 * _N0 * (_N0 - 1) + 0.5 * d1 * _N1 * (_N1 - 1)
    g = TWO_PI * coupling
    hc = g * (_A0.conj().T @ _A1 + _A0 @ _A1.conj().T)
    return diag, hc


@functools.lru_cache(maxsize=16)
def dressed_basis(qubits: tuple[TransmonParams, ...], coupling: float):
    """Idle eigenvectors matched to bare states, and their energies (rad/ns)."""
    diag, hc = _cz_static(qubits, coupling)
    h = np.diag(diag) + hc
    w, v = np.linalg.eigh(h)
    order = np.argmax(np.abs(v) ** 2, axis=0)
    if len(set(order)) != len(order):
        raise RuntimeError("dressed states cannot be matched to bare states")
    vecs = np.zeros_like(v)
    energies = np.zeros(len(w))
    for col, bare in enumerate(order):
        vec = v[:, col]
        vec = vec * np.exp(-1j * np.angle(vec[bare]))
        vecs[:, bare] = vec
        energies[bare] = w[col]
    vecs.setflags(write=False)
    energies.setflags(write=False)
    return vecs, energies


def cz_hamiltonians(traj: CZTrajectoryParams, qubits, dt: float):
    n, h = _steps(traj.duration, dt)
    t = (np.arange(n) + 0.5) * h
    diag, hc = _cz_static(qubits, traj.coupling)
    exc = TWO_PI * cz_excursion(traj, t)
    hams = np.broadcast_to(hc, (n,) + hc.shape).copy()
    idx = np.arange(len(diag))
    hams[:, idx, idx] += diag[None, :] + exc[:, None] * _N0[None, :]
    return hams, h


def cz_unitary(traj: CZTrajectoryParams, qubits: Sequence[TransmonParams], dt: float = 0.05):
    """9x9 CZ propagator in the dressed idle basis and local qubit frames."""
    qubits = tuple(qubits)
    hams, h = cz_hamiltonians(traj, qubits, dt)
    u_bare = kernels.propagate(hams, h)
    vecs, energies = dressed_basis(qubits, traj.coupling)
    u = vecs.conj().T @ u_bare @ vecs
    # remove free single-qudit evolution of |n0,0> and |0,n1>
    e0 = energies[np.arange(LEVELS) * LEVELS]
    e1 = energies[np.arange(LEVELS)]
    local = e0[_N0.astype(int)] + e1[_N1.astype(int)]
    u = np.exp(1j * local * traj.duration)[:, None] * u
    phase0, phase1 = traj.params[6:8]
    u = np.exp(-1j * (phase0 * _N0 + phase1 * _N1))[:, None] * u
    return u


def evolve_cz(state: np.ndarray, traj: CZTrajectoryParams, qubits, dt: float = 0.05):
    state = check_state(state, LEVELS**2)
    return apply_unitary(state, cz_unitary(traj, qubits, dt))


def conditional_phase(u: np.ndarray) -> float:
    """phi_11 - phi_10 - phi_01 + phi_00 wrapped to (-pi, pi]."""
    ph = np.angle(np.diag(u)[[0, 1, 3, 4]])
    return float(np.angle(np.exp(1j * (ph[3] - ph[2] - ph[1] + ph[0]))))


# ---------------------------------------------------------------------------
# Z line: transfer function, step pulses


def _filter_coefficients(response: LineResponse, dt: float):
    """Discrete filter (b, a) whose step response is the sampled 1 + sum a_i e^{-g_i t}."""
    den = np.array([1.0])
    for _, g in response.poles:
        den = np.convolve(den, [1.0, -np.exp(-g * dt)])
    num = den.copy()
    for i, (amp, _) in enumerate(response.poles):
        term = np.array([1.0, -1.0])
        for j, (_, g) in enumerate(response.poles):
            if j != i:
                term = np.convolve(term, [1.0, -np.exp(-g * dt)])
        num = num + amp * np.pad(term, (0, len(num) - len(term)))
    return num, den


def distort_waveform(ideal: np.ndarray, response: LineResponse, dt: float = 0.05) -> np.ndarray:
    """Pass samples through the line model: derivative convolved with the step response."""
    ideal = np.asarray(ideal, dtype=float)
    if ideal.size == 0:
        raise ValueError("empty waveform")
    if not response.poles:
        return ideal.copy()
    b, a = _filter_coefficients(response, dt)
    return signal.lfilter(b, a, ideal)


def predistort_waveform(ideal: np.ndarray, response: LineResponse, dt: float = 0.05) -> np.ndarray:
    """Apply the exact inverse of the line model described by ``response``."""
    ideal = np.asarray(ideal, dtype=float)
    if ideal.size == 0:
        raise ValueError("empty waveform")
    if not response.poles:
        return ideal.copy()
    b, a = _filter_coefficients(response, dt)
    if np.any(np.abs(np.roots(b)) >= 1.0) if len(b) > 1 else False:
        raise ValueError("correction is not invertible (unstable inverse filter)")
    return signal.lfilter(a, b, ideal)


def distort_step(ideal: np.ndarray, response: LineResponse, dt: float = 0.05) -> np.ndarray:
    """Forward distortion for role 'forward', inverse predistortion for role 'inverse'."""
    if response.role == "forward":
        return distort_waveform(ideal, response, dt)
    return predistort_waveform(ideal, response, dt)


def line_output(
    ideal: np.ndarray,
    forward: LineResponse,
    correction: LineResponse | None,
    dt: float = 0.05,
) -> np.ndarray:
    """Detuning seen by the qubit: predistort with the correction, then the line."""
    ideal = np.asarray(ideal, dtype=float)
    if ideal.size == 0:
        raise ValueError("empty waveform")
    sos = _line_sections(forward, correction, dt)
    if sos is None:
        return ideal.copy()
    return signal.sosfilt(np.array(sos), ideal)


@functools.lru_cache(maxsize=256)
def _line_sections(forward: LineResponse, correction: LineResponse | None, dt: float):
    """Cascade of second-order sections: correction inverse, then the line."""
    parts = []
    if correction is not None and correction.poles:
        bc, ac = _filter_coefficients(correction, dt)
        if len(bc) > 1 and np.any(np.abs(np.roots(bc)) >= 1.0):
            raise ValueError("correction is not invertible (unstable inverse filter)")
        parts.append(signal.tf2sos(ac, bc))
    if forward.poles:
        parts.append(signal.tf2sos(*_filter_coefficients(forward, dt)))
    if not parts:
        return None
    sos = np.concatenate(parts)
    sos.setflags(write=False)
    return sos


def step_waveform(step: StepPulseParams, dt: float = 0.05, window: float | None = None):
    """Sample times and ideal detuning of a step followed by an observation window."""
    window = step.window if window is None else window
    n_on = int(round(step.duration / dt))
    n_tot = n_on + int(round(window / dt))
    t = np.arange(n_tot) * dt
    w = np.zeros(n_tot)
    w[:n_on] = step.detuning
    return t, w


def step_detuning_trace(
    step: StepPulseParams,
    forward: LineResponse,
    correction: LineResponse | None = None,
    dt: float = 0.05,
    window: float | None = None,
):
    t, ideal = step_waveform(step, dt, window)
    return t, ideal, line_output(ideal, forward, correction, dt)


def accumulated_phase(detuning: np.ndarray, dt: float) -> np.ndarray:
    """Phase 2 pi * integral of the detuning, at the end of each sample."""
    return TWO_PI * np.cumsum(detuning) * dt


def apply_step_detune(
    state: np.ndarray,
    step: StepPulseParams,
    forward: LineResponse,
    correction: LineResponse | None,
    qubit: TransmonParams,
    dt: float = 0.05,
    window: float = 0.0,
) -> np.ndarray:
    """Evolve through the step (plus ``window`` ns of its tail) as a pure frequency shift."""
    state = check_state(state, LEVELS)
    _, _, det = step_detuning_trace(step, forward, correction, dt, window)
    phi = TWO_PI * float(np.sum(det)) * dt
    return apply_unitary(state, z_phase(phi))


def probe_phase_trace(
    step: StepPulseParams,
    times: Sequence[float],
    device: DeviceModel,
    shots: int = 0,
    rng_seed: int | np.random.SeedSequence | None = None,
) -> np.ndarray:
    """Remnant phase deviation delta-phi(t) after the step, by simulated tomography.

    A (|0>+|1>)/sqrt2 state is detuned by the distorted step, idles to t, and
    <X>, <Y> are read out (exactly, or from ``shots`` binomial samples each).
    The device's post-step phase correction is included, so a perfectly
    corrected line returns zeros.
    """
    times = np.asarray(times, dtype=float)
    dt = device.dt
    window = float(max(times.max() - step.duration, 0.0)) + dt
    _, _, det = step_detuning_trace(step, device.forward_response, device.correction, dt, window)
    phase = accumulated_phase(det, dt)
    rng = np.random.default_rng(rng_seed)
    out = []
    for t in times:
        if t < step.duration or t > step.duration + step.window + 1e-9:
            raise ValueError(f"probe time {t} ns is outside the observation window")
        n = int(round(t / dt))
        phi = phase[n - 1] + device.phase_correction
        psi = np.array([1.0, np.exp(-1j * phi), 0.0]) / np.sqrt(2.0)
        ex = 2 * (np.conj(psi[0]) * psi[1]).real
        ey = 2 * (np.conj(psi[0]) * psi[1]).imag
        if shots > 0:
            ex = 2 * rng.binomial(shots, (1 + ex) / 2) / shots - 1
            ey = 2 * rng.binomial(shots, (1 + ey) / 2) / shots - 1
        measured = np.arctan2(-ey, ex)
        out.append(float(np.angle(np.exp(1j * measured))))
    return np.array(out)


# ---------------------------------------------------------------------------
# crosstalk


def aggressor_drive(
    crosstalk: CrosstalkConfig, t: np.ndarray, pulse_phases: Sequence[float], t0: float = 0.0
) -> np.ndarray:
    """Complex drive (rad/ns) felt by the victim from back-to-back aggressor pulses.

    Pulse k occupies [t0 + k*t_gate, t0 + (k+1)*t_gate) with phase
    ``pulse_phases[k]``; the carrier sits at victim f10 + detuning.
    """
    t = np.asarray(t, dtype=float)
    tg = crosstalk.gate_length
    rel = t - t0
    k = np.floor(rel / tg).astype(int)
    valid = (rel >= 0) & (k < len(pulse_phases))
    local = rel - k * tg
    amp = TWO_PI * crosstalk.amplitude * crosstalk.relative_coupling
    env = 0.5 * amp * (1.0 - np.cos(TWO_PI * local / tg))
    phases = np.zeros_like(t)
    if len(pulse_phases):
        phases[valid] = np.asarray(pulse_phases, dtype=float)[k[valid]]
    carrier = np.exp(-1j * TWO_PI * crosstalk.detuning * t)
    return np.where(valid, env * np.exp(1j * phases) * carrier, 0.0)


def victim_pulse_unitaries(
    device: DeviceModel,
    pulse_phases: Sequence[float],
    crosstalk: CrosstalkConfig | None,
    aggressor_phases: Sequence[float] = (),
    t0: float = 0.0,
    qubit_index: int = 0,
) -> np.ndarray:
    """Propagators of back-to-back victim pulses starting at t0 under a crosstalk drive."""
    qubit = device.qubits[qubit_index]
    pulse = device.pulses[qubit_index]
    npulse = len(pulse_phases)
    if npulse == 0:
        return np.zeros((0, LEVELS, LEVELS), dtype=complex)
    if crosstalk is None or crosstalk.relative_coupling == 0.0:
        return np.array([xy_pulse_unitary(pulse, qubit, ph, device.dt) for ph in pulse_phases])
    n, h = _steps(pulse.gate_length, device.dt)
    t_local = (np.arange(n) + 0.5) * h
    hams = []
    for k, ph in enumerate(pulse_phases):
        t_abs = t0 + k * pulse.gate_length + t_local
        extra = aggressor_drive(crosstalk, t_abs, aggressor_phases)
        hams.append(xy_hamiltonians_qubit_frame(pulse, qubit, t_local, ph, extra))
    bounds = np.arange(npulse + 1) * n
    return kernels.propagate_segments(np.concatenate(hams), h, bounds)


def apply_crosstalk_clifford(
    state: np.ndarray,
    victim_gate: str,
    crosstalk: CrosstalkConfig,
    device: DeviceModel,
    aggressor_phases: Sequence[float] | None = None,
    t0: float = 0.0,
) -> np.ndarray:
    """Victim gate played while the aggressor line carries X/2-type pulses."""
    state = check_state(state, LEVELS)
    phases = PULSE_PHASES[victim_gate]
    if aggressor_phases is None:
        duration = len(phases) * device.pulses[0].gate_length
        count = int(np.ceil(duration / crosstalk.gate_length)) + 1
        aggressor_phases = [0.0] * count
    us = victim_pulse_unitaries(device, phases, crosstalk, aggressor_phases, t0)
    for u in us:
        state = apply_unitary(state, u)
    return state


# ---------------------------------------------------------------------------
# preparation and measurement


def initial_density(qubit_count: int, spam: SpamParams) -> np.ndarray:
    single = np.zeros((LEVELS, LEVELS), dtype=complex)
    single[0, 0] = 1.0 - spam.prep_error
    single[1, 1] = spam.prep_error
    rho = single
    for _ in range(qubit_count - 1):
        rho = np.kron(rho, single)
    return rho


def level_populations(state: np.ndarray) -> np.ndarray:
    if state.ndim == 1:
        return np.abs(state) ** 2
    return np.real(np.diagonal(state)).clip(min=0.0)


def _qubit_count_of(dim: int) -> tuple[int, int]:
    for levels in (LEVELS, 2):
        for n in (1, 2):
            if levels**n == dim:
                return n, levels
    raise ValueError(f"cannot interpret state of dimension {dim}")


def ground_probability(state: np.ndarray, spam: SpamParams | None = None) -> float:
    """Probability of reading every qubit as 0; levels >= 1 read as excited."""
    pops = level_populations(state)
    n, levels = _qubit_count_of(len(pops))
    if spam is None:
        return float(pops[0])
    p0 = np.full(levels, spam.readout_error_1)
    p0[0] = 1.0 - spam.readout_error_0
    weights = p0
    for _ in range(n - 1):
        weights = np.kron(weights, p0)
    return float(np.dot(pops, weights))


def measure_ground_probability(
    state: np.ndarray,
    spam: SpamParams | None,
    repetitions: int,
    rng_seed: int | np.random.SeedSequence | None = None,
) -> float:
    """Exact readout probability (repetitions == 0) or a binomial sample mean."""
    if repetitions < 0:
        raise ValueError(f"repetitions must be >= 0, got {repetitions}")
    p = min(max(ground_probability(state, spam), 0.0), 1.0)
    if repetitions == 0:
        return p
    rng = np.random.default_rng(rng_seed)
    return float(rng.binomial(repetitions, p) / repetitions)


# ---------------------------------------------------------------------------
# calibrated defaults


def pulse_error(pulse: XYPulseParams, qubit: TransmonParams, dt: float = 0.05) -> float:
    """Coherent X/2 error 1 - F_avg of a pulse (leakage included)."""
    from .clifford import PHYSICAL_GATES_1Q

    u = xy_pulse_unitary(pulse, qubit, 0.0, dt)
    return 1.0 - average_gate_fidelity(u, PHYSICAL_GATES_1Q["X/2"])


def cz_error(traj: CZTrajectoryParams, qubits, dt: float = 0.05) -> float:
    from .clifford import CZ_MATRIX

    return 1.0 - average_gate_fidelity(cz_unitary(traj, qubits, dt), CZ_MATRIX)


# numerically calibrated at dt = 0.05 ns (coherent errors below 1e-10)
X2_AMPLITUDE = 0.024656210673604653
X2_FREQUENCY_OFFSET = -0.004224767415175858
X2_DRAG = -1.0237573558882362
CZ_DEFAULT_PARAMS = (
    0.20418647899298215,
    9.45135970636749,
    20.227980699839108,
    0.0,
    0.11070614858650434,
    -0.0048746759446038615,
    -1.4350671447715304,
    -0.22594184038252318,
)


def calibrated_x2(qubit: TransmonParams, gate_length: float = 20.0) -> XYPulseParams:
    """Frozen X/2 calibration; valid for Delta/2pi = -0.22 GHz and 20 ns gates."""
    return XYPulseParams(X2_AMPLITUDE, qubit.f10 + X2_FREQUENCY_OFFSET, X2_DRAG, gate_length)


def default_single_qubit_device(**overrides) -> DeviceModel:
    qubit = TransmonParams(5.0, -0.22)
    base = dict(qubits=(qubit,), pulses=(calibrated_x2(qubit),))
    base.update(overrides)
    return DeviceModel(**base)


def default_two_qubit_device(**overrides) -> DeviceModel:
    qubits = (TransmonParams(4.5, -0.22), TransmonParams(5.0, -0.22))
    base = dict(
        qubits=qubits,
        pulses=tuple(calibrated_x2(q) for q in qubits),
        cz=CZTrajectoryParams(CZ_DEFAULT_PARAMS),
        noise=NoiseParams(sq_depolarizing=4e-4, cz_depolarizing=4e-3),
    )
    base.update(overrides)
    return DeviceModel(**base)
