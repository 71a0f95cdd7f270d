import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitlab import clifford as cl
from orbitlab import device as dv

Q = dv.TransmonParams(5.0, -0.22)
X2 = dv.calibrated_x2(Q)


def unitarity_error(u):
    return float(np.max(np.abs(u.conj().T @ u - np.eye(len(u)))))


# -- transmon and pulses ------------------------------------------------------


def test_only_three_levels_supported():
    with pytest.raises(ValueError):
        dv.TransmonParams(5.0, -0.22, levels=4)


def test_calibrated_x2_is_nearly_perfect():
    assert dv.pulse_error(X2, Q) < 1e-9
    assert dv.leakage(dv.xy_pulse_unitary(X2, Q)) < 1e-9


def test_uncalibrated_pulse_has_visible_error():
    # level shifts from the second excited state spoil a plain resonant pulse
    assert dv.pulse_error(dv.nominal_pulse(Q), Q) > 1e-4


def test_drive_frame_matches_qubit_frame_integration():
    pulse = X2.with_vector([X2.amplitude * 1.03, X2.drive_frequency + 0.002, X2.drag + 0.4])
    for phase in (0.0, np.pi / 2, -np.pi / 2, np.pi):
        a = dv.xy_pulse_unitary(pulse, Q, phase)
        b = dv.xy_pulse_unitary_qubit_frame(pulse, Q, phase)
        np.testing.assert_allclose(a, b, atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(
    amp=st.floats(0.0, 0.06),
    df=st.floats(-0.01, 0.01),
    drag=st.floats(-3, 3),
    phase=st.floats(-np.pi, np.pi),
)
def test_xy_propagators_are_unitary(amp, df, drag, phase):
    p = dv.XYPulseParams(amp, Q.f10 + df, drag, 20.0)
    assert unitarity_error(dv.xy_pulse_unitary(p, Q, phase)) <= 1e-9


@pytest.mark.parametrize("label", ["X/2", "-X/2", "Y/2", "-Y/2", "X", "Y"])
def test_gate_labels_match_ideal_gates(label):
    u = dv.gate_unitary(label, X2, Q)
    assert 1 - dv.average_gate_fidelity(u, cl.PHYSICAL_GATES_1Q[label]) < 1e-9


def test_identity_has_no_pulses():
    assert dv.pulse_count(["I"]) == 0
    np.testing.assert_array_equal(dv.gate_unitary("I", X2, Q), np.eye(3))


def test_apply_unitary_and_state_checks():
    psi = dv.basis_state(0, 3)
    out = dv.evolve_xy_pulse(psi, X2, Q)
    assert abs(np.vdot(out, out) - 1) < 1e-12
    with pytest.raises(ValueError):
        dv.check_state(np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        dv.check_state(np.ones(4) / 2, 3)


def test_average_gate_fidelity_of_ideal_is_one():
    u = np.eye(3, dtype=complex)
    assert dv.average_gate_fidelity(u, np.eye(2)) == pytest.approx(1.0)


# -- CZ -------------------------------------------------------------------------


def test_default_cz_trajectory():
    dev = dv.default_two_qubit_device()
    u = dv.cz_unitary(dev.cz, dev.qubits, dev.dt)
    assert unitarity_error(u) <= 1e-9
    assert abs(abs(dv.conditional_phase(u)) - np.pi) < 1e-4
    assert dv.leakage(u) < 1e-6
    assert dv.cz_error(dev.cz, dev.qubits) < 1e-8


def test_cz_trajectory_validation():
    with pytest.raises(ValueError):
        dv.CZTrajectoryParams(dv.CZ_DEFAULT_PARAMS[:5])


def test_detuned_cz_loses_fidelity():
    dev = dv.default_two_qubit_device()
    x = dev.cz.as_vector()
    x[0] *= 0.97
    assert dv.cz_error(dev.cz.with_vector(x), dev.qubits) > 1e-3


# -- step pulse and line model ---------------------------------------------------


def test_ideal_step_phase_is_12_95_turns():
    step = dv.StepPulseParams(-0.37, 35.0)
    assert abs(abs(step.ideal_phase) / (2 * np.pi) - 12.95) <= 0.01
    _, ideal = dv.step_waveform(step, 0.05, 0.0)
    phi = dv.accumulated_phase(ideal, 0.05)[-1]
    assert abs(abs(phi) / (2 * np.pi) - 12.95) <= 0.01


def test_step_validation():
    with pytest.raises(ValueError):
        dv.StepPulseParams(-0.37, 0.0)


def test_line_response_rejects_bad_rates():
    with pytest.raises(ValueError):
        dv.LineResponse(((0.1, -0.1),))
    with pytest.raises(ValueError):
        dv.LineResponse((), role="sideways")


def test_distorted_step_matches_analytic_step_response():
    resp = dv.LineResponse(((0.02, 0.1), (-0.01, 0.02)))
    dt = 0.05
    n = 4000
    out = dv.distort_waveform(np.ones(n), resp, dt)
    t = np.arange(n) * dt
    np.testing.assert_allclose(out, resp.step_response(t), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    a1=st.floats(-0.05, 0.05),
    g1=st.floats(0.01, 0.5),
    a2=st.floats(-0.02, 0.02),
    g2=st.floats(0.005, 0.05),
    seed=st.integers(0, 1000),
)
def test_predistortion_inverts_matching_line(a1, g1, a2, g2, seed):
    fwd = dv.LineResponse(((a1, g1), (a2, g2)))
    inv = dv.LineResponse(fwd.poles, role="inverse")
    w = np.random.default_rng(seed).normal(size=600)
    out = dv.line_output(w, fwd, inv, 0.05)
    np.testing.assert_allclose(out, w, atol=1e-9)


def test_empty_waveform_rejected():
    with pytest.raises(ValueError):
        dv.distort_waveform(np.array([]), dv.LineResponse(((0.1, 0.1),)))


def test_probe_trace_zero_without_distortion_and_nonzero_with():
    dev = dv.default_single_qubit_device()
    times = np.linspace(35.0, 235.0, 11)
    np.testing.assert_allclose(dv.probe_phase_trace(dev.step, times, dev), 0.0, atol=1e-9)
    bad = dv.default_single_qubit_device(forward_response=dv.LineResponse(((0.015, 0.1), (0.003, 0.02))))
    assert np.max(np.abs(dv.probe_phase_trace(bad.step, times, bad))) > 0.1
    with pytest.raises(ValueError):
        dv.probe_phase_trace(dev.step, [10.0], dev)


def test_probe_trace_with_shots_is_seeded():
    dev = dv.default_single_qubit_device(forward_response=dv.LineResponse(((0.015, 0.1),)))
    t = [40.0, 80.0]
    a = dv.probe_phase_trace(dev.step, t, dev, shots=500, rng_seed=4)
    b = dv.probe_phase_trace(dev.step, t, dev, shots=500, rng_seed=4)
    np.testing.assert_array_equal(a, b)


def test_step_detune_phase_is_corrected():
    dev = dv.default_single_qubit_device()
    psi = np.array([1, 1, 0], dtype=complex) / np.sqrt(2)
    out = dv.apply_step_detune(psi, dev.step, dev.forward_response, None, Q)
    out = dv.apply_unitary(out, dv.z_phase(dev.phase_correction))
    assert abs(abs(np.vdot(psi, out)) - 1) < 1e-9
    assert abs(np.angle(np.vdot(psi, out))) < 1e-6


# -- crosstalk --------------------------------------------------------------------


def test_zero_coupling_reproduces_plain_pulses():
    dev = dv.default_single_qubit_device()
    xt = dv.CrosstalkConfig(0.0, 20.0, relative_coupling=0.0)
    us = dv.victim_pulse_unitaries(dev, [0.0, np.pi / 2], xt, [0.0, 0.0])
    np.testing.assert_allclose(us[0], dv.xy_pulse_unitary(X2, Q, 0.0))


def test_resonant_aggressor_hurts_more_than_detuned():
    dev = dv.default_single_qubit_device()
    psi = dv.basis_state(0, 3)
    target = np.eye(3, dtype=complex)
    target[:2, :2] = cl.PHYSICAL_GATES_1Q["X"]
    ideal = target @ psi

    def infid(delta):
        xt = dv.CrosstalkConfig(delta, 10.0)
        out = dv.apply_crosstalk_clifford(psi, "X", xt, dev)
        return 1 - abs(np.vdot(ideal, out)) ** 2

    assert infid(0.0) > 10 * infid(0.44)


def test_crosstalk_unitaries_are_unitary():
    dev = dv.default_single_qubit_device()
    xt = dv.CrosstalkConfig(-0.22, 5.0)
    for u in dv.victim_pulse_unitaries(dev, [0.0, np.pi / 2, np.pi], xt, [0.0] * 20):
        assert unitarity_error(u) <= 1e-9


def test_crosstalk_config_validation():
    with pytest.raises(ValueError):
        dv.CrosstalkConfig(0.0, 0.0)


# -- preparation and readout ---------------------------------------------------


def test_readout_model():
    spam = dv.SpamParams(0.0, 0.05, 0.07)
    assert dv.ground_probability(dv.basis_state(0, 3), spam) == pytest.approx(0.95)
    assert dv.ground_probability(dv.basis_state(1, 3), spam) == pytest.approx(0.07)
    # leaked population reads as excited
    assert dv.ground_probability(dv.basis_state(2, 3), spam) == pytest.approx(0.07)


def test_initial_density_has_unit_trace():
    rho = dv.initial_density(2, dv.SpamParams())
    assert np.trace(rho).real == pytest.approx(1.0)
    assert rho[0, 0].real == pytest.approx(0.99**2)


def test_spam_validation():
    with pytest.raises(ValueError):
        dv.SpamParams(prep_error=1.5)
    with pytest.raises(ValueError):
        dv.NoiseParams(sq_depolarizing=-0.1)


def test_measurement_sampling():
    psi = dv.basis_state(0, 3)
    assert dv.measure_ground_probability(psi, None, 0) == 1.0
    a = dv.measure_ground_probability(psi, dv.SpamParams(), 900, 3)
    assert a == dv.measure_ground_probability(psi, dv.SpamParams(), 900, 3)
    with pytest.raises(ValueError):
        dv.measure_ground_probability(psi, None, -1)


def test_default_phase_correction_undoes_ideal_phase():
    dev = dv.default_single_qubit_device()
    total = dev.step.ideal_phase + dev.phase_correction
    assert abs(np.angle(np.exp(1j * total))) < 1e-12
