import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from orbitlab import _pykernels, kernels
from orbitlab import rb

ckernels = pytest.importorskip("orbitlab._ckernels")


def _random_hermitian(rng, n, d):
    a = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    return 0.5 * (a + np.swapaxes(a.conj(), -1, -2))


def _random_unitaries(rng, n, d):
    q, r = np.linalg.qr(rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d)))
    return q * (np.diagonal(r, axis1=1, axis2=2) / np.abs(np.diagonal(r, axis1=1, axis2=2)))[:, None, :]


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("d", [3, 9])
def test_chain_product_parity(d):
    steps = _random_unitaries(np.random.default_rng(d), 50, d)
    np.testing.assert_allclose(ckernels.chain_product(steps), _pykernels.chain_product(steps), atol=1e-12)


def test_chain_segments_parity():
    steps = _random_unitaries(np.random.default_rng(1), 40, 3)
    bounds = np.array([0, 5, 5, 23, 40], dtype=np.int64)
    np.testing.assert_allclose(
        ckernels.chain_segments(steps, bounds), _pykernels.chain_segments(steps, bounds), atol=1e-12
    )


@pytest.mark.parametrize("d", [3, 9])
def test_propagate_segments_matches_scipy_expm(d):
    rng = np.random.default_rng(7 + d)
    hams = 0.3 * _random_hermitian(rng, 30, d)
    dt = 0.05
    bounds = np.array([0, 10, 30], dtype=np.int64)
    ref = np.eye(d, dtype=complex)
    for h in hams[:10]:
        ref = expm(-1j * h * dt) @ ref
    for impl in (ckernels, _pykernels):
        out = impl.propagate_segments(hams, dt, bounds)
        np.testing.assert_allclose(out[0], ref, atol=1e-11)


def test_propagate_is_unitary():
    hams = 2.0 * _random_hermitian(np.random.default_rng(5), 400, 9)
    u = kernels.propagate(hams, 0.05)
    assert np.max(np.abs(u.conj().T @ u - np.eye(9))) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n_ops=st.integers(1, 30), two=st.booleans())
def test_evolve_density_parity(seed, n_ops, two):
    rng = np.random.default_rng(seed)
    nq = 2 if two else 1
    d = 3**nq
    table = _random_unitaries(rng, 6, d)
    ops = rng.integers(0, 6, n_ops).astype(np.int64)
    zph = rng.uniform(-np.pi, np.pi, (n_ops, 2))
    noise = rng.uniform(0, 0.05, (n_ops, nq))
    nvec = np.arange(d, dtype=float) if not two else np.zeros(d)
    rho0 = np.zeros((d, d), dtype=complex)
    rho0[0, 0] = 1
    perm, phase = rb._pauli_tables(nq)
    a = ckernels.evolve_density(rho0, table, ops, zph, nvec, noise, perm, phase)
    b = _pykernels.evolve_density(rho0, table, ops, zph, nvec, noise, perm, phase)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert abs(np.trace(a) - 1) < 1e-12
    np.testing.assert_allclose(a, a.conj().T, atol=1e-12)


def test_depolarizing_channel_fixes_maximally_mixed_qubit():
    perm, phase = rb._pauli_tables(1)
    rho0 = np.diag([0.5, 0.5, 0.0]).astype(complex)
    table = np.eye(3, dtype=complex)[None]
    out = kernels.evolve_density(
        rho0, table, np.zeros(3, np.int64), np.zeros((3, 2)), np.arange(3.0), np.full((3, 1), 0.3), perm, phase
    )
    np.testing.assert_allclose(out, rho0, atol=1e-14)


def test_depolarizing_decay_of_bloch_vector():
    # Pauli-twirl with strength lam shrinks the Bloch vector by 1 - lam
    perm, phase = rb._pauli_tables(1)
    rho0 = np.diag([1.0, 0.0, 0.0]).astype(complex)
    lam = 0.2
    out = kernels.evolve_density(
        rho0, np.eye(3, dtype=complex)[None], np.zeros(1, np.int64), np.zeros((1, 2)),
        np.arange(3.0), np.full((1, 1), lam), perm, phase,
    )
    assert out[0, 0].real - out[1, 1].real == pytest.approx(1 - lam, abs=1e-14)
