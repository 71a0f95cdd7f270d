"""Pure numpy versions of the compiled kernels (same signatures)."""
from __future__ import annotations

import numpy as np


def chain_product(steps: np.ndarray) -> np.ndarray:
    d = steps.shape[1]
    out = np.eye(d, dtype=complex)
    for s in steps:
        out = s @ out
    return out


def chain_segments(steps: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    d = steps.shape[1]
    res = np.empty((len(bounds) - 1, d, d), dtype=complex)
    for i in range(len(bounds) - 1):
        res[i] = chain_product(steps[bounds[i] : bounds[i + 1]])
    return res


def evolve_density(
    rho0: np.ndarray,
    table: np.ndarray,
    ops: np.ndarray,
    zphase: np.ndarray,
    nvec: np.ndarray,
    noise: np.ndarray,
    pauli_perm: np.ndarray,
    pauli_phase: np.ndarray,
) -> np.ndarray:
    rho = np.array(rho0, dtype=complex, copy=True)
    for l, op in enumerate(ops):
        pre, post = zphase[l]
        if pre != 0.0:
            ph = np.exp(-1j * pre * nvec)
            rho = ph[:, None] * rho * ph.conj()[None, :]
        u = table[op]
        rho = u @ rho @ u.conj().T
        if post != 0.0:
            ph = np.exp(-1j * post * nvec)
            rho = ph[:, None] * rho * ph.conj()[None, :]
        for q in range(noise.shape[1]):
            lam = noise[l, q]
            if lam == 0.0:
                continue
            mix = np.zeros_like(rho)
            for p in range(4):
                perm = pauli_perm[q, p]
                ph = pauli_phase[q, p]
                mix += ph[:, None] * rho[np.ix_(perm, perm)] * ph.conj()[None, :]
            rho = (1.0 - lam) * rho + 0.25 * lam * mix
    return rho


def propagate_segments(hams: np.ndarray, dt: float, bounds: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hams)
    steps = (v * np.exp(-1j * w * dt)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
    return chain_segments(steps, bounds)
