"""Backend selection for the inner loops.

The compiled extension is used when it imports; otherwise (or when
``ORBITLAB_PURE_PYTHON=1`` is set) the numpy fallback is used.  Both expose
``chain_product``, ``chain_segments``, ``propagate_segments`` and
``evolve_density``.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("ORBITLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels


def chain_product(steps: np.ndarray) -> np.ndarray:
    return _impl.chain_product(np.ascontiguousarray(steps, dtype=np.complex128))


def chain_segments(steps: np.ndarray, bounds) -> np.ndarray:
    return _impl.chain_segments(
        np.ascontiguousarray(steps, dtype=np.complex128),
        np.ascontiguousarray(bounds, dtype=np.int64),
    )


def evolve_density(rho0, table, ops, zphase, nvec, noise, pauli_perm, pauli_phase):
    return _impl.evolve_density(
        np.ascontiguousarray(rho0, dtype=np.complex128),
        np.ascontiguousarray(table, dtype=np.complex128),
        np.ascontiguousarray(ops, dtype=np.int64),
        np.ascontiguousarray(zphase, dtype=np.float64),
        np.ascontiguousarray(nvec, dtype=np.float64),
        np.ascontiguousarray(noise, dtype=np.float64),
        np.ascontiguousarray(pauli_perm, dtype=np.int64),
        np.ascontiguousarray(pauli_phase, dtype=np.complex128),
    )


def propagate_segments(hams: np.ndarray, dt: float, bounds) -> np.ndarray:
    """Ordered products of exp(-i H dt) over segments of a Hamiltonian stack."""
    return _impl.propagate_segments(
        np.ascontiguousarray(hams, dtype=np.complex128),
        float(dt),
        np.ascontiguousarray(bounds, dtype=np.int64),
    )


def propagate(hams: np.ndarray, dt: float) -> np.ndarray:
    return propagate_segments(hams, dt, [0, len(hams)])[0]


def expm_hermitian(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) for a stack of Hermitian matrices (..., d, d)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def pure_python() -> bool:
    return BACKEND == "python"
