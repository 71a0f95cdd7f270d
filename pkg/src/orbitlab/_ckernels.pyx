# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: ordered propagator products and noisy density-matrix
sequence application.  Signatures mirror ``orbitlab._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

ctypedef double complex cplx


cdef inline void _matmul(cplx[:, ::1] a, cplx[:, ::1] b, cplx[:, ::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef cplx acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc


cdef inline void _copy(cplx[:, ::1] src, cplx[:, ::1] dst, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(d):
        for j in range(d):
            dst[i, j] = src[i, j]


def chain_product(cplx[:, :, ::1] steps):
    """U = steps[N-1] @ ... @ steps[0]."""
    cdef Py_ssize_t n = steps.shape[0], d = steps.shape[1], s
    out_arr = np.eye(d, dtype=np.complex128)
    tmp_arr = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    cdef cplx[:, ::1] tmp = tmp_arr
    with nogil:
        for s in range(n):
            _matmul(steps[s], out, tmp, d)
            _copy(tmp, out, d)
    return out_arr


def chain_segments(cplx[:, :, ::1] steps, cnp.int64_t[::1] bounds):
    """Products over consecutive segments steps[bounds[i]:bounds[i+1]]."""
    cdef Py_ssize_t nseg = bounds.shape[0] - 1, d = steps.shape[1], i, s, j, k
    res_arr = np.empty((nseg, d, d), dtype=np.complex128)
    tmp_arr = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, :, ::1] res = res_arr
    cdef cplx[:, ::1] tmp = tmp_arr
    with nogil:
        for i in range(nseg):
            for j in range(d):
                for k in range(d):
                    res[i, j, k] = 1.0 if j == k else 0.0
            for s in range(bounds[i], bounds[i + 1]):
                _matmul(steps[s], res[i], tmp, d)
                _copy(tmp, res[i], d)
    return res_arr


def evolve_density(
    cplx[:, ::1] rho0,
    cplx[:, :, ::1] table,
    cnp.int64_t[::1] ops,
    double[:, ::1] zphase,
    double[::1] nvec,
    double[:, ::1] noise,
    cnp.int64_t[:, :, ::1] pauli_perm,
    cplx[:, :, ::1] pauli_phase,
):
    """Apply ops in order to rho.

    Each op l: diagonal phase exp(-i zphase[l,0] n), unitary table[ops[l]],
    diagonal phase exp(-i zphase[l,1] n), then for each qudit q a depolarizing
    Pauli channel of strength noise[l, q] on that qudit's qubit subspace.
    """
    cdef Py_ssize_t d = rho0.shape[0], L = ops.shape[0], Q = noise.shape[1]
    cdef Py_ssize_t l, i, j, k, q, p
    cdef double lam, ang
    cdef cplx acc, ph
    rho_arr = np.array(rho0, dtype=np.complex128, copy=True)
    tmp_arr = np.empty((d, d), dtype=np.complex128)
    acc_arr = np.empty((d, d), dtype=np.complex128)
    ph_arr = np.empty(d, dtype=np.complex128)
    cdef cplx[:, ::1] rho = rho_arr
    cdef cplx[:, ::1] tmp = tmp_arr
    cdef cplx[:, ::1] mix = acc_arr
    cdef cplx[::1] phv = ph_arr
    cdef cplx[:, ::1] u
    with nogil:
        for l in range(L):
            for p in range(2):
                ang = zphase[l, p]
                if ang != 0.0 and p == 0:
                    for i in range(d):
                        phv[i] = cos(ang * nvec[i]) - 1j * sin(ang * nvec[i])
                    for i in range(d):
                        for j in range(d):
                            rho[i, j] = rho[i, j] * phv[i] * phv[j].conjugate()
                if p == 0:
                    u = table[ops[l]]
                    # tmp = u rho
                    for i in range(d):
                        for j in range(d):
                            acc = 0
                            for k in range(d):
                                acc = acc + u[i, k] * rho[k, j]
                            tmp[i, j] = acc
                    # rho = tmp u^dag
                    for i in range(d):
                        for j in range(d):
                            acc = 0
                            for k in range(d):
                                acc = acc + tmp[i, k] * u[j, k].conjugate()
                            rho[i, j] = acc
                if ang != 0.0 and p == 1:
                    for i in range(d):
                        phv[i] = cos(ang * nvec[i]) - 1j * sin(ang * nvec[i])
                    for i in range(d):
                        for j in range(d):
                            rho[i, j] = rho[i, j] * phv[i] * phv[j].conjugate()
            for q in range(Q):
                lam = noise[l, q]
                if lam == 0.0:
                    continue
                for i in range(d):
                    for j in range(d):
                        mix[i, j] = 0
                for p in range(4):
                    for i in range(d):
                        for j in range(d):
                            ph = pauli_phase[q, p, i] * pauli_phase[q, p, j].conjugate()
                            mix[i, j] = mix[i, j] + ph * rho[pauli_perm[q, p, i], pauli_perm[q, p, j]]
                for i in range(d):
                    for j in range(d):
                        rho[i, j] = (1.0 - lam) * rho[i, j] + 0.25 * lam * mix[i, j]
    return rho_arr


cdef void _expm_step(cplx[:, ::1] h, double dt, cplx[:, ::1] out,
                     cplx[:, ::1] term, cplx[:, ::1] tmp, Py_ssize_t d) noexcept nogil:
    """out = exp(-i h dt) by scaled Taylor series (order 10) and squaring."""
    cdef Py_ssize_t i, j, k, s, nsq = 0
    cdef double norm = 0.0, row, scale
    cdef cplx acc, coef
    for i in range(d):
        row = 0.0
        for j in range(d):
            row = row + abs(h[i, j])
        if row > norm:
            norm = row
    norm = norm * dt
    while norm > 0.25:
        norm = norm * 0.5
        nsq += 1
    scale = dt
    for s in range(nsq):
        scale = scale * 0.5
    # term = I, out = I
    for i in range(d):
        for j in range(d):
            term[i, j] = 1.0 if i == j else 0.0
            out[i, j] = term[i, j]
    for k in range(1, 11):
        coef = -1j * scale / k
        for i in range(d):
            for j in range(d):
                acc = 0
                for s in range(d):
                    acc = acc + h[i, s] * term[s, j]
                tmp[i, j] = coef * acc
        for i in range(d):
            for j in range(d):
                term[i, j] = tmp[i, j]
                out[i, j] = out[i, j] + tmp[i, j]
    for s in range(nsq):
        _matmul(out, out, tmp, d)
        _copy(tmp, out, d)


def propagate_segments(cplx[:, :, ::1] hams, double dt, cnp.int64_t[::1] bounds):
    """Products of exp(-i H_s dt) over consecutive segments of the stack."""
    cdef Py_ssize_t nseg = bounds.shape[0] - 1, d = hams.shape[1], i, s, j, k
    res_arr = np.empty((nseg, d, d), dtype=np.complex128)
    step_arr = np.empty((d, d), dtype=np.complex128)
    term_arr = np.empty((d, d), dtype=np.complex128)
    tmp_arr = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, :, ::1] res = res_arr
    cdef cplx[:, ::1] step = step_arr
    cdef cplx[:, ::1] term = term_arr
    cdef cplx[:, ::1] tmp = tmp_arr
    with nogil:
        for i in range(nseg):
            for j in range(d):
                for k in range(d):
                    res[i, j, k] = 1.0 if j == k else 0.0
            for s in range(bounds[i], bounds[i + 1]):
                _expm_step(hams[s], dt, step, term, tmp, d)
                _matmul(step, res[i], tmp, d)
                _copy(tmp, res[i], d)
    return res_arr
