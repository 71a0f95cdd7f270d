"""Compiled vs pure-Python kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--repeat N] [--end-to-end]

Step propagation is the time-ordered product of exp(-i H dt) over a pulse;
density evolution is one noisy RB sequence on the Pauli-twirled channel.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from orbitlab import _pykernels, rb

try:
    from orbitlab import _ckernels
except ImportError:
    _ckernels = None


def hermitian_stack(rng, n, d):
    a = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    return 0.05 * (a + np.swapaxes(a.conj(), -1, -2))


def unitary_stack(rng, n, d):
    q, _ = np.linalg.qr(rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d)))
    return q


def cases():
    rng = np.random.default_rng(0)
    # a 20 ns transmon pulse at 0.05 ns steps, and a 40 ns CZ on two transmons
    for name, n, d in (("propagate 1Q pulse (400 x 3x3)", 400, 3), ("propagate CZ (800 x 9x9)", 800, 9)):
        hams = hermitian_stack(rng, n, d)
        bounds = np.array([0, n], dtype=np.int64)
        yield name, lambda impl, h=hams, b=bounds: impl.propagate_segments(h, 0.05, b)
    # RB sequences: ~1.9 pulses per one-qubit Clifford at m = 200, and a two-qubit m = 30
    for name, nq, n_ops in (("evolve 1Q sequence (380 ops)", 1, 380), ("evolve 2Q sequence (300 ops)", 2, 300)):
        d = 3**nq
        table = unitary_stack(rng, 8, d)
        ops = rng.integers(0, 8, n_ops).astype(np.int64)
        zph = rng.uniform(-np.pi, np.pi, (n_ops, 2))
        noise = np.full((n_ops, nq), 8e-4)
        nvec = np.zeros(d)
        rho0 = np.zeros((d, d), dtype=complex)
        rho0[0, 0] = 1
        perm, phase = rb._pauli_tables(nq)
        args = (rho0, table, ops, zph, nvec, noise, perm, phase)
        yield name, lambda impl, a=args: impl.evolve_density(*a)


def best_of(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.2:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def end_to_end():
    code = (
        "import time; from orbitlab import rb, device as dv, kernels;"
        "t=time.perf_counter();"
        "rb.run_rb_curve(dv.default_single_qubit_device(), rb.RbMode.reference(), [1, 50, 200], 10, 0, 0);"
        "print(kernels.BACKEND, time.perf_counter()-t)"
    )
    for pure in ("0", "1"):
        env = dict(os.environ, ORBITLAB_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  rb curve (30 sequences), {backend:7s} {float(seconds):8.2f} s")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true", help="also time an RB curve under each backend")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the pure-Python backend is available")
        return 1
    print(f"{'kernel':34s} {'cython':>10s} {'python':>10s} {'speedup':>8s}")
    for name, fn in cases():
        tc = best_of(lambda: fn(_ckernels), args.repeat)
        tp = best_of(lambda: fn(_pykernels), args.repeat)
        print(f"{name:34s} {tc * 1e3:8.3f}ms {tp * 1e3:8.3f}ms {tp / tc:7.1f}x")
    if args.end_to_end:
        end_to_end()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
