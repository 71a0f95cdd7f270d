"""Single- and two-qubit Clifford groups and RB sequence sampling.

Elements are stored by a canonical, phase-normalized unitary so that two
matrices that differ only by a global phase map to the same element.  The
single-qubit group uses a fixed decomposition table over the generator set
{I, X, Y, +-X/2, +-Y/2}; the two-qubit group is built from four classes of
single-qubit layers separated by 0, 1, 2 or 3 CZ gates.

Composition convention: ``compose(a, b)`` means "apply a, then b", so the
resulting unitary is ``b.unitary @ a.unitary``.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

_SQRT2 = np.sqrt(2.0)
_I2 = np.eye(2, dtype=complex)
_PX = np.array([[0, 1], [1, 0]], dtype=complex)
_PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PZ = np.array([[1, 0], [0, -1]], dtype=complex)
CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)


def rotation(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle sigma_axis / 2) for axis in 'x', 'y', 'z'."""
    pauli = {"x": _PX, "y": _PY, "z": _PZ}[axis]
    return np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * pauli


PHYSICAL_GATES_1Q: dict[str, np.ndarray] = {
    "I": _I2.copy(),
    "X": rotation("x", np.pi),
    "Y": rotation("y", np.pi),
    "X/2": rotation("x", np.pi / 2),
    "-X/2": rotation("x", -np.pi / 2),
    "Y/2": rotation("y", np.pi / 2),
    "-Y/2": rotation("y", -np.pi / 2),
}

# Time-ordered decompositions of the 24 single-qubit Cliffords.
CLIFFORD_1Q_TABLE: tuple[tuple[str, ...], ...] = (
    # Paulis
    (),
    ("X",),
    ("Y",),
    ("Y", "X"),
    # 2pi/3 rotations
    ("X/2", "Y/2"),
    ("X/2", "-Y/2"),
    ("-X/2", "Y/2"),
    ("-X/2", "-Y/2"),
    ("Y/2", "X/2"),
    ("Y/2", "-X/2"),
    ("-Y/2", "X/2"),
    ("-Y/2", "-X/2"),
    # pi/2 rotations
    ("X/2",),
    ("-X/2",),
    ("Y/2",),
    ("-Y/2",),
    ("-X/2", "Y/2", "X/2"),
    ("-X/2", "-Y/2", "X/2"),
    # Hadamard-like
    ("X", "Y/2"),
    ("X", "-Y/2"),
    ("Y", "X/2"),
    ("Y", "-X/2"),
    ("X/2", "Y/2", "X/2"),
    ("-X/2", "Y/2", "-X/2"),
)

CZ_CLASS_SIZES = {0: 576, 1: 5184, 2: 5184, 3: 576}


def canonical_unitary(u: np.ndarray) -> np.ndarray:
    """Remove the global phase: first entry with |u| > 1e-6 becomes real positive."""
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat) > 1e-6))
    phase = flat[idx] / abs(flat[idx])
    return u / phase


def _key(u: np.ndarray) -> bytes:
    v = np.round(canonical_unitary(u), 6) + (0.0 + 0.0j)
    return v.tobytes()


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Max-entry distance between u and v after optimal global phase alignment."""
    overlap = np.vdot(v, u)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.max(np.abs(u - phase * v)))


@dataclass(frozen=True, eq=False)
class CliffordElement:
    """A group element.

    ``layers`` is the physical schedule used by the simulator: for one qubit it
    is a single ``(i,)`` tuple holding the index into the single-qubit group;
    for two qubits it is a sequence of ``(i0, i1)`` simultaneous single-qubit
    Clifford layers and ``"CZ"`` entries, in time order.
    """

    qubit_count: int
    unitary: np.ndarray = field(repr=False)
    decomposition: tuple[str, ...]
    cz_count: int
    index: int = -1
    layers: tuple = field(default=(), repr=False)

    @property
    def key(self) -> bytes:
        return _key(self.unitary)

    @property
    def label(self) -> str:
        return f"C{self.qubit_count}_{self.index}"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CliffordElement):
            return NotImplemented
        return self.qubit_count == other.qubit_count and self.key == other.key

    def __hash__(self) -> int:
        return hash((self.qubit_count, self.key))


class CliffordGroup:
    """Enumerated group with a key -> index lookup."""

    def __init__(self, qubit_count: int, elements: list[CliffordElement]):
        self.qubit_count = qubit_count
        self.elements = elements
        self.unitaries = np.array([e.unitary for e in elements])
        self._index = {e.key: i for i, e in enumerate(elements)}
        if len(self._index) != len(elements):
            raise RuntimeError("duplicate elements in Clifford enumeration")
        self.identity = self.lookup(np.eye(2**qubit_count))

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i: int) -> CliffordElement:
        return self.elements[i]

    def find(self, u: np.ndarray) -> int | None:
        return self._index.get(_key(u))

    def lookup(self, u: np.ndarray) -> CliffordElement:
        i = self.find(u)
        if i is None:
            raise ValueError("unitary is not an element of the Clifford group")
        return self.elements[i]


def _unitary_of_labels(labels: Sequence[str]) -> np.ndarray:
    u = _I2.copy()
    for lab in labels:
        u = PHYSICAL_GATES_1Q[lab] @ u
    return u


@functools.lru_cache(maxsize=None)
def _group_1q() -> CliffordGroup:
    elements = []
    for i, labels in enumerate(CLIFFORD_1Q_TABLE):
        u = canonical_unitary(_unitary_of_labels(labels))
        elements.append(
            CliffordElement(1, u, tuple(labels), 0, index=i, layers=((i,),))
        )
    return CliffordGroup(1, elements)


def _s1_sets(g1: CliffordGroup) -> tuple[list[int], list[int], list[int]]:
    """Indices of S1, S1 then Y/2, and S1 then X/2 (three elements each)."""
    r = rotation("x", 0.0)
    axis = np.ones(3) / np.sqrt(3.0)
    gen = np.cos(np.pi / 3) * _I2 - 1j * np.sin(np.pi / 3) * (
        axis[0] * _PX + axis[1] * _PY + axis[2] * _PZ
    )
    s1 = [r, gen, gen @ gen]
    y2 = PHYSICAL_GATES_1Q["Y/2"]
    x2 = PHYSICAL_GATES_1Q["X/2"]
    s1_idx = [g1.lookup(u).index for u in s1]
    s1y_idx = [g1.lookup(y2 @ u).index for u in s1]
    s1x_idx = [g1.lookup(x2 @ u).index for u in s1]
    return s1_idx, s1y_idx, s1x_idx


def _layer_unitary(g1: CliffordGroup, i0: int, i1: int) -> np.ndarray:
    # qubit 0 is the most significant tensor factor
    return np.kron(g1.unitaries[i0], g1.unitaries[i1])


def _schedule_unitary(g1: CliffordGroup, layers: Sequence) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for layer in layers:
        if layer == "CZ":
            u = CZ_MATRIX @ u
        else:
            u = _layer_unitary(g1, *layer) @ u
    return u


def _expand_labels(g1: CliffordGroup, layers: Sequence) -> tuple[str, ...]:
    out: list[str] = []
    for layer in layers:
        if layer == "CZ":
            out.append("CZ")
            continue
        for q, i in enumerate(layer):
            out.extend(f"{lab}@{q}" for lab in g1[i].decomposition)
    return tuple(out)


def _two_qubit_schedules(g1: CliffordGroup):
    s1, s1y, s1x = _s1_sets(g1)
    idx = {lab: g1.lookup(_unitary_of_labels((lab,))).index for lab in PHYSICAL_GATES_1Q}
    ident = idx["I"]
    n = len(g1)
    for a, b in itertools.product(range(n), repeat=2):
        yield (a, b), 0
    for a, b in itertools.product(range(n), repeat=2):
        for s, t in itertools.product(s1, s1y):
            yield (a, b), "CZ", (s, t)
    for a, b in itertools.product(range(n), repeat=2):
        for s, t in itertools.product(s1y, s1x):
            yield (a, b), "CZ", (idx["Y/2"], idx["-X/2"]), "CZ", (s, t)
    for a, b in itertools.product(range(n), repeat=2):
        yield (
            (a, b),
            "CZ",
            (idx["-Y/2"], idx["Y/2"]),
            "CZ",
            (idx["Y/2"], idx["-Y/2"]),
            "CZ",
            (ident, idx["Y/2"]),
        )


@functools.lru_cache(maxsize=None)
def _group_2q() -> CliffordGroup:
    g1 = _group_1q()
    elements = []
    for sched in _two_qubit_schedules(g1):
        if len(sched) == 2 and sched[1] == 0:
            layers: tuple = (sched[0],)
        else:
            layers = tuple(sched)
        u = canonical_unitary(_schedule_unitary(g1, layers))
        cz = sum(1 for lay in layers if lay == "CZ")
        elements.append(
            CliffordElement(
                2,
                u,
                _expand_labels(g1, layers),
                cz,
                index=len(elements),
                layers=layers,
            )
        )
    return CliffordGroup(2, elements)


def group(qubit_count: int) -> CliffordGroup:
    """Cached group object for 1 or 2 qubits."""
    if qubit_count == 1:
        return _group_1q()
    if qubit_count == 2:
        return _group_2q()
    raise ValueError(f"unsupported qubit count {qubit_count}; expected 1 or 2")


def enumerate_group(qubit_count: int) -> list[CliffordElement]:
    return list(group(qubit_count).elements)


def compose(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Element for "a then b"."""
    if a.qubit_count != b.qubit_count:
        raise ValueError(
            f"cannot compose {a.qubit_count}-qubit and {b.qubit_count}-qubit elements"
        )
    return group(a.qubit_count).lookup(b.unitary @ a.unitary)


def invert(a: CliffordElement) -> CliffordElement:
    return group(a.qubit_count).lookup(a.unitary.conj().T)


GateSpec = Union[str, np.ndarray, CliffordElement]


def resolve_gate(gate: GateSpec, qubit_count: int) -> CliffordElement:
    """Map an interleaved-gate spec onto a group element.

    Accepts an element, a unitary, or a label: ``"X/2"`` style labels for one
    qubit; ``"CZ"``, ``"I"`` or ``"X/2@1"`` style labels for two.
    """
    g = group(qubit_count)
    if isinstance(gate, CliffordElement):
        if gate.qubit_count != qubit_count:
            raise ValueError("interleaved gate acts on the wrong number of qubits")
        return g.lookup(gate.unitary)
    if isinstance(gate, np.ndarray):
        if gate.shape != (2**qubit_count, 2**qubit_count):
            raise ValueError(f"interleaved unitary has shape {gate.shape}")
        return g.lookup(gate)
    if qubit_count == 1:
        if gate not in PHYSICAL_GATES_1Q:
            raise ValueError(f"unknown single-qubit gate label {gate!r}")
        return g.lookup(PHYSICAL_GATES_1Q[gate])
    if gate == "CZ":
        return g.lookup(CZ_MATRIX)
    if gate == "I":
        return g.identity
    lab, sep, q = gate.partition("@")
    if not sep or lab not in PHYSICAL_GATES_1Q or q not in ("0", "1"):
        raise ValueError(f"unknown two-qubit gate label {gate!r}")
    ops = [_I2, _I2]
    ops[int(q)] = PHYSICAL_GATES_1Q[lab]
    return g.lookup(np.kron(ops[0], ops[1]))


def recovery_for(
    sequence: Sequence[CliffordElement], interleaved: GateSpec | None = None
) -> CliffordElement:
    """Element that returns the ideal sequence (with optional interleaving) to identity."""
    if not sequence:
        raise ValueError("recovery needs a nonempty sequence")
    n = sequence[0].qubit_count
    if any(c.qubit_count != n for c in sequence):
        raise ValueError("sequence mixes qubit counts")
    inter = resolve_gate(interleaved, n) if interleaved is not None else None
    total = np.eye(2**n, dtype=complex)
    for c in sequence:
        total = c.unitary @ total
        if inter is not None:
            total = inter.unitary @ total
    return group(n).lookup(total.conj().T)


@dataclass(frozen=True)
class RbSequence:
    m: int
    elements: tuple[CliffordElement, ...]
    interleaved: CliffordElement | None
    recovery: CliffordElement

    @property
    def qubit_count(self) -> int:
        return self.recovery.qubit_count

    def ideal_unitary(self) -> np.ndarray:
        n = self.qubit_count
        total = np.eye(2**n, dtype=complex)
        for c in self.elements:
            total = c.unitary @ total
            if self.interleaved is not None:
                total = self.interleaved.unitary @ total
        return self.recovery.unitary @ total


def sample_sequence(
    m: int,
    qubit_count: int,
    interleaved: GateSpec | None = None,
    rng_seed: int | np.random.SeedSequence = 0,
) -> RbSequence:
    """Uniformly random length-m sequence plus its recovery element."""
    if m < 1:
        raise ValueError(f"sequence length must be >= 1, got {m}")
    g = group(qubit_count)
    inter = resolve_gate(interleaved, qubit_count) if interleaved is not None else None
    rng = np.random.default_rng(rng_seed)
    idx = rng.integers(0, len(g), size=m)
    elements = tuple(g[int(i)] for i in idx)
    rec = recovery_for(elements, inter)
    return RbSequence(m, elements, inter, rec)


def average_cz_count() -> float:
    g = group(2)
    return sum(e.cz_count for e in g.elements) / len(g)


def is_pauli_preserving(u: np.ndarray) -> bool:
    """True if u P u^dag is +-1 times a Pauli string for every generator P."""
    n = int(round(np.log2(u.shape[0])))
    paulis = [_I2, _PX, _PY, _PZ]
    strings = [functools.reduce(np.kron, p) for p in itertools.product(paulis, repeat=n)]
    for q in range(n):
        for p in (_PX, _PZ):
            ops = [_I2] * n
            ops[q] = p
            gen = functools.reduce(np.kron, ops)
            image = u @ gen @ u.conj().T
            if not any(
                np.allclose(image, s, atol=1e-9) or np.allclose(image, -s, atol=1e-9)
                for s in strings
            ):
                return False
    return True


def dump_table(qubit_count: int) -> str:
    """Deterministic text dump: label, decomposition, cz_count per line."""
    lines = []
    for e in group(qubit_count).elements:
        decomp = " ".join(e.decomposition) if e.decomposition else "I"
        lines.append(f"{e.label}\t{decomp}\t{e.cz_count}")
    return "\n".join(lines) + "\n"
